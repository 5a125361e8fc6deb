/**
 * Typed client for the curation HTTP API. The embedding endpoint is
 * binary: n little-endian float32 (x, y) pairs followed by an id block of
 * u16 length + UTF-8 bytes per id. Everything else is JSON.
 */

import {
  ClusterReport,
  EmbeddingData,
  Flag,
  OutlierRow,
  PointRecord,
  RunRecord,
  SeedProbeRequest,
  SeedProbeResult,
} from './types';

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
  arrayBuffer(): Promise<ArrayBuffer>;
}>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Decode the binary embedding payload for a known point count. */
export function decodeEmbedding(buffer: ArrayBuffer, n: number): EmbeddingData {
  const coordBytes = 8 * n;
  if (buffer.byteLength < coordBytes) {
    throw new Error(
      `embedding payload too short: ${buffer.byteLength} bytes for n=${n}`,
    );
  }
  const coords = new Float32Array(buffer.slice(0, coordBytes));
  const view = new DataView(buffer);
  const decoder = new TextDecoder();
  const ids: string[] = [];
  let offset = coordBytes;
  for (let i = 0; i < n; i++) {
    if (offset + 2 > buffer.byteLength) {
      throw new Error(`embedding id block truncated at entry ${i}`);
    }
    const length = view.getUint16(offset, true);
    offset += 2;
    if (offset + length > buffer.byteLength) {
      throw new Error(`embedding id block truncated at entry ${i}`);
    }
    ids.push(decoder.decode(new Uint8Array(buffer, offset, length)));
    offset += length;
  }
  if (offset !== buffer.byteLength) {
    throw new Error(
      `embedding payload size mismatch: ${buffer.byteLength - offset} trailing bytes`,
    );
  }
  return { coords, ids };
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as T;
  }

  listRuns(): Promise<RunRecord[]> {
    return this.getJson('/api/runs');
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.getJson(`/api/runs/${runId}`);
  }

  async getEmbedding(runId: string, n: number): Promise<EmbeddingData> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/runs/${runId}/embedding`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return decodeEmbedding(await resp.arrayBuffer(), n);
  }

  getClusters(runId: string): Promise<ClusterReport> {
    return this.getJson(`/api/runs/${runId}/clusters`);
  }

  getPoints(runId: string, clusterId: number): Promise<PointRecord[]> {
    return this.getJson(`/api/runs/${runId}/points?cluster=${clusterId}`);
  }

  getFlags(runId: string): Promise<Flag[]> {
    return this.getJson(`/api/runs/${runId}/flags`);
  }

  async postFlag(
    runId: string,
    clusterId: number,
    flagType: string,
    note = '',
  ): Promise<Flag> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/runs/${runId}/flags`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ cluster_id: clusterId, flag_type: flagType, note }),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as Flag;
  }

  async deleteFlag(runId: string, flagId: number): Promise<void> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/runs/${runId}/flags/${flagId}`,
      { method: 'DELETE' },
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
  }

  async launchSeedProbe(
    runId: string,
    req: SeedProbeRequest,
  ): Promise<SeedProbeResult> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/runs/${runId}/seed-probe`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(req),
      },
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as SeedProbeResult;
  }

  /** JSON-lines export of all flagged cluster members. */
  async exportOutliers(runId: string): Promise<OutlierRow[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/runs/${runId}/export`);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    const body = await resp.text();
    return body
      .split('\n')
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as OutlierRow);
  }

  thumbnailUrl(sampleId: string): string {
    return `${this.baseUrl}/api/images/${sampleId}/thumb`;
  }
}
