/**
 * Session view state. The service is the source of truth: flags live on
 * the server and the local list only mirrors acknowledged mutations, so a
 * refresh reconstructs everything from the endpoints.
 */

import { ApiClient } from './api';
import {
  Camera,
  ClusterReport,
  ColorMode,
  EmbeddingData,
  Flag,
} from './types';

export class ViewState {
  runId: string | null = null;
  embedding: EmbeddingData | null = null;
  report: ClusterReport | null = null;
  flags: Flag[] = [];
  colorMode: ColorMode = 'view_label';
  camera: Camera = { centerX: 0, centerY: 0, scale: 1 };
  private selected = new Set<string>();

  constructor(private readonly api: ApiClient) {}

  /** Load a run's embedding, cluster report, and persisted flags. */
  async loadRun(runId: string, nPoints: number): Promise<void> {
    this.runId = runId;
    this.embedding = await this.api.getEmbedding(runId, nPoints);
    this.report = await this.api.getClusters(runId);
    this.flags = await this.api.getFlags(runId);
    this.selected.clear();
  }

  get selection(): string[] {
    return [...this.selected].sort();
  }

  /** Selection is restricted to loaded point ids. */
  setSelection(ids: Iterable<string>): void {
    if (!this.embedding) {
      throw new Error('no embedding loaded');
    }
    const known = new Set(this.embedding.ids);
    this.selected = new Set([...ids].filter((id) => known.has(id)));
  }

  selectCluster(clusterId: number): void {
    if (!this.report) {
      throw new Error('no cluster report loaded');
    }
    const cluster = this.report.clusters.find((c) => c.id === clusterId);
    if (!cluster) {
      throw new Error(`unknown cluster ${clusterId}`);
    }
    this.setSelection(cluster.member_ids);
  }

  /** Post a flag; local state updates only after the server acknowledges. */
  async addFlag(clusterId: number, flagType: string, note = ''): Promise<Flag> {
    if (!this.runId || !this.report) {
      throw new Error('no run loaded');
    }
    if (!this.report.clusters.some((c) => c.id === clusterId)) {
      throw new Error(`unknown cluster ${clusterId}`);
    }
    const flag = await this.api.postFlag(this.runId, clusterId, flagType, note);
    this.flags = [...this.flags, flag];
    return flag;
  }

  async removeFlag(flagId: number): Promise<void> {
    if (!this.runId) {
      throw new Error('no run loaded');
    }
    await this.api.deleteFlag(this.runId, flagId);
    this.flags = this.flags.filter((f) => f.flag_id !== flagId);
  }

  setColorMode(mode: ColorMode): void {
    this.colorMode = mode;
  }

  pan(dx: number, dy: number): void {
    this.camera = {
      ...this.camera,
      centerX: this.camera.centerX + dx,
      centerY: this.camera.centerY + dy,
    };
  }

  zoom(factor: number): void {
    if (factor <= 0) {
      throw new Error('zoom factor must be positive');
    }
    this.camera = { ...this.camera, scale: this.camera.scale * factor };
  }
}

/** Legend entries for a color mode, from the loaded metadata values. */
export function legendEntries(
  mode: ColorMode,
  labels: (string | null)[],
): string[] {
  const unique = new Set<string>();
  for (const label of labels) {
    unique.add(label ?? '(none)');
  }
  return [...unique].sort();
}
