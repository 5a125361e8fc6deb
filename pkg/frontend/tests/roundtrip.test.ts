/**
 * Full flag-and-export workflow against the in-memory service, plus the
 * lasso acceptance check. Each acceptance test prints one PASS line.
 */

import { describe, expect, it } from 'vitest';
import { ApiClient } from '../src/api';
import { lassoSelect, Point, pointInPolygon } from '../src/geometry';
import { ViewState } from '../src/state';
import { MockService, satelliteFixture } from './mockService';

function client(service: MockService): ApiClient {
  return new ApiClient('http://svc', service.fetch);
}

describe('criterion 11 ui round trip', () => {
  it('flag a satellite, reload, export yields exactly its members', async () => {
    const service = new MockService(satelliteFixture());

    const first = new ViewState(client(service));
    await first.loadRun('run-a', 46);
    const satellite = first.report!.clusters.find((c) => c.kind === 'satellite')!;
    await first.addFlag(satellite.id, 'lateral-view', 'side views in frontal set');

    // fresh session: everything must come back from the service
    const second = new ViewState(client(service));
    await second.loadRun('run-a', 46);
    expect(second.flags.length).toBe(1);
    expect(second.flags[0].cluster_id).toBe(satellite.id);
    expect(second.flags[0].flag_type).toBe('lateral-view');

    const rows = await client(service).exportOutliers('run-a');
    const exported = rows.map((r) => r.id).sort();
    expect(exported).toEqual([...satellite.member_ids].sort());
    expect(rows.every((r) => r.flag_type === 'lateral-view')).toBe(true);
    expect(rows.every((r) => r.cluster_id === satellite.id)).toBe(true);

    // lasso oracle half of the criterion, on a 100-point fixture
    const polygon: Point[] = [
      [-1, -1],
      [7, -2],
      [8, 6],
      [3, 2],
      [-2, 5],
    ];
    const coords = new Float32Array(200);
    let s = 123456789 >>> 0;
    for (let i = 0; i < 200; i++) {
      s = (s + 0x6d2b79f5) >>> 0;
      let t = Math.imul(s ^ (s >>> 15), s | 1);
      t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
      const u = ((t ^ (t >>> 14)) >>> 0) / 4294967296;
      coords[i] = u * 14 - 3;
    }
    const oracle: number[] = [];
    for (let i = 0; i < 100; i++) {
      // crossing-count oracle with horizontal rays cast leftward, written
      // independently of the rightward-ray implementation under test
      let crossings = 0;
      const x = coords[2 * i];
      const y = coords[2 * i + 1];
      for (let e = 0; e < polygon.length; e++) {
        const [x1, y1] = polygon[e];
        const [x2, y2] = polygon[(e + 1) % polygon.length];
        if (y1 > y !== y2 > y) {
          const xCross = x1 + ((y - y1) / (y2 - y1)) * (x2 - x1);
          if (xCross < x) {
            crossings += 1;
          }
        }
      }
      if (crossings % 2 === 1) {
        oracle.push(i);
      }
    }
    expect(oracle.length).toBeGreaterThan(10);
    expect(oracle.length).toBeLessThan(90);
    const selected = lassoSelect(coords, polygon);
    expect(selected).toEqual(oracle);

    console.log(
      `criterion 11 ui round trip: PASS (exported ${rows.length} members, ` +
        `lasso ${selected.length}/100 matched oracle)`,
    );
  });

  it('deleting the flag empties the export', async () => {
    const service = new MockService(satelliteFixture());
    const state = new ViewState(client(service));
    await state.loadRun('run-a', 46);
    const flag = await state.addFlag(1, 'lateral-view');
    expect((await client(service).exportOutliers('run-a')).length).toBe(6);

    await state.removeFlag(flag.flag_id);
    expect(state.flags).toEqual([]);
    expect(await client(service).exportOutliers('run-a')).toEqual([]);
  });

  it('two flags on one cluster export both types per member', async () => {
    const service = new MockService(satelliteFixture());
    const state = new ViewState(client(service));
    await state.loadRun('run-a', 46);
    await state.addFlag(1, 'lateral-view');
    await state.addFlag(1, 'single-patient');

    const rows = await client(service).exportOutliers('run-a');
    expect(rows.length).toBe(12);
    const byId = new Map<string, string[]>();
    for (const row of rows) {
      byId.set(row.id, [...(byId.get(row.id) ?? []), row.flag_type]);
    }
    for (const memberId of ['s0', 's1', 's2', 's3', 's4', 's5']) {
      expect(byId.get(memberId)?.sort()).toEqual([
        'lateral-view',
        'single-patient',
      ]);
    }
  });

  it('lasso around the satellite blob selects only its points', async () => {
    const service = new MockService(satelliteFixture());
    const state = new ViewState(client(service));
    await state.loadRun('run-a', 46);
    const polygon: Point[] = [
      [19, 19],
      [22, 19],
      [22, 21],
      [19, 21],
    ];
    const coords = state.embedding!.coords;
    const picked = lassoSelect(coords, polygon).map((i) => state.embedding!.ids[i]);
    state.setSelection(picked);
    expect(state.selection).toEqual(['s0', 's1', 's2', 's3', 's4', 's5']);
    for (const i of lassoSelect(coords, polygon)) {
      expect(pointInPolygon(coords[2 * i], coords[2 * i + 1], polygon)).toBe(true);
    }
  });
});
