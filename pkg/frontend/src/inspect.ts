/**
 * Cluster inspection panel: paginated thumbnail grid plus a metadata
 * summary. Points without an image path get a placeholder tile so the
 * metadata panel stays usable even when no files are on disk.
 */

import { ApiClient } from './api';
import { ClusterSummary, PointRecord } from './types';

export const PAGE_SIZE = 24;

export interface ThumbnailTile {
  id: string;
  url: string | null; // null renders as a placeholder tile
}

export interface ClusterPanel {
  clusterId: number;
  size: number;
  kind: string;
  dominantView: [string | null, number];
  dominantPatient: [string | null, number];
  pageCount: number;
}

export function pageCount(nMembers: number, pageSize = PAGE_SIZE): number {
  if (pageSize <= 0) {
    throw new Error('pageSize must be positive');
  }
  return Math.ceil(nMembers / pageSize);
}

export function paginate<T>(items: T[], page: number, pageSize = PAGE_SIZE): T[] {
  const pages = pageCount(items.length, pageSize);
  if (page < 0 || (pages > 0 && page >= pages)) {
    throw new Error(`page ${page} out of range for ${pages} pages`);
  }
  return items.slice(page * pageSize, (page + 1) * pageSize);
}

export function buildPanel(cluster: ClusterSummary): ClusterPanel {
  return {
    clusterId: cluster.id,
    size: cluster.size,
    kind: cluster.kind,
    dominantView: cluster.dominant_view,
    dominantPatient: cluster.dominant_patient,
    pageCount: pageCount(cluster.member_ids.length),
  };
}

export function thumbnailTiles(
  api: ApiClient,
  points: PointRecord[],
  page: number,
): ThumbnailTile[] {
  return paginate(points, page).map((p) => ({
    id: p.id,
    url: p.image_path === null ? null : api.thumbnailUrl(p.id),
  }));
}
