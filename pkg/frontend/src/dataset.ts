// Dataset view-model: pagination, label counts, metric badges, and the
// curation summary. All values arrive from the API responses as-is.

import type { CurationReport, DatasetManifest, DiversityReport } from './types.js';

export interface Pagination {
  page: number;
  pageSize: number;
  total: number;
}

export function pageCount(pagination: Pagination): number {
  return Math.max(1, Math.ceil(pagination.total / pagination.pageSize));
}

export function pageOffset(pagination: Pagination): number {
  return pagination.page * pagination.pageSize;
}

export function clampPage(pagination: Pagination, page: number): Pagination {
  const bounded = Math.min(Math.max(0, page), pageCount(pagination) - 1);
  return { ...pagination, page: bounded };
}

export function labelCountRows(manifest: DatasetManifest): { label: string; count: number }[] {
  return Object.entries(manifest.label_counts).map(([label, count]) => ({ label, count }));
}

/** Badge text for one metric; undefined metrics render as a flag, not 0. */
export function metricBadge(value: number | null, defined: boolean): string {
  if (!defined || value === null) return 'undefined';
  return value.toFixed(3);
}

export function metricsBadges(report: DiversityReport): { ingf: string; aps: string } {
  return {
    ingf: metricBadge(report.ingf, report.ingf_defined),
    aps: metricBadge(report.aps, report.aps_defined),
  };
}

export interface CurationStageRow {
  stage: string;
  kept: number;
  removed: number;
}

export function curationStageRows(report: CurationReport): CurationStageRow[] {
  return [
    {
      stage: 'deduplication',
      kept: report.after_dedup,
      removed: report.removed_duplicate_ids.length,
    },
    {
      stage: 'similarity filter',
      kept: report.after_filter,
      removed: report.removed_similar_ids.length,
    },
    {
      stage: 'class balance',
      kept: report.after_balance,
      removed: report.removed_balance_ids.length,
    },
  ];
}
