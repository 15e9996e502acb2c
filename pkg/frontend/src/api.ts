// Thin typed client over the run-service endpoints. Every number the UI
// shows comes from these calls; nothing is recomputed client-side.

import type {
  CurateResult,
  DatasetManifest,
  DiversityReport,
  FeatureModelDoc,
  RunCreated,
  RunRecord,
  SamplePage,
  SelectionDocument,
  ValidateResponse,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: unknown,
  ) {
    super(`API error ${status}`);
  }
}

export class SynthlineApi {
  constructor(
    private baseUrl: string = '/api/v1',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) throw new ApiError(response.status, body);
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  getFeatureModel(): Promise<FeatureModelDoc> {
    return this.request('/feature-model');
  }

  validateSelection(document: SelectionDocument): Promise<ValidateResponse> {
    return this.post('/selection/validate', document);
  }

  createRun(selection: SelectionDocument, options: Record<string, unknown> = {}): Promise<RunCreated> {
    return this.post('/runs', { selection, options });
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request(`/runs/${runId}`);
  }

  eventsUrl(runId: string): string {
    return `${this.baseUrl}/runs/${runId}/events`;
  }

  datasetUrl(runId: string, format: 'csv' | 'json'): string {
    return `${this.baseUrl}/runs/${runId}/dataset?format=${format}`;
  }

  getDataset(datasetId: string): Promise<DatasetManifest> {
    return this.request(`/datasets/${datasetId}`);
  }

  getSamples(datasetId: string, offset: number, limit: number): Promise<SamplePage> {
    return this.request(`/datasets/${datasetId}/samples?offset=${offset}&limit=${limit}`);
  }

  curate(datasetId: string, params: { fraction: number; balance: boolean; seed: number }): Promise<CurateResult> {
    return this.post(`/datasets/${datasetId}/curate`, params);
  }

  getMetrics(datasetId: string): Promise<DiversityReport> {
    return this.request(`/datasets/${datasetId}/metrics`);
  }
}
