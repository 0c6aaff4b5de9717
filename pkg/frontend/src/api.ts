import type {
  DatasetMeta,
  DatasetSummary,
  Health,
  ImportanceResponse,
  JobSnapshot,
  RolesDoc,
  RunAccepted,
  RunConfig,
  RunReport,
  UploadResult,
  ValidationIssue,
} from "./types.js";

export const SCHEMA_HEADER = "X-WB-Schema";
export const SCHEMA_VERSION = "1";

/** Non-2xx response; `detail` or `errors` holds the server's explanation. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly errors: ValidationIssue[] = [],
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

/** The server speaks a schema version this client does not understand. */
export class SchemaDriftError extends Error {
  constructor(got: string | null) {
    super(`server schema version ${got ?? "(missing)"}, expected ${SCHEMA_VERSION}`);
    this.name = "SchemaDriftError";
  }
}

function explain(status: number, body: unknown): ApiError {
  if (body && typeof body === "object") {
    const doc = body as { detail?: unknown; errors?: ValidationIssue[] };
    if (Array.isArray(doc.errors)) {
      const text = doc.errors.map((e) => `${e.path}: ${e.message}`).join("; ");
      return new ApiError(status, text || `request failed (${status})`, doc.errors);
    }
    if (doc.detail !== undefined) {
      const text = Array.isArray(doc.detail) ? doc.detail.join("; ") : String(doc.detail);
      return new ApiError(status, text);
    }
  }
  return new ApiError(status, `request failed (${status})`);
}

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    const version = response.headers.get(SCHEMA_HEADER);
    if (version !== SCHEMA_VERSION) throw new SchemaDriftError(version);
    const body = await response.json();
    if (!response.ok) throw explain(response.status, body);
    return body as T;
  }

  health(): Promise<Health> {
    return this.request("/health");
  }

  uploadDataset(csv: string | Blob): Promise<UploadResult> {
    return this.request("/datasets", {
      method: "POST",
      headers: { "Content-Type": "text/csv" },
      body: csv,
    });
  }

  listDatasets(): Promise<DatasetMeta[]> {
    return this.request("/datasets");
  }

  summary(datasetId: string): Promise<DatasetSummary> {
    return this.request(`/datasets/${datasetId}/summary`);
  }

  setRoles(datasetId: string, roles: RolesDoc): Promise<DatasetMeta> {
    return this.request(`/datasets/${datasetId}/roles`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(roles),
    });
  }

  submitRun(config: RunConfig): Promise<RunAccepted> {
    return this.request("/runs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  listRuns(): Promise<JobSnapshot[]> {
    return this.request("/runs");
  }

  runState(runId: string): Promise<JobSnapshot> {
    return this.request(`/runs/${runId}`);
  }

  report(runId: string): Promise<RunReport> {
    return this.request(`/runs/${runId}/report`);
  }

  importance(runId: string): Promise<ImportanceResponse> {
    return this.request(`/runs/${runId}/importance`);
  }
}
