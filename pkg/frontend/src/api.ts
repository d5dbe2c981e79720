/**
 * Typed client for the placement service.
 *
 * Field names mirror the service's JSON payloads verbatim (snake_case);
 * nothing here computes — it only moves data.
 */

export interface NodeScoreRow {
  node: string;
  events: Record<string, number>;
  normalized_percent: Record<string, number>;
  weighted: Record<string, number>;
  total: number;
  relative: number;
  detection_time: number | null; // minutes; null = never detected
  contracts: number;
}

export interface PlacementPayload {
  per_objective: Record<string, [string, number][]>;
  consensus: Record<string, number>;
  shares: Record<string, number>;
  pareto: [number, number][];
  expected_time: number | null;
}

export interface CompletenessPayload {
  coverage: number;
  interval_hours: number | null;
  record_count: number;
  expected_records: number;
  synthesis_required: boolean;
}

export interface NetworkNode {
  id: string;
  kind: string; // "junction" | "reservoir" | "tank"
  x: number | null;
  y: number | null;
  elevation: number;
  demand: number;
}

export interface NetworkEdge {
  id: string;
  from: string;
  to: string;
  length: number;
  diameter: number;
  status: string;
}

export interface NetworkGeometry {
  title: string;
  nodes: NetworkNode[];
  edges: NetworkEdge[];
}

export interface Diagnostic {
  code: string;
  message: string;
  node: string | null;
}

export interface RunResultPayload {
  config: Record<string, unknown>;
  completeness: CompletenessPayload;
  scores: NodeScoreRow[];
  candidates: string[];
  placement: PlacementPayload;
  network: NetworkGeometry;
  timings: Record<string, number>;
  warnings: string[];
  diagnostics: Diagnostic[];
}

/** Engine-side knobs accepted by POST /runs (paths are never accepted). */
export interface RunConfigInput {
  objectives?: string[];
  sensor_count?: number;
  cutoff?: number;
  models?: Record<string, string>;
  thresholds?: Record<string, number>;
  weights?: Record<string, number>;
  region?: string;
  injection_node?: string | null;
  scenario_count?: number;
  horizon_hours?: number;
  interval_hours?: number;
  fill_method?: string;
  injection_c0?: number;
  pareto_ks?: number[];
  seed?: number;
}

export interface RunUploads {
  network: File | Blob;
  env_data?: File | Blob;
  contracts?: File | Blob;
}

/** Error payload the service returns with HTTP 400. */
export interface ServiceError {
  error: string;
  message: string;
  stage?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: ServiceError,
  ) {
    super(`${detail.error}: ${detail.message}`);
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail: ServiceError = { error: `HTTP ${resp.status}`, message: resp.statusText };
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "object") {
      detail = body.detail;
    } else if (typeof body.detail === "string") {
      detail = { error: `HTTP ${resp.status}`, message: body.detail };
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  async health(): Promise<{ status: string; runs_dir: string }> {
    const resp = await fetch(`${this.baseUrl}/health`);
    await raiseForStatus(resp);
    return resp.json();
  }

  /** Blocks until the run finishes server-side; returns the run id. */
  async startRun(uploads: RunUploads, config: RunConfigInput): Promise<string> {
    const form = new FormData();
    form.append("network", uploads.network, "network.inp");
    if (uploads.env_data) form.append("env_data", uploads.env_data, "env_data.csv");
    if (uploads.contracts) form.append("contracts", uploads.contracts, "contracts.csv");
    form.append("config", JSON.stringify(config));
    const resp = await fetch(`${this.baseUrl}/runs`, { method: "POST", body: form });
    await raiseForStatus(resp);
    const body = await resp.json();
    return body.id as string;
  }

  async getRun(id: string): Promise<RunResultPayload> {
    const resp = await fetch(`${this.baseUrl}/runs/${id}`);
    await raiseForStatus(resp);
    return resp.json();
  }

  async getScoresCsv(id: string): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/runs/${id}/scores`);
    await raiseForStatus(resp);
    return resp.text();
  }

  async getNetwork(id: string): Promise<NetworkGeometry> {
    const resp = await fetch(`${this.baseUrl}/network/${id}`);
    await raiseForStatus(resp);
    return resp.json();
  }

  async getTemplate(kind: "env" | "contracts"): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/templates/${kind}`);
    await raiseForStatus(resp);
    return resp.text();
  }
}
