/** Typed client for the tuning service's JSON API.
 *
 * Every numeric result displayed in the UI comes from these calls; the
 * client never computes an estimate locally.
 */

export interface GraphEdge {
  i: number;
  j: number;
  omega: number;
}

export interface Graph {
  n: number;
  edges: GraphEdge[];
}

export interface Histogram {
  counts: number[];
  edges: number[];
}

export interface MarginalPayload {
  pair: [number, number];
  versus: [number, number];
  stride: number;
  n_total: number;
  y_ij: number[];
  y_kl: number[];
  histogram: Histogram;
}

export interface AtomPayload {
  pair: [number, number];
  atoms: { location: number; ancestors: number[] }[];
  raw_count: number;
}

export interface QpSolution {
  pair: [number, number] | null;
  omega_hat: number | null;
  omega_prime: number | null;
  deltas: number[];
  k1: number;
  k2: number;
  objective: number | null;
  active_count: number;
  shift: number;
  flag: string | null;
  trajectory: unknown[];
}

export interface GmmPayload {
  fit: {
    k: number;
    weights: number[];
    means: number[];
    variances: number[];
    bic: number;
    converged: boolean;
  };
  report: {
    pair: [number, number];
    method: string;
    estimate: number;
    diagnostics: Record<string, unknown>;
  };
}

export interface Report {
  accepted: { i: number; j: number; omega: number }[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = (await res.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  graph(): Promise<Graph> {
    return this.request("/api/graph");
  }

  marginal(i: number, j: number, k: number, l: number): Promise<MarginalPayload> {
    return this.request(`/api/marginal?i=${i}&j=${j}&k=${k}&l=${l}`);
  }

  atoms(i: number, j: number): Promise<AtomPayload> {
    return this.request(`/api/atoms?i=${i}&j=${j}`);
  }

  qp(i: number, j: number, K1: number, K2: number): Promise<QpSolution> {
    return this.post("/api/qp", { i, j, K1, K2 });
  }

  gmm(i: number, j: number, kmax = 3, seed = 0): Promise<GmmPayload> {
    return this.post("/api/gmm", { i, j, kmax, seed });
  }

  accept(i: number, j: number, omega: number): Promise<unknown> {
    return this.post("/api/accept", { i, j, omega });
  }

  report(): Promise<Report> {
    return this.request("/api/report");
  }
}
