/**
 * Typed client for the game service. Every number the board shows comes out
 * of these responses; nothing is recomputed on the client side.
 */

export interface Frac {
  num: number;
  den: number;
}

export interface SessionState {
  session_id: string;
  n: number;
  k: number;
  placed: number[][];
  remaining: number;
  committed: boolean;
}

export interface SessionDetail extends SessionState {
  users: number[][];
}

export interface UserDisk {
  center: number[];
  radius: number;
}

export interface BestResponse {
  point: number[];
  payoff: number;
  served: number[];
  method: string;
  disks: UserDisk[];
}

export interface Suggestion {
  kind: string;
  k: number;
  guarantee: Frac;
  points: number[][];
  epsilon?: Frac;
}

export interface VoronoiCell {
  facility: number[];
  polygon: number[][];
}

export interface VoronoiCells {
  bbox: number[][];
  cells: VoronoiCell[];
}

export interface BarEntry {
  fraction: Frac;
  value: number;
}

export interface Bars {
  ek_floor: BarEntry;
  half: BarEntry;
  upper_cap: BarEntry;
}

export interface Bounds {
  lower: Frac;
  upper: Frac;
  p2_cap: number;
  p2_floor: number;
  satisfied: { lower: boolean; upper: boolean };
}

export interface CommitResult {
  instance_id: string;
  n: number;
  k: number;
  dimension: number;
  strategy: Suggestion;
  users: number[][];
  response: { point: number[]; payoff: number; served: number[]; method: string };
  halfcell_payoff: number;
  p1_payoff: number;
  p2_payoff: number;
  bounds: Bounds;
  bars: Bars;
}

export interface CreateSessionRequest {
  users?: number[][];
  gen_spec?: string;
  k: number;
  allow_degenerate?: boolean;
}

/** Service-side rejection; `detail` is the server's explanation. */
export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body.detail === "string") detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, detail);
}

export class ApiClient {
  baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, init);
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  createSession(req: CreateSessionRequest): Promise<{ session_id: string; n: number }> {
    return this.post("/sessions", req);
  }

  getSession(id: string): Promise<SessionDetail> {
    return this.request(`/sessions/${id}`);
  }

  place(id: string, point: [number, number]): Promise<SessionState> {
    return this.post(`/sessions/${id}/place`, { point });
  }

  undo(id: string): Promise<SessionState> {
    return this.request(`/sessions/${id}/place/last`, { method: "DELETE" });
  }

  bestResponse(id: string): Promise<BestResponse> {
    return this.request(`/sessions/${id}/best-response`);
  }

  commit(id: string): Promise<CommitResult> {
    return this.post(`/sessions/${id}/commit`);
  }

  voronoi(id: string): Promise<VoronoiCells> {
    return this.request(`/sessions/${id}/voronoi`);
  }

  suggest(
    kind: string,
    sessionId: string,
    k?: number,
    epsilon?: string,
  ): Promise<Suggestion> {
    const params = new URLSearchParams({ session_id: sessionId });
    if (k !== undefined) params.set("k", String(k));
    if (epsilon !== undefined) params.set("epsilon", epsilon);
    return this.request(`/strategies/${kind}?${params}`);
  }

  epsilonTable(dim: number, kmax: number): Promise<{
    dimension: number;
    entries: { k: number; epsilon: Frac; split: { r: number; s: number }; factor: Frac }[];
  }> {
    return this.request(`/epsilon-table?dim=${dim}&kmax=${kmax}`);
  }
}

/** Render a server fraction exactly as sent, e.g. "3/7". */
export function fracText(f: Frac): string {
  return `${f.num}/${f.den}`;
}
