/**
 * Board state and the controller that mutates it through the API.
 *
 * The state is a plain snapshot of the latest confirmed server responses;
 * there is no optimistic update and no client-side payoff arithmetic. Every
 * mutation goes through the controller, which serializes them (one in-flight
 * mutating request per session) and invalidates anything the move made
 * stale. What-if queries may run while the board repaints.
 */

import {
  ApiClient,
  ApiError,
  BestResponse,
  CommitResult,
  SessionDetail,
  SessionState,
  Suggestion,
  VoronoiCells,
  fracText,
} from "./api.js";

export interface Overlays {
  voronoi: boolean;
  disks: boolean;
  suggestion: boolean;
}

export interface BoardState {
  session: SessionDetail | null;
  lastBestResponse: BestResponse | null;
  suggestion: Suggestion | null;
  voronoi: VoronoiCells | null;
  committed: CommitResult | null;
  overlays: Overlays;
  status: string;
}

export function initialState(): BoardState {
  return {
    session: null,
    lastBestResponse: null,
    suggestion: null,
    voronoi: null,
    committed: null,
    overlays: { voronoi: false, disks: false, suggestion: true },
    status: "",
  };
}

/** Fresh board for a newly created session. */
export function withSession(state: BoardState, detail: SessionDetail): BoardState {
  return {
    ...initialState(),
    overlays: { ...state.overlays },
    session: detail,
  };
}

/**
 * Fold a confirmed mutation (place/undo) into the board. The best response,
 * the Voronoi cells, and any suggestion-match highlight refer to the old
 * facility set, so they are dropped rather than left stale.
 */
export function afterMutation(state: BoardState, next: SessionState): BoardState {
  if (!state.session) return state;
  return {
    ...state,
    session: {
      ...state.session,
      placed: next.placed,
      remaining: next.remaining,
      committed: next.committed,
    },
    lastBestResponse: null,
    voronoi: null,
    status: "",
  };
}

// ---------------------------------------------------------------------------
// HUD derivation: strings only, each one a verbatim API value

export interface HudModel {
  lines: { label: string; value: string }[];
  bars: { label: string; text: string; widthFraction: number }[] | null;
}

/**
 * Everything textual the board shows. Each value string is String() of a
 * single API field (or num/den of a server fraction); an audit of this
 * function should find no arithmetic on payoffs or counts.
 */
export function hudModel(state: BoardState): HudModel {
  const lines: { label: string; value: string }[] = [];
  const s = state.session;
  if (s) {
    lines.push({ label: "users", value: String(s.n) });
    lines.push({ label: "budget k", value: String(s.k) });
    lines.push({ label: "placed", value: String(s.placed.length) });
    lines.push({ label: "remaining", value: String(s.remaining) });
  }
  const br = state.lastBestResponse;
  if (br) {
    lines.push({ label: "what-if payoff", value: String(br.payoff) });
  }
  const sug = state.suggestion;
  if (sug) {
    lines.push({ label: "suggested", value: sug.kind });
    lines.push({ label: "guarantee", value: fracText(sug.guarantee) });
  }
  const c = state.committed;
  let bars: HudModel["bars"] = null;
  if (c) {
    lines.push({ label: "P1 payoff", value: String(c.p1_payoff) });
    lines.push({ label: "P2 payoff", value: String(c.p2_payoff) });
    lines.push({ label: "follower floor", value: String(c.halfcell_payoff) });
    lines.push({ label: "P1 keeps at least", value: fracText(c.bounds.lower) });
    lines.push({ label: "P1 keeps at most", value: fracText(c.bounds.upper) });
    bars = [
      {
        label: "net floor",
        text: fracText(c.bars.ek_floor.fraction),
        widthFraction: c.bars.ek_floor.value / c.n,
      },
      {
        label: "even split",
        text: fracText(c.bars.half.fraction),
        widthFraction: c.bars.half.value / c.n,
      },
      {
        label: "cap",
        text: fracText(c.bars.upper_cap.fraction),
        widthFraction: c.bars.upper_cap.value / c.n,
      },
    ];
  }
  return { lines, bars };
}

// ---------------------------------------------------------------------------
// Controller

export type Listener = (state: BoardState) => void;

export class BoardController {
  api: ApiClient;
  state: BoardState;
  private mutationInFlight = false;
  private listeners: Listener[] = [];

  constructor(api: ApiClient) {
    this.api = api;
    this.state = initialState();
  }

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private set(state: BoardState): void {
    this.state = state;
    this.emit();
  }

  private fail(err: unknown): void {
    const msg = err instanceof ApiError ? err.detail : String(err);
    this.set({ ...this.state, status: msg });
  }

  /**
   * Run one mutating request. Rejects re-entry instead of queueing: a second
   * click while the first is unconfirmed is ignored, which keeps the board a
   * pure function of confirmed responses.
   */
  private async mutate(op: () => Promise<void>): Promise<boolean> {
    if (this.mutationInFlight) return false;
    this.mutationInFlight = true;
    try {
      await op();
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    } finally {
      this.mutationInFlight = false;
    }
  }

  get busy(): boolean {
    return this.mutationInFlight;
  }

  async newGame(req: {
    gen_spec?: string;
    users?: number[][];
    k: number;
  }): Promise<boolean> {
    return this.mutate(async () => {
      const created = await this.api.createSession(req);
      const detail = await this.api.getSession(created.session_id);
      this.set(withSession(this.state, detail));
    });
  }

  async place(point: [number, number]): Promise<boolean> {
    const id = this.state.session?.session_id;
    if (!id) return false;
    return this.mutate(async () => {
      const next = await this.api.place(id, point);
      this.set(afterMutation(this.state, next));
    });
  }

  async undo(): Promise<boolean> {
    const id = this.state.session?.session_id;
    if (!id) return false;
    return this.mutate(async () => {
      const next = await this.api.undo(id);
      this.set(afterMutation(this.state, next));
    });
  }

  /** What-if query; read-only, so it skips the mutation lock. */
  async whatIf(): Promise<boolean> {
    const id = this.state.session?.session_id;
    if (!id) return false;
    try {
      const br = await this.api.bestResponse(id);
      this.set({ ...this.state, lastBestResponse: br, status: "" });
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async suggest(kind: string, k?: number, epsilon?: string): Promise<boolean> {
    const id = this.state.session?.session_id;
    if (!id) return false;
    try {
      const sug = await this.api.suggest(kind, id, k, epsilon);
      this.set({ ...this.state, suggestion: sug, status: "" });
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async refreshVoronoi(): Promise<boolean> {
    const id = this.state.session?.session_id;
    if (!id) return false;
    try {
      const cells = await this.api.voronoi(id);
      this.set({ ...this.state, voronoi: cells, status: "" });
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async commit(): Promise<boolean> {
    const id = this.state.session?.session_id;
    if (!id) return false;
    return this.mutate(async () => {
      const result = await this.api.commit(id);
      this.set({
        ...this.state,
        committed: result,
        session: this.state.session
          ? { ...this.state.session, committed: true }
          : null,
      });
    });
  }

  toggleOverlay(name: keyof Overlays): void {
    const overlays = { ...this.state.overlays, [name]: !this.state.overlays[name] };
    this.set({ ...this.state, overlays });
  }
}
