import { describe, expect, it } from "vitest";

import { BestResponse, CommitResult, SessionDetail } from "../src/api.js";
import {
  afterMutation,
  hudModel,
  initialState,
  withSession,
} from "../src/state.js";

const detail: SessionDetail = {
  session_id: "abc123",
  n: 5,
  k: 2,
  placed: [],
  remaining: 2,
  committed: false,
  users: [
    [0, 0],
    [1, 0],
    [0, 1],
    [1, 1],
    [0.4, 0.6],
  ],
};

const whatIf: BestResponse = {
  point: [0.42, 0.58],
  payoff: 3,
  served: [0, 2, 4],
  method: "sweep",
  disks: [],
};

function boardWithOnePlacement() {
  let state = withSession(initialState(), detail);
  state = afterMutation(state, {
    session_id: "abc123",
    n: 5,
    k: 2,
    placed: [[0.5, 0.5]],
    remaining: 1,
    committed: false,
  });
  return state;
}

describe("board state", () => {
  it("starts a session with a clean derived layer", () => {
    const state = withSession(
      { ...initialState(), status: "old error" },
      detail,
    );
    expect(state.session?.session_id).toBe("abc123");
    expect(state.lastBestResponse).toBeNull();
    expect(state.voronoi).toBeNull();
    expect(state.status).toBe("");
  });

  it("drops stale what-if and cells on mutation", () => {
    let state = boardWithOnePlacement();
    state = { ...state, lastBestResponse: whatIf };
    state = afterMutation(state, {
      session_id: "abc123",
      n: 5,
      k: 2,
      placed: [
        [0.5, 0.5],
        [0.9, 0.1],
      ],
      remaining: 0,
      committed: false,
    });
    expect(state.lastBestResponse).toBeNull();
    expect(state.voronoi).toBeNull();
    expect(state.session?.placed.length).toBe(2);
  });

  it("undo rebuilds exactly the earlier board", () => {
    const before = boardWithOnePlacement();
    // place a second facility, then undo it; both are server echoes
    let state = afterMutation(before, {
      session_id: "abc123",
      n: 5,
      k: 2,
      placed: [
        [0.5, 0.5],
        [0.9, 0.1],
      ],
      remaining: 0,
      committed: false,
    });
    state = afterMutation(state, {
      session_id: "abc123",
      n: 5,
      k: 2,
      placed: [[0.5, 0.5]],
      remaining: 1,
      committed: false,
    });
    expect(state).toEqual(before);
  });
});

describe("hud model", () => {
  it("shows only verbatim API values", () => {
    let state = boardWithOnePlacement();
    state = { ...state, lastBestResponse: whatIf };
    const hud = hudModel(state);
    const byLabel = Object.fromEntries(hud.lines.map((l) => [l.label, l.value]));
    expect(byLabel["users"]).toBe(String(detail.n));
    expect(byLabel["budget k"]).toBe(String(detail.k));
    expect(byLabel["remaining"]).toBe("1");
    expect(byLabel["what-if payoff"]).toBe(String(whatIf.payoff));
    expect(hud.bars).toBeNull();
  });

  it("renders commit bars from server fractions, not arithmetic", () => {
    const committed = {
      instance_id: "session-abc123",
      n: 5,
      k: 2,
      dimension: 2,
      strategy: {
        kind: "custom",
        k: 2,
        guarantee: { num: 1, den: 1 },
        points: [
          [0.5, 0.5],
          [0.9, 0.1],
        ],
      },
      users: detail.users,
      response: { point: [0.4, 0.6], payoff: 2, served: [0, 4], method: "sweep" },
      halfcell_payoff: 2,
      p1_payoff: 3,
      p2_payoff: 2,
      bounds: {
        lower: { num: 0, den: 1 },
        upper: { num: 3, den: 4 },
        p2_cap: 5,
        p2_floor: 2,
        satisfied: { lower: true, upper: true },
      },
      bars: {
        ek_floor: { fraction: { num: 3, den: 7 }, value: 2.142857142857143 },
        half: { fraction: { num: 1, den: 2 }, value: 2.5 },
        upper_cap: { fraction: { num: 3, den: 4 }, value: 3.75 },
      },
    } satisfies CommitResult;

    let state = boardWithOnePlacement();
    state = { ...state, committed };
    const hud = hudModel(state);
    const byLabel = Object.fromEntries(hud.lines.map((l) => [l.label, l.value]));
    expect(byLabel["P1 payoff"]).toBe("3");
    expect(byLabel["P2 payoff"]).toBe("2");
    expect(byLabel["follower floor"]).toBe("2");
    expect(byLabel["P1 keeps at most"]).toBe("3/4");

    expect(hud.bars).not.toBeNull();
    const texts = hud.bars!.map((b) => b.text);
    expect(texts).toEqual(["3/7", "1/2", "3/4"]);
    const widths = hud.bars!.map((b) => b.widthFraction);
    expect(widths[1]).toBeCloseTo(0.5, 12);
  });
});
