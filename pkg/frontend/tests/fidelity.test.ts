/**
 * End-to-end fidelity: drives a scripted session through the board's real
 * data layer against a live server, and checks that every payoff and count
 * the board would render is byte-identical to the raw API response, and
 * that the commit bars agree with the command-line artifact for the same
 * game.
 */

import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, BestResponse, fracText } from "../src/api.js";
import { BoardController, hudModel } from "../src/state.js";
import { buildScene } from "../src/render.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const GEN_SPEC = "uniform_square:24:seed=11";
const K = 2;

let server: ChildProcess;
let workDir: string;

async function waitForServer(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/epsilon-table?dim=2&kmax=1`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("server did not come up");
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "board-fidelity-"));
  server = spawn(
    "python3",
    ["-m", "voronoi_game", "serve", "--port", String(PORT)],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  let stderr = "";
  server.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });
  server.on("exit", (code) => {
    if (code !== null && code !== 0) {
      console.error(`server exited ${code}:\n${stderr}`);
    }
  });
  await waitForServer(30_000);
}, 40_000);

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("scripted session fidelity", () => {
  it("renders only verbatim API numbers and matches the CLI artifact", async () => {
    const api = new ApiClient(BASE);
    const controller = new BoardController(api);

    // fixed-seed game, k = 2
    expect(await controller.newGame({ gen_spec: GEN_SPEC, k: K })).toBe(true);
    const session = controller.state.session!;
    expect(session.n).toBe(24);

    // raw session state for byte comparison
    const rawSession = await (
      await fetch(`${BASE}/sessions/${session.session_id}`)
    ).json();
    let hud = hudModel(controller.state);
    let byLabel = Object.fromEntries(hud.lines.map((l) => [l.label, l.value]));
    expect(byLabel["users"]).toBe(String(rawSession.n));
    expect(byLabel["budget k"]).toBe(String(rawSession.k));

    // adopt the suggested recursive-net placement, point for point
    expect(await controller.suggest("eknet", K)).toBe(true);
    const suggestion = controller.state.suggestion!;
    expect(suggestion.points.length).toBe(K);
    for (const p of suggestion.points) {
      expect(await controller.place([p[0]!, p[1]!])).toBe(true);
    }

    // what-if: rendered payoff and highlight count vs the raw response
    expect(await controller.whatIf()).toBe(true);
    const rawBr = (await (
      await fetch(`${BASE}/sessions/${session.session_id}/best-response`)
    ).json()) as BestResponse;
    const rawAfterPlacing = await (
      await fetch(`${BASE}/sessions/${session.session_id}`)
    ).json();
    hud = hudModel(controller.state);
    byLabel = Object.fromEntries(hud.lines.map((l) => [l.label, l.value]));
    expect(byLabel["what-if payoff"]).toBe(String(rawBr.payoff));
    expect(byLabel["placed"]).toBe(String(rawAfterPlacing.placed.length));
    expect(byLabel["remaining"]).toBe(String(rawAfterPlacing.remaining));
    expect(rawBr.disks.length).toBe(rawAfterPlacing.n);

    const scene = buildScene(controller.state, 640, 640);
    const highlighted = scene.dots.filter((d) => d.role === "user-served");
    expect(highlighted.length).toBe(rawBr.payoff);

    // undo then re-place: the board must come back byte-identical
    const snapshot = JSON.stringify(controller.state.session);
    const last = suggestion.points[K - 1]!;
    expect(await controller.undo()).toBe(true);
    expect(controller.state.session!.placed.length).toBe(K - 1);
    expect(await controller.place([last[0]!, last[1]!])).toBe(true);
    expect(JSON.stringify(controller.state.session)).toBe(snapshot);

    // commit: bars must match the CLI run of the same game
    expect(await controller.commit()).toBe(true);
    const committed = controller.state.committed!;
    expect(committed.strategy.kind).toBe("mustafa_ray");

    const jsonPath = join(workDir, "cli-game.json");
    execFileSync("python3", [
      "-m",
      "voronoi_game",
      "play",
      "--gen",
      GEN_SPEC,
      "--k",
      String(K),
      "--strategy",
      "eknet",
      "--json",
      jsonPath,
    ]);
    const cliGame = JSON.parse(readFileSync(jsonPath, "utf-8"));

    expect(committed.p1_payoff).toBe(cliGame.p1_payoff);
    expect(committed.p2_payoff).toBe(cliGame.p2_payoff);
    expect(committed.halfcell_payoff).toBe(cliGame.halfcell_payoff);

    hud = hudModel(controller.state);
    byLabel = Object.fromEntries(hud.lines.map((l) => [l.label, l.value]));
    expect(byLabel["P1 payoff"]).toBe(String(cliGame.p1_payoff));
    expect(byLabel["P2 payoff"]).toBe(String(cliGame.p2_payoff));
    expect(byLabel["follower floor"]).toBe(String(cliGame.halfcell_payoff));

    // the three bound bars, char for char against the CLI fractions
    expect(hud.bars).not.toBeNull();
    const [netFloor, evenSplit, cap] = hud.bars!;
    expect(netFloor!.text).toBe(fracText(cliGame.bounds.lower));
    expect(evenSplit!.text).toBe("1/2");
    expect(cap!.text).toBe(fracText(cliGame.bounds.upper));
    expect(byLabel["P1 keeps at least"]).toBe(fracText(cliGame.bounds.lower));
    expect(byLabel["P1 keeps at most"]).toBe(fracText(cliGame.bounds.upper));

    // after commit the session rejects further moves; surfaced, not thrown
    expect(await controller.place([1.0, 2.0])).toBe(false);
    expect(controller.state.status).toContain("committed");
  }, 120_000);

  it("rejects a second in-flight mutation instead of queueing it", async () => {
    const api = new ApiClient(BASE);
    const controller = new BoardController(api);
    expect(await controller.newGame({ gen_spec: "uniform_square:12:seed=3", k: 3 })).toBe(
      true,
    );
    const first = controller.place([10.0, 20.0]);
    const second = controller.place([30.0, 40.0]);
    const [okFirst, okSecond] = await Promise.all([first, second]);
    expect(okFirst).toBe(true);
    expect(okSecond).toBe(false);
    expect(controller.state.session!.placed.length).toBe(1);
  }, 30_000);

  it("surfaces API rejections inline", async () => {
    const api = new ApiClient(BASE);
    const controller = new BoardController(api);
    expect(await controller.newGame({ gen_spec: "uniform_square:10:seed=4", k: 1 })).toBe(
      true,
    );
    expect(await controller.place([5.0, 5.0])).toBe(true);
    // duplicate placement is a 409; the board keeps its state and reports it
    expect(await controller.place([5.0, 5.0])).toBe(false);
    expect(controller.state.status).not.toBe("");
    expect(controller.state.session!.placed.length).toBe(1);
  }, 30_000);
});
