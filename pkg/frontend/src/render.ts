/**
 * Scene building and canvas painting, kept separate: the scene is a plain
 * display model (screen-space shapes with roles), so tests can inspect what
 * would be drawn without a canvas. All geometry comes from server responses
 * through a single fixed world-to-screen transform per session.
 */

import { BoardState } from "./state.js";

export interface Viewport {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

/** World box of the session's users plus a margin; users never move, so the
 * transform derived from this stays fixed for the session's lifetime. */
export function viewportFor(users: number[][]): Viewport {
  let x0 = Infinity;
  let y0 = Infinity;
  let x1 = -Infinity;
  let y1 = -Infinity;
  for (const u of users) {
    const [x, y] = [u[0] ?? 0, u[1] ?? 0];
    if (x < x0) x0 = x;
    if (x > x1) x1 = x;
    if (y < y0) y0 = y;
    if (y > y1) y1 = y;
  }
  if (!isFinite(x0)) return { x0: 0, y0: 0, x1: 1, y1: 1 };
  const pad = 0.08 * Math.max(x1 - x0, y1 - y0, 1e-9);
  return { x0: x0 - pad, y0: y0 - pad, x1: x1 + pad, y1: y1 + pad };
}

export class Transform {
  private sx: number;
  private sy: number;
  private vp: Viewport;
  private height: number;

  constructor(vp: Viewport, width: number, height: number) {
    this.vp = vp;
    this.height = height;
    this.sx = width / (vp.x1 - vp.x0);
    this.sy = height / (vp.y1 - vp.y0);
  }

  toScreen(x: number, y: number): [number, number] {
    return [
      (x - this.vp.x0) * this.sx,
      this.height - (y - this.vp.y0) * this.sy,
    ];
  }

  toWorld(px: number, py: number): [number, number] {
    return [
      px / this.sx + this.vp.x0,
      (this.height - py) / this.sy + this.vp.y0,
    ];
  }

  /** World length to screen length along x (the board keeps x/y scales equal
   * only if the canvas aspect matches the viewport; circles use this). */
  scale(r: number): number {
    return r * this.sx;
  }
}

export type DotRole =
  | "user"
  | "user-served"
  | "facility"
  | "response"
  | "suggestion";

export interface SceneDot {
  x: number;
  y: number;
  r: number;
  role: DotRole;
}

export interface ScenePoly {
  points: [number, number][];
  role: "voronoi";
}

export interface SceneCircle {
  x: number;
  y: number;
  r: number;
  role: "user-disk";
}

export interface Scene {
  width: number;
  height: number;
  dots: SceneDot[];
  polys: ScenePoly[];
  circles: SceneCircle[];
}

/** Build the full display model from the current board state. Pure. */
export function buildScene(state: BoardState, width: number, height: number): Scene {
  const scene: Scene = { width, height, dots: [], polys: [], circles: [] };
  const session = state.session;
  if (!session) return scene;
  const tf = new Transform(viewportFor(session.users), width, height);

  if (state.overlays.voronoi && state.voronoi) {
    for (const cell of state.voronoi.cells) {
      const points = cell.polygon.map(
        (p) => tf.toScreen(p[0] ?? 0, p[1] ?? 0) as [number, number],
      );
      scene.polys.push({ points, role: "voronoi" });
    }
  }

  if (state.overlays.disks && state.lastBestResponse) {
    for (const d of state.lastBestResponse.disks) {
      const [cx, cy] = tf.toScreen(d.center[0] ?? 0, d.center[1] ?? 0);
      scene.circles.push({ x: cx, y: cy, r: tf.scale(d.radius), role: "user-disk" });
    }
  }

  const served = new Set(state.lastBestResponse?.served ?? []);
  session.users.forEach((u, i) => {
    const [x, y] = tf.toScreen(u[0] ?? 0, u[1] ?? 0);
    scene.dots.push({ x, y, r: 3, role: served.has(i) ? "user-served" : "user" });
  });

  if (state.overlays.suggestion && state.suggestion && !session.committed) {
    for (const p of state.suggestion.points) {
      const [x, y] = tf.toScreen(p[0] ?? 0, p[1] ?? 0);
      scene.dots.push({ x, y, r: 7, role: "suggestion" });
    }
  }

  for (const f of session.placed) {
    const [x, y] = tf.toScreen(f[0] ?? 0, f[1] ?? 0);
    scene.dots.push({ x, y, r: 5, role: "facility" });
  }

  if (state.lastBestResponse) {
    const p = state.lastBestResponse.point;
    const [x, y] = tf.toScreen(p[0] ?? 0, p[1] ?? 0);
    scene.dots.push({ x, y, r: 6, role: "response" });
  }

  return scene;
}

const DOT_STYLE: Record<DotRole, { fill: string; stroke: string }> = {
  user: { fill: "#9aa5b1", stroke: "#52606d" },
  "user-served": { fill: "#f0b429", stroke: "#b44d12" },
  facility: { fill: "#2680c2", stroke: "#1a4971" },
  response: { fill: "#e12d39", stroke: "#891515" },
  suggestion: { fill: "rgba(61, 184, 131, 0.35)", stroke: "#27ab83" },
};

export function paint(ctx: CanvasRenderingContext2D, scene: Scene): void {
  ctx.clearRect(0, 0, scene.width, scene.height);
  ctx.fillStyle = "#f8f9fa";
  ctx.fillRect(0, 0, scene.width, scene.height);

  for (const poly of scene.polys) {
    if (poly.points.length < 3) continue;
    ctx.beginPath();
    const first = poly.points[0];
    if (!first) continue;
    ctx.moveTo(first[0], first[1]);
    for (const [x, y] of poly.points.slice(1)) ctx.lineTo(x, y);
    ctx.closePath();
    ctx.fillStyle = "rgba(38, 128, 194, 0.06)";
    ctx.fill();
    ctx.strokeStyle = "rgba(38, 128, 194, 0.5)";
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  for (const c of scene.circles) {
    ctx.beginPath();
    ctx.arc(c.x, c.y, c.r, 0, 2 * Math.PI);
    ctx.strokeStyle = "rgba(240, 180, 41, 0.35)";
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  for (const dot of scene.dots) {
    const style = DOT_STYLE[dot.role];
    ctx.beginPath();
    ctx.arc(dot.x, dot.y, dot.r, 0, 2 * Math.PI);
    ctx.fillStyle = style.fill;
    ctx.fill();
    ctx.strokeStyle = style.stroke;
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
}
