/**
 * DOM wiring for the board. All game logic lives behind the API; this file
 * only moves confirmed responses onto the screen.
 */

import { ApiClient } from "./api.js";
import { BoardController, hudModel } from "./state.js";
import { Scene, Transform, buildScene, paint, viewportFor } from "./render.js";

const canvas = document.getElementById("board") as HTMLCanvasElement;
const ctx = canvas.getContext("2d") as CanvasRenderingContext2D;

const distSelect = document.getElementById("dist") as HTMLSelectElement;
const nInput = document.getElementById("n") as HTMLInputElement;
const seedInput = document.getElementById("seed") as HTMLInputElement;
const kInput = document.getElementById("k") as HTMLInputElement;
const newGameBtn = document.getElementById("newGame") as HTMLButtonElement;

const whatIfBtn = document.getElementById("whatIf") as HTMLButtonElement;
const undoBtn = document.getElementById("undo") as HTMLButtonElement;
const commitBtn = document.getElementById("commit") as HTMLButtonElement;

const strategySelect = document.getElementById("strategy") as HTMLSelectElement;
const epsilonInput = document.getElementById("epsilon") as HTMLInputElement;
const suggestBtn = document.getElementById("suggest") as HTMLButtonElement;

const voronoiToggle = document.getElementById("showVoronoi") as HTMLInputElement;
const disksToggle = document.getElementById("showDisks") as HTMLInputElement;
const suggestionToggle = document.getElementById("showSuggestion") as HTMLInputElement;

const hudDiv = document.getElementById("hud") as HTMLDivElement;
const barsDiv = document.getElementById("bars") as HTMLDivElement;
const statusDiv = document.getElementById("status") as HTMLDivElement;

const api = new ApiClient(window.location.origin.replace(/:\d+$/, ":8000"));
const controller = new BoardController(api);

function renderHud(): void {
  const model = hudModel(controller.state);
  hudDiv.replaceChildren();
  for (const line of model.lines) {
    const row = document.createElement("div");
    row.className = "hud-row";
    const label = document.createElement("span");
    label.className = "hud-label";
    label.textContent = line.label;
    const value = document.createElement("span");
    value.className = "hud-value";
    value.textContent = line.value;
    row.append(label, value);
    hudDiv.append(row);
  }

  barsDiv.replaceChildren();
  if (model.bars) {
    for (const bar of model.bars) {
      const row = document.createElement("div");
      row.className = "bar-row";
      const label = document.createElement("span");
      label.className = "bar-label";
      label.textContent = `${bar.label} (${bar.text})`;
      const track = document.createElement("div");
      track.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = "bar-fill";
      fill.style.width = `${(bar.widthFraction * 100).toFixed(2)}%`;
      track.append(fill);
      row.append(label, track);
      barsDiv.append(row);
    }
  }
}

function redraw(): void {
  const scene: Scene = buildScene(controller.state, canvas.width, canvas.height);
  paint(ctx, scene);
  renderHud();
  statusDiv.textContent = controller.state.status;
  statusDiv.classList.toggle("error", controller.state.status !== "");
}

controller.onChange(redraw);

newGameBtn.addEventListener("click", () => {
  const n = Number(nInput.value);
  const seed = Number(seedInput.value);
  const k = Number(kInput.value);
  const spec = `${distSelect.value}:${n}:seed=${seed}`;
  void controller.newGame({ gen_spec: spec, k });
});

canvas.addEventListener("click", (e) => {
  const session = controller.state.session;
  if (!session || session.committed) return;
  const rect = canvas.getBoundingClientRect();
  const px = ((e.clientX - rect.left) / rect.width) * canvas.width;
  const py = ((e.clientY - rect.top) / rect.height) * canvas.height;
  const tf = new Transform(viewportFor(session.users), canvas.width, canvas.height);
  const [wx, wy] = tf.toWorld(px, py);
  void controller.place([wx, wy]).then((ok) => {
    // keep the cells overlay current once the move is confirmed
    if (ok && controller.state.overlays.voronoi) void controller.refreshVoronoi();
  });
});

undoBtn.addEventListener("click", () => {
  void controller.undo().then((ok) => {
    if (ok && controller.state.overlays.voronoi) void controller.refreshVoronoi();
  });
});

whatIfBtn.addEventListener("click", () => {
  void controller.whatIf();
});

commitBtn.addEventListener("click", () => {
  void controller.commit();
});

suggestBtn.addEventListener("click", () => {
  const kind = strategySelect.value;
  const k = Number(kInput.value);
  const epsilon = epsilonInput.value.trim();
  void controller.suggest(kind, k, epsilon === "" ? undefined : epsilon);
});

strategySelect.addEventListener("change", () => {
  epsilonInput.disabled = strategySelect.value !== "disknet";
});

voronoiToggle.addEventListener("change", () => {
  controller.toggleOverlay("voronoi");
  if (controller.state.overlays.voronoi && controller.state.voronoi === null) {
    void controller.refreshVoronoi();
  }
});

disksToggle.addEventListener("change", () => {
  controller.toggleOverlay("disks");
});

suggestionToggle.addEventListener("change", () => {
  controller.toggleOverlay("suggestion");
});

// reflect the default overlay state in the checkboxes
voronoiToggle.checked = controller.state.overlays.voronoi;
disksToggle.checked = controller.state.overlays.disks;
suggestionToggle.checked = controller.state.overlays.suggestion;
epsilonInput.disabled = strategySelect.value !== "disknet";

redraw();
