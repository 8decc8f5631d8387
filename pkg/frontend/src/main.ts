import { FrameMessage, Scene } from "./protocol";
import { COLORS, render } from "./renderer";
import { SessionClient } from "./session";
import { DEFAULT_VIEW, Transform } from "./view";

const WS_URL = (import.meta as any).env?.VITE_ENGINE_URL ?? "ws://127.0.0.1:8765";

const app = document.querySelector<HTMLDivElement>("#app");
if (!app) throw new Error("#app not found");

const controls = document.createElement("div");
controls.className = "controls";

function picker(label: string, options: string[]): HTMLSelectElement {
  const wrap = document.createElement("label");
  wrap.textContent = label;
  const select = document.createElement("select");
  for (const value of options) {
    const opt = document.createElement("option");
    opt.value = value;
    opt.textContent = value;
    select.appendChild(opt);
  }
  wrap.appendChild(select);
  controls.appendChild(wrap);
  return select;
}

const techniquePick = picker("technique", [
  "sliding-ring",
  "sliding-elastic",
  "magnetic-area",
  "magnetic-elastic",
  "baseline",
]);
const graphPick = picker("graph", ["metro", "small-world"]);
const pathPick = picker("path", ["weighted", "homogeneous"]);
const taskPick = picker("task", ["selection", "tracing"]);

const newTrial = document.createElement("button");
newTrial.textContent = "new trial";
controls.appendChild(newTrial);

const status = document.createElement("span");
status.className = "status";
controls.appendChild(status);

const banner = document.createElement("div");
banner.className = "banner";

const canvas = document.createElement("canvas");
canvas.width = 1260;
canvas.height = 760;

app.append(controls, banner, canvas);
const ctx = canvas.getContext("2d")!;

let scene: Scene | null = null;
let frame: FrameMessage | null = null;
let transform: Transform | null = null;
let seed = 1;
let trialStart: number | null = null;

function currentConfig() {
  return {
    technique: techniquePick.value,
    graph: graphPick.value,
    path_kind: pathPick.value,
    task: taskPick.value,
    seed,
  };
}

const client = new SessionClient({
  url: WS_URL,
  onScene(next) {
    scene = next;
    frame = null;
    trialStart = null;
    banner.textContent = "";
    transform = Transform.fit(next.graph.display_extent, canvas.width, canvas.height);
  },
  onFrame(next) {
    frame = next;
    if (next.task.started && trialStart === null) trialStart = performance.now();
    if (next.task.done) {
      banner.textContent = "path complete";
      banner.style.color = COLORS.pathDone;
    } else if (trialStart !== null) {
      banner.textContent = `${((performance.now() - trialStart) / 1000).toFixed(1)} s`;
      banner.style.color = "#dee2e6";
    }
  },
  onStatus(text, connected) {
    status.textContent = text;
    status.style.color = connected ? "#51cf66" : "#ffa8a8";
  },
});

for (const el of [techniquePick, graphPick, pathPick, taskPick]) {
  el.addEventListener("change", () => client.configure(currentConfig()));
}
newTrial.addEventListener("click", () => {
  seed += 1;
  client.configure(currentConfig());
});

canvas.addEventListener("pointermove", (ev) => {
  if (!transform) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = transform.toWorld(
    ((ev.clientX - rect.left) * canvas.width) / rect.width,
    ((ev.clientY - rect.top) * canvas.height) / rect.height,
  );
  client.pointerMoved(wx, wy);
});

function tick(): void {
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (scene && frame && transform) {
    render(ctx, scene, frame, transform, DEFAULT_VIEW, canvas.width, canvas.height);
  }
  requestAnimationFrame(tick);
}

client.connect();
client.configure(currentConfig());
requestAnimationFrame(tick);
