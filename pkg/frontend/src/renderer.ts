// Stateless scene rendering: the shared graph always draws in full, the
// personal overlays draw only inside the field-of-view rectangle around
// the gaze echo. Overlay geometry is clipped explicitly (so a trail is
// cut at the FOV edge rather than vanishing), and the canvas clip is set
// as well for belt and braces.

import type { FrameMessage, Point, Scene, TaskProgress } from "./protocol";
import {
  clipPolylineToRect,
  clipSegmentToRect,
  fovRect,
  pointInRect,
  Rect,
  Transform,
  ViewConfig,
} from "./view";

// The subset of CanvasRenderingContext2D the renderer touches; tests pass
// a recording stub.
export interface Draw2D {
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  save(): void;
  restore(): void;
  clip(): void;
  setLineDash(segments: number[]): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

export const COLORS = {
  background: "#10141a",
  link: "#5c6875",
  node: "#aab4bf",
  pathRemaining: "#e03131",
  pathDone: "#2f9e44",
  startHalo: "#51cf66",
  gaze: "#ffd43b",
  ring: "#4dabf7",
  trail: "#4dabf7",
  rope: "#f783ac",
  ray: "#f783ac",
  elastic: "#4dabf7",
  tether: "#74c0fc",
  fov: "#e03131",
};

function segment(ctx: Draw2D, t: Transform, a: Point, b: Point): void {
  const [ax, ay] = t.toScreen(a);
  const [bx, by] = t.toScreen(b);
  ctx.beginPath();
  ctx.moveTo(ax, ay);
  ctx.lineTo(bx, by);
  ctx.stroke();
}

function polyline(ctx: Draw2D, t: Transform, pts: Point[]): void {
  if (pts.length < 2) return;
  ctx.beginPath();
  const [x0, y0] = t.toScreen(pts[0]);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < pts.length; i++) {
    const [x, y] = t.toScreen(pts[i]);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

function disk(ctx: Draw2D, t: Transform, p: Point, radiusPx: number): void {
  const [x, y] = t.toScreen(p);
  ctx.beginPath();
  ctx.arc(x, y, radiusPx, 0, Math.PI * 2);
  ctx.fill();
}

interface PathLookup {
  doneLinks: Set<string>;
  doneNodes: Set<string>;
  pathLinks: Set<string>;
  pathNodes: Set<string>;
  currentLink: string | null;
  frontierFraction: number;
}

function progressLookup(scene: Scene, task: TaskProgress): PathLookup {
  const doneLinks = new Set<string>();
  const doneNodes = new Set<string>();
  let currentLink: string | null = null;
  for (const el of task.elements) {
    if (el.done) {
      (el.kind === "link" ? doneLinks : doneNodes).add(el.id);
    } else if (el.kind === "link" && currentLink === null) {
      currentLink = el.id;
    }
  }
  return {
    doneLinks,
    doneNodes,
    pathLinks: new Set(scene.path.links),
    pathNodes: new Set(scene.path.nodes),
    currentLink,
    frontierFraction: task.frontier_fraction ?? 0,
  };
}

export function renderGraph(
  ctx: Draw2D,
  scene: Scene,
  task: TaskProgress,
  t: Transform,
  view: ViewConfig,
): void {
  const nodesById = new Map(scene.graph.nodes.map((n) => [n.id, n]));
  const lookup = progressLookup(scene, task);

  for (const link of scene.graph.links) {
    const a = nodesById.get(link.a)!;
    const b = nodesById.get(link.b)!;
    ctx.lineWidth = Math.max(1, t.length(view.baseLinkWidth * link.w));
    if (lookup.doneLinks.has(link.id)) {
      ctx.strokeStyle = COLORS.pathDone;
    } else if (lookup.pathLinks.has(link.id)) {
      ctx.strokeStyle = COLORS.pathRemaining;
    } else {
      ctx.strokeStyle = COLORS.link;
    }
    segment(ctx, t, [a.x, a.y], [b.x, b.y]);
    // progressive fill of the link being traced
    if (link.id === lookup.currentLink && lookup.frontierFraction > 0) {
      const start = scene.path.nodes[scene.path.links.indexOf(link.id)];
      const from = nodesById.get(start)!;
      const to = start === link.a ? b : a;
      const f = lookup.frontierFraction;
      ctx.strokeStyle = COLORS.pathDone;
      segment(
        ctx,
        t,
        [from.x, from.y],
        [from.x + (to.x - from.x) * f, from.y + (to.y - from.y) * f],
      );
    }
  }

  for (const node of scene.graph.nodes) {
    if (node.id === scene.path.start && !task.started) {
      ctx.fillStyle = COLORS.startHalo;
      disk(ctx, t, [node.x, node.y], 9);
    }
    if (lookup.doneNodes.has(node.id)) {
      ctx.fillStyle = COLORS.pathDone;
    } else if (lookup.pathNodes.has(node.id)) {
      ctx.fillStyle = COLORS.pathRemaining;
    } else {
      ctx.fillStyle = COLORS.node;
    }
    disk(ctx, t, [node.x, node.y], node.id === scene.path.start ? 6 : 4);
  }
}

export function renderOverlays(
  ctx: Draw2D,
  frame: FrameMessage,
  t: Transform,
  view: ViewConfig,
): void {
  const overlay = frame.overlay;
  const fov = fovRect(overlay.gaze, view);

  if (overlay.elastic) {
    ctx.globalAlpha = overlay.elastic.alpha;
    ctx.strokeStyle = COLORS.elastic;
    ctx.lineWidth = 3;
    for (const run of clipPolylineToRect(overlay.elastic.points, fov)) {
      polyline(ctx, t, run);
    }
    ctx.setLineDash([6, 5]);
    ctx.strokeStyle = COLORS.tether;
    ctx.lineWidth = 1;
    for (const [from, to] of overlay.elastic.tethers) {
      const seg = clipSegmentToRect(from, to, fov);
      if (seg) segment(ctx, t, seg[0], seg[1]);
    }
    ctx.setLineDash([]);
    ctx.globalAlpha = 1;
  }

  for (const ray of overlay.rays) {
    const seg = clipSegmentToRect(overlay.gaze, ray.point, fov);
    if (!seg) continue;
    ctx.globalAlpha = ray.intensity;
    ctx.strokeStyle = COLORS.ray;
    ctx.lineWidth = 1.5;
    segment(ctx, t, seg[0], seg[1]);
  }
  ctx.globalAlpha = 1;

  if (overlay.rope) {
    const seg = clipSegmentToRect(overlay.rope[0], overlay.rope[1], fov);
    if (seg) {
      ctx.strokeStyle = COLORS.rope;
      ctx.lineWidth = 2;
      segment(ctx, t, seg[0], seg[1]);
    }
  }

  if (overlay.trail) {
    const seg = clipSegmentToRect(overlay.trail[0], overlay.trail[1], fov);
    if (seg) {
      ctx.setLineDash([7, 6]);
      ctx.strokeStyle = COLORS.trail;
      ctx.lineWidth = 2;
      segment(ctx, t, seg[0], seg[1]);
      ctx.setLineDash([]);
    }
  }

  if (overlay.ring && pointInRect(overlay.ring, fov)) {
    const [x, y] = t.toScreen(overlay.ring);
    ctx.strokeStyle = COLORS.ring;
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.arc(x, y, 8, 0, Math.PI * 2);
    ctx.stroke();
  }

  ctx.fillStyle = COLORS.gaze;
  disk(ctx, t, overlay.gaze, 4);
}

function strokeRect(ctx: Draw2D, t: Transform, r: Rect): void {
  const [x, y] = t.toScreen([r.x, r.y + r.h]);
  ctx.beginPath();
  ctx.rect(x, y, t.length(r.w), t.length(r.h));
  ctx.stroke();
}

/** Full composition: shared graph unclipped, overlays inside the FOV. */
export function render(
  ctx: Draw2D,
  scene: Scene,
  frame: FrameMessage,
  t: Transform,
  view: ViewConfig,
  canvasW: number,
  canvasH: number,
): void {
  ctx.clearRect(0, 0, canvasW, canvasH);
  renderGraph(ctx, scene, frame.task, t, view);

  const fov = fovRect(frame.overlay.gaze, view);
  ctx.save();
  const [fx, fy] = t.toScreen([fov.x, fov.y + fov.h]);
  ctx.beginPath();
  ctx.rect(fx, fy, t.length(fov.w), t.length(fov.h));
  ctx.clip();
  renderOverlays(ctx, frame, t, view);
  ctx.restore();

  ctx.strokeStyle = COLORS.fov;
  ctx.lineWidth = 1.5;
  strokeRect(ctx, t, fov);
}
