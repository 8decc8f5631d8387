// Wire schema for the engine session endpoint. Messages travel as
// newline-terminated JSON in a versioned envelope; validation is strict
// (unknown fields are rejected) so client and engine cannot drift apart
// silently.

export const PROTOCOL_VERSION = 1;

export type Point = [number, number];

export interface GazeMessage {
  v: number;
  type: "gaze";
  t: number;
  x: number;
  y: number;
}

export interface SetMessage {
  v: number;
  type: "set";
  technique: string;
  graph: string;
  path_kind: string;
  task: string;
  seed?: number;
}

export type ClientMessage = GazeMessage | SetMessage;

export interface GraphNode {
  id: string;
  x: number;
  y: number;
}

export interface GraphLink {
  id: string;
  a: string;
  b: string;
  w: number;
}

export interface Scene {
  v: number;
  type: "scene";
  technique: string;
  task: string;
  path_kind: string;
  graph: {
    display_extent: { w: number; h: number };
    nodes: GraphNode[];
    links: GraphLink[];
  };
  path: { nodes: string[]; links: string[]; start: string };
}

export interface Ray {
  link: string;
  point: Point;
  intensity: number;
}

export interface Overlay {
  gaze: Point;
  ring: Point | null;
  trail: [Point, Point] | null;
  rope: [Point, Point] | null;
  elastic: { points: Point[]; tethers: [Point, Point][]; alpha: number } | null;
  rays: Ray[];
}

export interface TaskElement {
  kind: "node" | "link";
  id: string;
  done: boolean;
}

export interface TaskProgress {
  kind: "selection" | "tracing";
  next_index: number;
  done: boolean;
  started: boolean;
  elements: TaskElement[];
  frontier_fraction?: number;
  frontier?: number;
  start_t: number | null;
  end_t: number | null;
}

export interface FrameMessage {
  v: number;
  type: "frame";
  overlay: Overlay;
  task: TaskProgress;
  events: { kind: string; node?: string; link?: string; subpath?: string }[];
}

export interface ErrorMessage {
  v: number;
  type: "error";
  reason: string;
}

export type ServerMessage = Scene | FrameMessage | ErrorMessage;

export class ProtocolError extends Error {}

const TECHNIQUES = [
  "baseline",
  "sliding-ring",
  "sliding-elastic",
  "magnetic-area",
  "magnetic-elastic",
];
const GRAPHS = ["metro", "small-world"];
const PATH_KINDS = ["weighted", "homogeneous"];
const TASKS = ["selection", "tracing"];

function fail(reason: string): never {
  throw new ProtocolError(reason);
}

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function requireKeys(
  obj: Record<string, unknown>,
  required: Record<string, string>,
  optional: Record<string, string> = {},
): void {
  for (const [key, typ] of Object.entries(required)) {
    if (!(key in obj)) fail(`missing field ${key}`);
    if (typeof obj[key] !== typ) fail(`field ${key} has wrong type`);
  }
  for (const key of Object.keys(obj)) {
    if (!(key in required) && !(key in optional)) fail(`unknown field ${key}`);
  }
  for (const [key, typ] of Object.entries(optional)) {
    if (key in obj && typeof obj[key] !== typ) fail(`field ${key} has wrong type`);
  }
}

function isPoint(x: unknown): x is Point {
  return Array.isArray(x) && x.length === 2 && x.every((v) => typeof v === "number" && isFinite(v));
}

export function validateClientMessage(raw: unknown): ClientMessage {
  if (!isRecord(raw)) fail("message must be an object");
  if (raw.v !== PROTOCOL_VERSION) fail(`unsupported protocol version ${raw.v}`);
  if (raw.type === "gaze") {
    requireKeys(raw, { v: "number", type: "string", t: "number", x: "number", y: "number" });
    return raw as unknown as GazeMessage;
  }
  if (raw.type === "set") {
    requireKeys(
      raw,
      { v: "number", type: "string", technique: "string", graph: "string", path_kind: "string", task: "string" },
      { seed: "number" },
    );
    if (!TECHNIQUES.includes(raw.technique as string)) fail(`unknown technique ${raw.technique}`);
    if (!GRAPHS.includes(raw.graph as string)) fail(`unknown graph ${raw.graph}`);
    if (!PATH_KINDS.includes(raw.path_kind as string)) fail(`unknown path_kind ${raw.path_kind}`);
    if (!TASKS.includes(raw.task as string)) fail(`unknown task ${raw.task}`);
    return raw as unknown as SetMessage;
  }
  fail(`unknown message type ${String(raw.type)}`);
}

function validateOverlay(raw: unknown): Overlay {
  if (!isRecord(raw)) fail("overlay must be an object");
  if (!isPoint(raw.gaze)) fail("overlay.gaze must be a point");
  if (raw.ring !== null && !isPoint(raw.ring)) fail("overlay.ring must be a point or null");
  for (const key of ["trail", "rope"] as const) {
    const v = raw[key];
    if (v !== null) {
      if (!Array.isArray(v) || v.length !== 2 || !isPoint(v[0]) || !isPoint(v[1])) {
        fail(`overlay.${key} must be a segment or null`);
      }
    }
  }
  if (raw.elastic !== null) {
    if (!isRecord(raw.elastic)) fail("overlay.elastic must be an object or null");
    const e = raw.elastic;
    if (!Array.isArray(e.points) || !e.points.every(isPoint)) fail("elastic.points malformed");
    if (
      !Array.isArray(e.tethers) ||
      !e.tethers.every((t) => Array.isArray(t) && t.length === 2 && isPoint(t[0]) && isPoint(t[1]))
    ) {
      fail("elastic.tethers malformed");
    }
    if (typeof e.alpha !== "number" || e.alpha < 0 || e.alpha > 1) fail("elastic.alpha out of range");
  }
  if (!Array.isArray(raw.rays)) fail("overlay.rays must be a list");
  for (const r of raw.rays) {
    if (!isRecord(r) || typeof r.link !== "string" || !isPoint(r.point)) fail("ray malformed");
    if (typeof r.intensity !== "number" || r.intensity < 0 || r.intensity > 1) fail("ray intensity out of range");
  }
  return raw as unknown as Overlay;
}

export function validateServerMessage(raw: unknown): ServerMessage {
  if (!isRecord(raw)) fail("message must be an object");
  if (raw.v !== PROTOCOL_VERSION) fail(`unsupported protocol version ${raw.v}`);
  if (raw.type === "scene") {
    if (!isRecord(raw.graph) || !isRecord(raw.path)) fail("scene missing graph/path");
    const g = raw.graph;
    if (!Array.isArray(g.nodes) || !Array.isArray(g.links) || !isRecord(g.display_extent)) {
      fail("scene.graph malformed");
    }
    return raw as unknown as Scene;
  }
  if (raw.type === "frame") {
    validateOverlay(raw.overlay);
    if (!isRecord(raw.task) || !Array.isArray(raw.task.elements)) fail("frame.task malformed");
    if (!Array.isArray(raw.events)) fail("frame.events malformed");
    return raw as unknown as FrameMessage;
  }
  if (raw.type === "error") {
    if (typeof raw.reason !== "string") fail("error.reason must be a string");
    return raw as unknown as ErrorMessage;
  }
  fail(`unknown message type ${String(raw.type)}`);
}

export function encode(message: ClientMessage): string {
  return JSON.stringify(message) + "\n";
}

export function decode(line: string): ServerMessage {
  return validateServerMessage(JSON.parse(line));
}
