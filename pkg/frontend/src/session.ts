// WebSocket session loop: pointer moves coalesce to at most one gaze
// message per tick, each reply renders latest-wins, and a dropped
// connection reconnects with a fresh session.

import {
  decode,
  encode,
  FrameMessage,
  PROTOCOL_VERSION,
  Scene,
  SetMessage,
} from "./protocol";

export interface SessionOptions {
  url: string;
  onScene(scene: Scene): void;
  onFrame(frame: FrameMessage): void;
  onStatus(text: string, connected: boolean): void;
  rateHz?: number;
}

export interface SessionConfig {
  technique: string;
  graph: string;
  path_kind: string;
  task: string;
  seed: number;
}

export class SessionClient {
  private ws: WebSocket | null = null;
  private pointer: [number, number] | null = null;
  private lastSent: [number, number] | null = null;
  private timer: number | null = null;
  private epoch = 0;
  private config: SessionConfig | null = null;
  private reconnectDelay = 500;

  constructor(private readonly options: SessionOptions) {}

  connect(): void {
    this.options.onStatus("connecting...", false);
    const ws = new WebSocket(this.options.url);
    this.ws = ws;
    ws.onopen = () => {
      this.reconnectDelay = 500;
      this.options.onStatus("connected", true);
      if (this.config) this.sendSet(this.config);
      this.startTicker();
    };
    ws.onmessage = (ev) => this.handleMessage(String(ev.data));
    ws.onclose = () => {
      this.stopTicker();
      this.options.onStatus("disconnected, retrying...", false);
      setTimeout(() => this.connect(), this.reconnectDelay);
      this.reconnectDelay = Math.min(this.reconnectDelay * 2, 5000);
    };
    ws.onerror = () => ws.close();
  }

  configure(config: SessionConfig): void {
    this.config = config;
    this.epoch += 1;
    this.lastSent = null;
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.sendSet(config);
    }
  }

  pointerMoved(x: number, y: number): void {
    this.pointer = [x, y];
  }

  private sendSet(config: SessionConfig): void {
    const msg: SetMessage = {
      v: PROTOCOL_VERSION,
      type: "set",
      technique: config.technique,
      graph: config.graph,
      path_kind: config.path_kind,
      task: config.task,
      seed: config.seed,
    };
    this.ws!.send(encode(msg));
  }

  private startTicker(): void {
    const interval = 1000 / (this.options.rateHz ?? 60);
    this.stopTicker();
    const started = performance.now();
    this.timer = window.setInterval(() => {
      if (!this.ws || this.ws.readyState !== WebSocket.OPEN || !this.pointer) return;
      const [x, y] = this.pointer;
      if (this.lastSent && this.lastSent[0] === x && this.lastSent[1] === y) return;
      this.lastSent = [x, y];
      this.ws.send(
        encode({
          v: PROTOCOL_VERSION,
          type: "gaze",
          t: (performance.now() - started) / 1000,
          x,
          y,
        }),
      );
    }, interval);
  }

  private stopTicker(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private handleMessage(line: string): void {
    let message;
    try {
      message = decode(line.trim());
    } catch (err) {
      this.options.onStatus(`protocol error: ${(err as Error).message}`, true);
      return;
    }
    if (message.type === "scene") {
      this.options.onScene(message);
    } else if (message.type === "frame") {
      this.options.onFrame(message);
    } else {
      this.options.onStatus(`engine error: ${message.reason}`, true);
    }
  }
}
