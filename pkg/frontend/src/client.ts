// Socket wiring: frames in -> ViewModel, user intents out. Reconnects with a
// flat backoff so a restarted server picks the page back up.

import type { ViewModel } from "./viewmodel";

// method syntax on purpose: a browser WebSocket satisfies this structurally
export interface SocketLike {
  addEventListener(type: "message", fn: (ev: { data: unknown }) => void): void;
  addEventListener(type: "close", fn: () => void): void;
  readyState: number;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

const OPEN = 1;

export class PlaygroundClient {
  private socket: SocketLike | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    readonly url: string,
    readonly vm: ViewModel,
    private readonly makeSocket: SocketFactory,
    private readonly reconnectMs = 2000,
    private readonly now: () => number = () => performance.now(),
  ) {}

  connect(): void {
    this.stopped = false;
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.addEventListener("message", (ev) => {
      if (typeof ev.data === "string") this.vm.ingest(ev.data, this.now());
    });
    socket.addEventListener("close", () => {
      this.vm.markClosed();
      this.socket = null;
      if (!this.stopped && this.reconnectTimer === null) {
        this.reconnectTimer = setTimeout(() => {
          this.reconnectTimer = null;
          this.connect();
        }, this.reconnectMs);
      }
    });
  }

  send(text: string): boolean {
    if (this.socket && this.socket.readyState === OPEN) {
      this.socket.send(text);
      return true;
    }
    return false;
  }

  stop(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
  }
}

/** ws://host:port/ws from the page URL's ?host=&port=, with sane defaults. */
export function serviceUrl(query: string, defaults = { host: "127.0.0.1", port: 8000 }): string {
  const params = new URLSearchParams(query);
  const host = params.get("host") || defaults.host;
  const port = Number(params.get("port") || defaults.port);
  if (!Number.isInteger(port) || port < 1 || port > 65535) {
    throw new RangeError(`bad port: ${params.get("port")}`);
  }
  return `ws://${host}:${port}/ws`;
}
