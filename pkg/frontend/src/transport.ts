/**
 * Line-oriented transports. The client only needs "send a line, receive
 * lines": TCP for node (tests, scripts) and WebSocket for the browser,
 * where the bridge forwards one frame per message.
 */

import { LineBuffer } from "./protocol.js";

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/** Raw TCP transport (node only); lazily imports node:net. */
export class TcpTransport implements Transport {
  private socket: import("node:net").Socket | null = null;
  private lineHandlers: Array<(line: string) => void> = [];
  private closeHandlers: Array<() => void> = [];
  private buffer = new LineBuffer();

  private constructor() {}

  static async connect(host: string, port: number): Promise<TcpTransport> {
    const net = await import("node:net");
    const transport = new TcpTransport();
    await new Promise<void>((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => resolve());
      socket.on("error", reject);
      transport.socket = socket;
    });
    const socket = transport.socket!;
    socket.setNoDelay(true);
    socket.on("data", (chunk: Buffer) => {
      for (const line of transport.buffer.push(chunk.toString("utf-8"))) {
        for (const handler of transport.lineHandlers) handler(line);
      }
    });
    socket.on("close", () => {
      for (const handler of transport.closeHandlers) handler();
    });
    socket.on("error", () => {
      /* close follows */
    });
    return transport;
  }

  send(line: string): void {
    this.socket?.write(line + "\n");
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.socket?.destroy();
  }
}

/** Browser transport over the ws<->tcp bridge (one frame per message). */
export class WebSocketTransport implements Transport {
  private lineHandlers: Array<(line: string) => void> = [];
  private closeHandlers: Array<() => void> = [];

  constructor(private readonly ws: WebSocket) {
    ws.onmessage = (event) => {
      for (const handler of this.lineHandlers) handler(String(event.data));
    };
    ws.onclose = () => {
      for (const handler of this.closeHandlers) handler();
    };
  }

  static connect(url: string): Promise<WebSocketTransport> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(url);
      ws.onopen = () => resolve(new WebSocketTransport(ws));
      ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    });
  }

  send(line: string): void {
    this.ws.send(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.ws.close();
  }
}
