/**
 * WebSocket <-> TCP bridge so the browser trainer can reach the engine.
 *
 * One WebSocket connection maps to one engine TCP connection (one session).
 * Messages are forwarded verbatim: one frame per WebSocket message, one
 * newline-terminated line on the TCP side.
 *
 *   node dist/bridge.js [--ws-port 8765] [--engine-host 127.0.0.1] [--engine-port 7733]
 */

import net from "node:net";
import { WebSocketServer, WebSocket } from "ws";

import { LineBuffer } from "./protocol.js";

export interface BridgeOptions {
  wsPort: number;
  engineHost: string;
  enginePort: number;
}

export function startBridge(options: BridgeOptions): WebSocketServer {
  const wss = new WebSocketServer({ port: options.wsPort });
  wss.on("connection", (ws: WebSocket) => {
    const engine = net.createConnection({
      host: options.engineHost,
      port: options.enginePort,
    });
    engine.setNoDelay(true);
    const buffer = new LineBuffer();
    engine.on("data", (chunk) => {
      for (const line of buffer.push(chunk.toString("utf-8"))) {
        if (ws.readyState === WebSocket.OPEN) ws.send(line);
      }
    });
    engine.on("close", () => ws.close());
    engine.on("error", () => ws.close());
    ws.on("message", (data) => engine.write(data.toString() + "\n"));
    ws.on("close", () => engine.destroy());
  });
  return wss;
}

function argValue(name: string, fallback: string): string {
  const index = process.argv.indexOf(name);
  return index >= 0 && process.argv[index + 1] ? process.argv[index + 1]! : fallback;
}

if (process.argv[1] && process.argv[1].endsWith("bridge.js")) {
  const options = {
    wsPort: Number(argValue("--ws-port", "8765")),
    engineHost: argValue("--engine-host", "127.0.0.1"),
    enginePort: Number(argValue("--engine-port", "7733")),
  };
  startBridge(options);
  console.log(
    `bridge: ws://localhost:${options.wsPort} <-> ${options.engineHost}:${options.enginePort}`,
  );
}
