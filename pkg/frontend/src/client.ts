/** Request/response client for the editing service.
 *
 * One request is in flight at a time; further calls queue until the
 * current response arrives. Binary frames that precede a JSON response
 * belong to that response (get_cloud streaming).
 */

import * as net from "node:net";

import {
  BINARY_FRAME,
  concatBatches,
  encodeJsonFrame,
  FrameDecoder,
  parsePointRecords,
  type PointBatch,
  type PreviewDiff,
  type Request,
  type Response,
  type SessionStats,
  type ToolCounts,
  type ToolRecord,
  type Verb,
} from "./protocol.js";

export interface Transport {
  send(bytes: Uint8Array): void;
  onData(handler: (chunk: Uint8Array) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export class TcpTransport implements Transport {
  private constructor(private socket: net.Socket) {}

  static connect(host: string, port: number): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        socket.off("error", reject);
        resolve(new TcpTransport(socket));
      });
      socket.once("error", reject);
      socket.setNoDelay(true);
    });
  }

  send(bytes: Uint8Array): void {
    this.socket.write(bytes);
  }

  onData(handler: (chunk: Uint8Array) => void): void {
    this.socket.on("data", (buf: Buffer) => {
      handler(new Uint8Array(buf.buffer, buf.byteOffset, buf.byteLength));
    });
  }

  onClose(handler: () => void): void {
    this.socket.on("close", handler);
  }

  close(): void {
    this.socket.destroy();
  }
}

/** A structured error from the service, carrying its wire code. */
export class ServiceError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

interface CallResult {
  payload: unknown;
  chunks: Uint8Array[];
}

interface PendingCall {
  request: Request;
  sent: boolean;
  chunks: Uint8Array[];
  resolve: (result: CallResult) => void;
  reject: (err: Error) => void;
}

export class SessionClient {
  private decoder = new FrameDecoder();
  private textDecoder = new TextDecoder();
  private queue: PendingCall[] = [];
  private nextId = 1;
  private closed = false;

  constructor(private transport: Transport) {
    transport.onData((chunk) => this.handleData(chunk));
    transport.onClose(() => this.handleClose(new Error("service closed the connection")));
  }

  call(verb: Verb, params: Record<string, unknown> = {}): Promise<CallResult> {
    if (this.closed) return Promise.reject(new Error("client is closed"));
    return new Promise<CallResult>((resolve, reject) => {
      const request: Request = { id: this.nextId++, verb, params };
      this.queue.push({ request, sent: false, chunks: [], resolve, reject });
      this.sendHead();
    });
  }

  close(): void {
    this.closed = true;
    this.transport.close();
  }

  private sendHead(): void {
    const head = this.queue[0];
    if (head && !head.sent) {
      head.sent = true;
      this.transport.send(encodeJsonFrame(head.request));
    }
  }

  private handleData(chunk: Uint8Array): void {
    this.decoder.push(chunk);
    for (let frame = this.decoder.next(); frame !== null; frame = this.decoder.next()) {
      const head = this.queue[0];
      if (!head) {
        this.handleClose(new Error("unsolicited frame from the service"));
        return;
      }
      if (frame.kind === BINARY_FRAME) {
        head.chunks.push(frame.body);
        continue;
      }
      const response = JSON.parse(this.textDecoder.decode(frame.body)) as Response;
      if (response.id !== head.request.id) {
        this.handleClose(
          new Error(`response id ${response.id} does not match request ${head.request.id}`),
        );
        return;
      }
      this.queue.shift();
      if (response.ok) {
        head.resolve({ payload: response.payload, chunks: head.chunks });
      } else {
        const err = response.error ?? { code: "ERROR", message: "unknown error" };
        head.reject(new ServiceError(err.code, err.message));
      }
      this.sendHead();
    }
  }

  private handleClose(reason: Error): void {
    if (this.closed && this.queue.length === 0) return;
    this.closed = true;
    const pending = this.queue;
    this.queue = [];
    for (const call of pending) call.reject(reason);
    this.transport.close();
  }

  // -- verbs ------------------------------------------------------------

  async load(path: string): Promise<number> {
    const { payload } = await this.call("load", { path });
    return (payload as { count: number }).count;
  }

  async getCloud(): Promise<PointBatch> {
    const { chunks } = await this.call("get_cloud");
    return concatBatches(chunks.map(parsePointRecords));
  }

  async tool(record: ToolRecord): Promise<ToolCounts> {
    const { payload } = await this.call("tool", { record });
    return payload as ToolCounts;
  }

  async previewDiff(): Promise<PreviewDiff> {
    const { payload } = await this.call("preview_diff");
    const raw = payload as { added: number[][]; removed: number[] };
    return {
      added: raw.added.map((row) => ({
        id: row[0],
        position: [row[1], row[2], row[3]],
        color: [row[4], row[5], row[6]],
      })),
      removed: raw.removed,
    };
  }

  async commit(): Promise<number> {
    const { payload } = await this.call("commit");
    return (payload as { count: number }).count;
  }

  async discard(): Promise<void> {
    await this.call("discard");
  }

  async undo(): Promise<number> {
    const { payload } = await this.call("undo");
    return (payload as { count: number }).count;
  }

  async exportCloud(path: string, format: "ascii" | "binary_le" = "binary_le"): Promise<number> {
    const { payload } = await this.call("export", { path, format });
    return (payload as { count: number }).count;
  }

  async stats(): Promise<SessionStats> {
    const { payload } = await this.call("stats");
    return payload as SessionStats;
  }
}
