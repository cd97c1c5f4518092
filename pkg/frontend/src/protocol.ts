/** Wire protocol for the editing service.
 *
 * Each frame is a 4-byte big-endian length, a 1-byte type, then the body
 * (the length counts the type byte plus the body). Type 'J' carries UTF-8
 * JSON; type 'B' carries packed point records, 23 bytes each: id int64 LE,
 * position 3 x float32 LE, color 3 x uint8.
 */

export const FRAME_HEADER_BYTES = 4;
export const JSON_FRAME = 0x4a; // "J"
export const BINARY_FRAME = 0x42; // "B"
export const POINT_RECORD_BYTES = 23;
export const CHUNK_POINTS = 65_536;

export interface Frame {
  kind: number;
  body: Uint8Array;
}

export function encodeFrame(kind: number, body: Uint8Array): Uint8Array {
  const out = new Uint8Array(FRAME_HEADER_BYTES + 1 + body.length);
  new DataView(out.buffer).setUint32(0, body.length + 1, false);
  out[FRAME_HEADER_BYTES] = kind;
  out.set(body, FRAME_HEADER_BYTES + 1);
  return out;
}

export function encodeJsonFrame(value: unknown): Uint8Array {
  return encodeFrame(JSON_FRAME, new TextEncoder().encode(JSON.stringify(value)));
}

/** Incremental frame parser; push raw bytes, pull complete frames. */
export class FrameDecoder {
  private buffer = new Uint8Array(0);
  private offset = 0;

  push(chunk: Uint8Array): void {
    if (this.offset > 0 && this.offset === this.buffer.length) {
      this.buffer = new Uint8Array(0);
      this.offset = 0;
    }
    const pending = this.buffer.length - this.offset;
    const merged = new Uint8Array(pending + chunk.length);
    merged.set(this.buffer.subarray(this.offset), 0);
    merged.set(chunk, pending);
    this.buffer = merged;
    this.offset = 0;
  }

  next(): Frame | null {
    const available = this.buffer.length - this.offset;
    if (available < FRAME_HEADER_BYTES) return null;
    const view = new DataView(this.buffer.buffer, this.buffer.byteOffset + this.offset);
    const length = view.getUint32(0, false);
    if (length < 1) throw new Error("zero-length frame");
    if (available < FRAME_HEADER_BYTES + length) return null;
    const start = this.offset + FRAME_HEADER_BYTES;
    const kind = this.buffer[start];
    const body = this.buffer.slice(start + 1, start + length);
    this.offset = start + length;
    return { kind, body };
  }
}

/** A decoded chunk of committed points in structure-of-arrays layout. */
export interface PointBatch {
  ids: BigInt64Array;
  positions: Float32Array; // xyz interleaved
  colors: Uint8Array; // rgb interleaved
}

export function emptyBatch(): PointBatch {
  return { ids: new BigInt64Array(0), positions: new Float32Array(0), colors: new Uint8Array(0) };
}

export function parsePointRecords(body: Uint8Array): PointBatch {
  if (body.length % POINT_RECORD_BYTES !== 0) {
    throw new Error(
      `binary frame length ${body.length} is not a multiple of ${POINT_RECORD_BYTES}`,
    );
  }
  const count = body.length / POINT_RECORD_BYTES;
  const view = new DataView(body.buffer, body.byteOffset, body.byteLength);
  const ids = new BigInt64Array(count);
  const positions = new Float32Array(count * 3);
  const colors = new Uint8Array(count * 3);
  for (let i = 0; i < count; i++) {
    const off = i * POINT_RECORD_BYTES;
    ids[i] = view.getBigInt64(off, true);
    positions[i * 3] = view.getFloat32(off + 8, true);
    positions[i * 3 + 1] = view.getFloat32(off + 12, true);
    positions[i * 3 + 2] = view.getFloat32(off + 16, true);
    colors[i * 3] = body[off + 20];
    colors[i * 3 + 1] = body[off + 21];
    colors[i * 3 + 2] = body[off + 22];
  }
  return { ids, positions, colors };
}

export function concatBatches(batches: PointBatch[]): PointBatch {
  const total = batches.reduce((n, b) => n + b.ids.length, 0);
  const out: PointBatch = {
    ids: new BigInt64Array(total),
    positions: new Float32Array(total * 3),
    colors: new Uint8Array(total * 3),
  };
  let at = 0;
  for (const b of batches) {
    out.ids.set(b.ids, at);
    out.positions.set(b.positions, at * 3);
    out.colors.set(b.colors, at * 3);
    at += b.ids.length;
  }
  return out;
}

// -- request/response schema -------------------------------------------------

export type Verb =
  | "load"
  | "get_cloud"
  | "tool"
  | "preview_diff"
  | "commit"
  | "discard"
  | "undo"
  | "export"
  | "stats";

export interface Request {
  id: number;
  verb: Verb;
  params: Record<string, unknown>;
}

export interface WireError {
  code: string;
  message: string;
}

export interface Response {
  id: number | null;
  ok: boolean;
  payload?: unknown;
  error?: WireError;
}

export type Strength = "weak" | "medium" | "strong";
export type EraserSize = "small" | "medium" | "big";
export type SprayDepth = "shallow" | "medium" | "deep";

/** Pose on the wire: translation plus [w, x, y, z] quaternion. */
export interface PoseJson {
  translation: Vec3Tuple;
  quaternion: [number, number, number, number];
}

export type Vec3Tuple = [number, number, number];

export interface SpraySample {
  origin: Vec3Tuple;
  dir: Vec3Tuple;
  size: EraserSize;
  depth: SprayDepth;
}

export type ToolRecord =
  | { tool: "crop"; min: Vec3Tuple; max: Vec3Tuple }
  | { tool: "remove_outliers"; strength: Strength }
  | { tool: "downsample"; strength: Strength }
  | {
      tool: "create_primitive";
      pose: PoseJson;
      dimensions: Vec3Tuple;
      sample_spacing?: number;
      color?: [number, number, number];
    }
  | { tool: "erase_sponge"; stroke: PoseJson[]; size: EraserSize }
  | { tool: "erase_spray"; stroke: SpraySample[] };

export type ToolName = ToolRecord["tool"];

export interface ToolCounts {
  added: number;
  removed: number;
}

export interface DiffPoint {
  id: number;
  position: Vec3Tuple;
  color: [number, number, number];
}

/** The pending edit as reported by preview_diff. */
export interface PreviewDiff {
  added: DiffPoint[];
  removed: number[];
}

export interface SessionStats {
  count: number;
  has_pending: boolean;
  history_depth: number;
  min?: Vec3Tuple;
  max?: Vec3Tuple;
}
