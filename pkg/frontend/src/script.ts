/** Session-script serialization: one JSON tool record per line.
 *
 * Matches the headless script reader: every line is an object with a
 * "tool" field plus that tool's parameters, keys sorted, compact
 * separators. Recording a session this way lets a batch run reproduce
 * exactly what the editor sent over the wire.
 */

import type { ToolRecord } from "./protocol.js";

function canonicalJson(value: unknown): string {
  if (value === null || typeof value === "boolean" || typeof value === "string") {
    return JSON.stringify(value);
  }
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error("non-finite number in script record");
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  if (typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .filter(([, v]) => v !== undefined)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
    return "{" + entries.map(([k, v]) => JSON.stringify(k) + ":" + canonicalJson(v)).join(",") + "}";
  }
  throw new Error(`cannot serialize ${typeof value} in script record`);
}

export function serializeRecord(record: ToolRecord): string {
  return canonicalJson(record);
}

export function serializeScript(records: readonly ToolRecord[]): string {
  return records.map((r) => serializeRecord(r) + "\n").join("");
}
