/** Test harness: run the Python CLI, manage a service process, read PLY.
 *
 * Output PLY files carry no point ids, so identity is recovered through
 * the source scan: each 15-byte binary vertex record keys a map back to
 * its row index, which is the id the session assigned at load time.
 */

import { spawn } from "node:child_process";
import { readFile } from "node:fs/promises";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));
export const PLY_RECORD_BYTES = 15; // float32 x/y/z + uchar red/green/blue

const CLI = ["-m", "cloudsketch.cli"];

export interface CliResult {
  stdout: string;
  stderr: string;
}

/** Run a CLI subcommand to completion; reject on a nonzero exit. */
export function runCli(args: string[]): Promise<CliResult> {
  return new Promise((resolve, reject) => {
    const proc = spawn("python3", [...CLI, ...args], {
      cwd: REPO_ROOT,
      stdio: ["ignore", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    proc.stdout.on("data", (chunk) => (stdout += chunk));
    proc.stderr.on("data", (chunk) => (stderr += chunk));
    proc.on("error", reject);
    proc.on("close", (code) => {
      if (code === 0) resolve({ stdout, stderr });
      else reject(new Error(`cloudsketch ${args[0]} exited ${code}: ${stderr.trim()}`));
    });
  });
}

export interface ServeHandle {
  host: string;
  port: number;
  stop(): Promise<void>;
}

/** Start the editing service on an ephemeral port and wait for its banner. */
export function startServe(extraArgs: string[] = []): Promise<ServeHandle> {
  return new Promise((resolve, reject) => {
    const proc = spawn(
      "python3",
      [...CLI, "serve", "--host", "127.0.0.1", "--port", "0", ...extraArgs],
      { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
    );
    let stdout = "";
    let stderr = "";
    let ready = false;
    const stop = () =>
      new Promise<void>((done) => {
        if (proc.exitCode !== null) return done();
        proc.once("close", () => done());
        proc.kill("SIGTERM");
      });
    proc.stderr.on("data", (chunk) => (stderr += chunk));
    proc.stdout.on("data", (chunk) => {
      stdout += chunk;
      if (ready) return;
      const banner = stdout.match(/listening on ([\d.]+):(\d+)/);
      if (banner) {
        ready = true;
        resolve({ host: banner[1], port: Number(banner[2]), stop });
      }
    });
    proc.on("error", reject);
    proc.on("close", (code) => {
      if (!ready) reject(new Error(`serve exited ${code} before listening: ${stderr.trim()}`));
    });
  });
}

export interface BinaryPly {
  count: number;
  body: Buffer; // count * PLY_RECORD_BYTES vertex records
}

const HEADER_PATTERN = new RegExp(
  "^ply\\n" +
    "format binary_little_endian 1\\.0\\n" +
    "element vertex (\\d+)\\n" +
    "property float x\\nproperty float y\\nproperty float z\\n" +
    "property uchar red\\nproperty uchar green\\nproperty uchar blue\\n" +
    "end_header\\n$",
);

/** Read a binary PLY written by the toolkit, validating the exact header. */
export async function readBinaryPly(file: string): Promise<BinaryPly> {
  const blob = await readFile(file);
  const marker = blob.indexOf("end_header\n");
  if (marker < 0) throw new Error(`${file}: missing end_header`);
  const bodyStart = marker + "end_header\n".length;
  const header = blob.subarray(0, bodyStart).toString("ascii");
  const matched = header.match(HEADER_PATTERN);
  if (!matched) throw new Error(`${file}: unexpected PLY header:\n${header}`);
  const count = Number(matched[1]);
  const body = blob.subarray(bodyStart);
  if (body.length !== count * PLY_RECORD_BYTES) {
    throw new Error(`${file}: body is ${body.length} bytes for ${count} vertices`);
  }
  return { count, body };
}

export function recordKey(ply: BinaryPly, index: number): string {
  return ply.body
    .subarray(index * PLY_RECORD_BYTES, (index + 1) * PLY_RECORD_BYTES)
    .toString("hex");
}

/** Map each scan record to its row index, i.e. the id assigned at load. */
export function rowIndexByRecord(scan: BinaryPly): Map<string, number> {
  const index = new Map<string, number>();
  for (let i = 0; i < scan.count; i++) {
    const key = recordKey(scan, i);
    const seen = index.get(key);
    if (seen !== undefined) {
      throw new Error(`scan rows ${seen} and ${i} are byte-identical; ids are ambiguous`);
    }
    index.set(key, i);
  }
  return index;
}

/** Recover the id set of an output cloud through the scan row index. */
export function idSetOf(ply: BinaryPly, index: Map<string, number>): Set<number> {
  const ids = new Set<number>();
  for (let i = 0; i < ply.count; i++) {
    const id = index.get(recordKey(ply, i));
    if (id === undefined) throw new Error(`output row ${i} does not appear in the scan`);
    ids.add(id);
  }
  if (ids.size !== ply.count) throw new Error("output rows are not unique");
  return ids;
}

export function tmpName(dir: string, name: string): string {
  return path.join(dir, name);
}
