/** Editor session: glues gestures, view state, and the service client.
 *
 * Every mutation round-trips through the service; the view is refreshed
 * from get_cloud afterwards, so the service stays the single source of
 * truth. Committed tool records are kept in order, which makes the
 * session replayable as a headless script.
 */

import type { Viewport } from "./camera.js";
import type { DragSample } from "./gestures.js";
import { spongeRecord, sprayRecord } from "./gestures.js";
import type {
  EraserSize,
  SprayDepth,
  ToolCounts,
  ToolRecord,
} from "./protocol.js";
import type { SessionClient } from "./client.js";
import { serializeScript } from "./script.js";
import { ViewState } from "./view.js";

export class Editor {
  readonly view: ViewState;
  private recorded: ToolRecord[] = [];
  private pendingRecord: ToolRecord | null = null;

  constructor(
    private client: SessionClient,
    view = new ViewState(),
  ) {
    this.view = view;
  }

  /** Committed records so far, in commit order. */
  get recordedScript(): readonly ToolRecord[] {
    return this.recorded;
  }

  script(): string {
    return serializeScript(this.recorded);
  }

  async load(path: string): Promise<number> {
    const count = await this.client.load(path);
    this.recorded = [];
    this.pendingRecord = null;
    this.view.clearOverlay();
    await this.refresh();
    return count;
  }

  /** Run a tool as a preview and mirror its diff into the overlay. */
  async preview(record: ToolRecord): Promise<ToolCounts> {
    const counts = await this.client.tool(record);
    const diff = await this.client.previewDiff();
    if (diff.added.length !== counts.added || diff.removed.length !== counts.removed) {
      throw new Error(
        `preview diff (${diff.added.length} added, ${diff.removed.length} removed) ` +
          `disagrees with tool response (${counts.added}, ${counts.removed})`,
      );
    }
    this.view.setOverlay(diff);
    this.pendingRecord = record;
    return counts;
  }

  async sprayDrag(
    path: readonly DragSample[],
    vp: Viewport,
    size?: EraserSize,
    depth?: SprayDepth,
  ): Promise<ToolCounts> {
    const record = sprayRecord(
      path,
      this.view.camera,
      vp,
      size ?? this.view.eraserSize,
      depth ?? this.view.sprayDepth,
    );
    return this.preview(record);
  }

  async spongeDrag(
    path: readonly DragSample[],
    vp: Viewport,
    reachMeters: number,
    size?: EraserSize,
  ): Promise<ToolCounts> {
    const record = spongeRecord(path, this.view.camera, vp, reachMeters, size ?? this.view.eraserSize);
    return this.preview(record);
  }

  async commit(): Promise<number> {
    if (this.pendingRecord === null) throw new Error("no pending preview to commit");
    const count = await this.client.commit();
    this.recorded.push(this.pendingRecord);
    this.pendingRecord = null;
    this.view.clearOverlay();
    await this.refresh();
    return count;
  }

  async discard(): Promise<void> {
    await this.client.discard();
    this.pendingRecord = null;
    this.view.clearOverlay();
  }

  async undo(): Promise<number> {
    const count = await this.client.undo();
    // undo drops any pending preview along with the last commit
    this.recorded.pop();
    this.pendingRecord = null;
    this.view.clearOverlay();
    await this.refresh();
    return count;
  }

  async exportTo(path: string, format: "ascii" | "binary_le" = "binary_le"): Promise<number> {
    return this.client.exportCloud(path, format);
  }

  private async refresh(): Promise<void> {
    this.view.setSnapshot(await this.client.getCloud());
  }
}
