/** Client-side view state for one page.
 *
 * The displayed segmentation is always the last service response, verbatim:
 * gestures post one edit and adopt the reply, profile changes re-request a
 * preview under the override. Nothing on screen is computed locally, so the
 * screen always shows what a server-side replay of the stored log produces.
 */

import { ServiceClient } from "./client.js";
import type { Tool } from "./gestures.js";
import { TOOLS } from "./gestures.js";
import type {
  Edit,
  LinesResult,
  Profile,
  SegResponse,
  Segmentation,
  TextLine,
} from "./types.js";

function isAbort(e: unknown): boolean {
  return e instanceof Error && e.name === "AbortError";
}

export class EditorSession {
  book = "";
  page = "";
  tool: Tool = "select";
  segmentation: Segmentation | null = null;
  warnings: string[] = [];
  logLength = 0;
  /** Preview override; the stored profile is untouched until saveProfile. */
  pendingProfile: Profile | null = null;
  lines: LinesResult | null = null;
  hovered: string | null = null;
  /** Redraw hook for the shell. */
  onChange: () => void = () => {};

  // each request gets a generation; only the newest may land
  private generation = 0;
  private controller: AbortController | null = null;

  constructor(readonly client: ServiceClient) {}

  setTool(tool: Tool): void {
    if (!TOOLS.includes(tool)) throw new Error(`unknown tool ${tool}`);
    this.tool = tool;
    this.onChange();
  }

  async open(book: string, page: string): Promise<void> {
    this.book = book;
    this.page = page;
    this.segmentation = null;
    this.warnings = [];
    this.logLength = 0;
    this.pendingProfile = null;
    this.lines = null;
    this.hovered = null;
    await this.refresh();
  }

  /** Re-request the segmentation, with the pending override when present.
   * A newer call aborts and outranks any in-flight one. */
  async refresh(): Promise<void> {
    const gen = this.bump();
    const controller = new AbortController();
    this.controller = controller;
    let res: SegResponse;
    try {
      res = await this.client.segmentation(
        this.book,
        this.page,
        this.pendingProfile,
        controller.signal,
      );
    } catch (e) {
      if (gen !== this.generation || isAbort(e)) return;
      throw e;
    }
    if (gen !== this.generation) return;
    this.adopt(res);
  }

  /** Post one edit and adopt the service reply. Degenerate gestures pass
   * null and nothing is posted; on a service error the screen keeps the
   * previous state and the error propagates for the shell to show. */
  async submitEdit(edit: Edit | null): Promise<boolean> {
    if (!edit) return false;
    const res = await this.client.postEdit(this.book, this.page, edit);
    this.bump();
    this.adopt(res);
    return true;
  }

  async previewProfile(profile: Profile): Promise<void> {
    this.pendingProfile = profile;
    await this.refresh();
  }

  async discardPreview(): Promise<void> {
    this.pendingProfile = null;
    await this.refresh();
  }

  /** Persist the pending override as the book profile. Only here does a
   * preview touch the stored profile. */
  async saveProfile(): Promise<Profile | null> {
    if (!this.pendingProfile) return null;
    const saved = await this.client.putProfile(this.book, this.pendingProfile);
    this.pendingProfile = null;
    await this.refresh();
    return saved;
  }

  /** Hovering a text region lazily fetches the page's lines once and keeps
   * them until the geometry changes. */
  async hover(regionId: string | null): Promise<void> {
    if (regionId === this.hovered) return;
    this.hovered = regionId;
    if (regionId !== null && this.lines === null) {
      const lines = await this.client.lines(this.book, this.page);
      if (this.hovered === null) return;
      this.lines = lines;
    }
    this.onChange();
  }

  linesFor(regionId: string): TextLine[] {
    if (!this.lines) return [];
    return this.lines.lines.filter((l) => l.parent === regionId);
  }

  async cutAtLine(
    regionId: string,
    lineIndex: number,
    side: "above" | "below",
  ): Promise<void> {
    const res = await this.client.cutAtLine(
      this.book,
      this.page,
      regionId,
      lineIndex,
      side,
    );
    this.bump();
    this.adopt(res);
  }

  async retypeAtLine(
    regionId: string,
    lineIndex: number,
    newType: string,
  ): Promise<void> {
    const res = await this.client.retypeAtLine(
      this.book,
      this.page,
      regionId,
      lineIndex,
      newType,
    );
    this.bump();
    this.adopt(res);
  }

  private bump(): number {
    this.controller?.abort();
    this.controller = null;
    return ++this.generation;
  }

  private adopt(res: SegResponse): void {
    this.segmentation = res.segmentation;
    this.warnings = res.warnings;
    if (res.log_length !== undefined) this.logLength = res.log_length;
    // region geometry changed, cached lines no longer match
    this.lines = null;
    this.hovered = null;
    this.onChange();
  }
}
