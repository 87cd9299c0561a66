import { describe, expect, it } from "vitest";

import type { Draw2D } from "../src/overlay.js";
import { FILL_ALPHA, legendEntries, renderOverlay } from "../src/overlay.js";
import { Viewport } from "../src/view.js";
import { FakeService, makeProfile, makeSeg, square } from "./helpers.js";

interface Op {
  op: string;
  [key: string]: unknown;
}

class RecordingCtx implements Draw2D {
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 1;
  globalAlpha = 1;
  font = "";
  ops: Op[] = [];
  private dash: number[] = [];

  beginPath(): void {
    this.ops.push({ op: "beginPath" });
  }
  moveTo(x: number, y: number): void {
    this.ops.push({ op: "moveTo", x, y });
  }
  lineTo(x: number, y: number): void {
    this.ops.push({ op: "lineTo", x, y });
  }
  closePath(): void {
    this.ops.push({ op: "closePath" });
  }
  fill(): void {
    this.ops.push({ op: "fill", style: this.fillStyle, alpha: this.globalAlpha });
  }
  stroke(): void {
    this.ops.push({
      op: "stroke",
      style: this.strokeStyle,
      dash: [...this.dash],
      width: this.lineWidth,
    });
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({ op: "fillRect", x, y, w, h, style: this.fillStyle });
  }
  strokeRect(x: number, y: number, w: number, h: number): void {
    this.ops.push({
      op: "strokeRect",
      x,
      y,
      w,
      h,
      style: this.strokeStyle,
      dash: [...this.dash],
    });
  }
  fillText(text: string, x: number, y: number): void {
    this.ops.push({ op: "fillText", text, x, y });
  }
  setLineDash(segments: number[]): void {
    this.dash = segments;
  }

  count(op: string): number {
    return this.ops.filter((o) => o.op === op).length;
  }
  texts(): string[] {
    return this.ops.filter((o) => o.op === "fillText").map((o) => o.text as string);
  }
}

const view = new Viewport(2000, 3000, 0.5);

const fiveTypes = makeSeg([
  square("r1", "image", 100, 100, 200),
  square("r2", "paragraph", 100, 400, 300),
  square("r3", "marginalia", 10, 400, 80),
  square("r4", "page-number", 900, 20, 60),
  square("r5", "signature-mark", 900, 2900, 60),
]);

describe("renderOverlay", () => {
  it("leaves the image bare for a missing segmentation", () => {
    const ctx = new RecordingCtx();
    renderOverlay(ctx, view, null);
    expect(ctx.ops).toHaveLength(0);
  });

  it("fills one translucent polygon per region in its type color", () => {
    const ctx = new RecordingCtx();
    renderOverlay(ctx, view, fiveTypes);
    const fills = ctx.ops.filter((o) => o.op === "fill");
    expect(fills).toHaveLength(5);
    expect(fills.map((f) => f.style)).toEqual([
      "green",
      "red",
      "yellow",
      "cyan",
      "maroon",
    ]);
    for (const f of fills) expect(f.alpha).toBe(FILL_ALPHA);
  });

  it("scales geometry from image to display coordinates", () => {
    const ctx = new RecordingCtx();
    renderOverlay(ctx, view, makeSeg([square("r", "paragraph", 100, 200, 10)]));
    const move = ctx.ops.find((o) => o.op === "moveTo");
    expect(move).toMatchObject({ x: 50, y: 100 });
  });

  it("shows a legend entry per present type", () => {
    const ctx = new RecordingCtx();
    renderOverlay(ctx, view, fiveTypes);
    for (const label of [
      "image",
      "paragraph",
      "marginalia",
      "page-number",
      "signature-mark",
    ]) {
      expect(ctx.texts()).toContain(label);
    }
  });

  it("outlines unclassified candidates dashed without filling them", () => {
    const ctx = new RecordingCtx();
    const seg = makeSeg(
      [square("r1", "paragraph", 100, 400, 300)],
      [square("u1", null, 1500, 2500, 90)],
    );
    renderOverlay(ctx, view, seg);
    expect(ctx.count("fill")).toBe(1);
    const dashed = ctx.ops.filter(
      (o) => o.op === "stroke" && (o.dash as number[]).length > 0,
    );
    expect(dashed).toHaveLength(1);
    expect(dashed[0].style).toBe("gray");
    expect(ctx.texts()).toContain("unclassified");
  });

  it("marks flagged regions with a dashed outline", () => {
    const ctx = new RecordingCtx();
    const flagged = { ...square("r1", "paragraph", 0, 0, 50), flagged: true };
    renderOverlay(ctx, view, makeSeg([flagged]));
    const strokes = ctx.ops.filter((o) => o.op === "stroke");
    expect((strokes[0].dash as number[]).length).toBeGreaterThan(0);
  });

  it("draws the hovered region's lines and no others", () => {
    const fake = new FakeService();
    const ctx = new RecordingCtx();
    const seg = fake.snapshot();
    const doc = {
      page_id: seg.page_id,
      lines: [
        {
          parent: "r-para",
          polygon: [
            [500, 1000],
            [1300, 1000],
            [1300, 1040],
            [500, 1040],
          ],
          baseline_y: 1035,
          index: 0,
        },
        {
          parent: "r-para",
          polygon: [
            [500, 1100],
            [1300, 1100],
            [1300, 1140],
            [500, 1140],
          ],
          baseline_y: 1135,
          index: 1,
        },
        {
          parent: "r-marg",
          polygon: [
            [50, 950],
            [350, 950],
            [350, 990],
            [50, 990],
          ],
          baseline_y: 985,
          index: 0,
        },
      ],
      angles: { "r-para": 0, "r-marg": 0 },
    };
    renderOverlay(ctx, view, seg, { hovered: "r-para", lines: doc });
    const lineStrokes = ctx.ops.filter(
      (o) => o.op === "stroke" && o.style === "royalblue",
    );
    expect(lineStrokes).toHaveLength(2);
  });

  it("draws zone rectangles with grips and the region of interest", () => {
    const ctx = new RecordingCtx();
    const profile = makeProfile();
    profile.roi = [0.05, 0.05, 0.9, 0.9];
    renderOverlay(ctx, view, null, { zoneProfile: profile });
    // marginalia 2 + page-number 2 zones, plus the roi box
    expect(ctx.count("strokeRect")).toBe(5);
    const grips = ctx.ops.filter((o) => o.op === "fillRect");
    expect(grips).toHaveLength(16);
    expect(ctx.texts()).toContain("marginalia");
    expect(ctx.texts()).toContain("page-number");
    // zone coordinates are relative, scaled through the image size and view
    const zoneRects = ctx.ops.filter((o) => o.op === "strokeRect");
    expect(zoneRects[0]).toMatchObject({ x: 0, y: 0, w: 250, h: 1500 });
  });

  it("previews in-progress gestures", () => {
    const ctx = new RecordingCtx();
    renderOverlay(ctx, view, null, {
      pendingPolyline: [
        { x: 0, y: 0 },
        { x: 100, y: 100 },
      ],
      pendingRect: [
        { x: 10, y: 10 },
        { x: 30, y: 40 },
      ],
    });
    expect(ctx.count("stroke")).toBe(1);
    const rect = ctx.ops.find((o) => o.op === "strokeRect");
    expect(rect).toMatchObject({ x: 5, y: 5, w: 10, h: 15 });
  });
});

describe("legendEntries", () => {
  it("lists each type once in first-seen order", () => {
    const entries = legendEntries(fiveTypes);
    expect(entries.map((e) => e.label)).toEqual([
      "image",
      "paragraph",
      "marginalia",
      "page-number",
      "signature-mark",
    ]);
    expect(entries[0].color).toBe("green");
  });

  it("appends unclassified when diagnostics exist", () => {
    const seg = makeSeg(
      [square("r", "paragraph", 0, 0, 10)],
      [square("u", null, 20, 20, 5)],
    );
    expect(legendEntries(seg).map((e) => e.label)).toEqual([
      "paragraph",
      "unclassified",
    ]);
  });
});
