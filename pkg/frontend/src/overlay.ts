/** Canvas overlay drawing. Regions are filled translucent polygons colored
 * by type with a legend; unclassified candidates are dashed outlines; the
 * hovered text region shows its detected lines. All geometry arrives in
 * original image coordinates and is scaled through the viewport here. */

import type { LinesResult, Profile, Region, Segmentation } from "./types.js";
import { colorFor, UNCLASSIFIED_COLOR } from "./types.js";
import type { Point, Viewport } from "./view.js";

/** The 2d-context subset the renderer uses; a plain recording object
 * satisfies it in tests. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

export interface OverlayOptions {
  hovered?: string | null;
  lines?: LinesResult | null;
  selection?: string[];
  /** Zone rectangles of this profile are drawn when set (zone edit mode). */
  zoneProfile?: Profile | null;
  /** In-progress gesture feedback, image coordinates. */
  pendingPolyline?: Point[];
  pendingRect?: [Point, Point] | null;
}

export const FILL_ALPHA = 0.35;
const GRIP = 6; // display px, half size of a zone corner grip

function tracePolygon(
  ctx: Draw2D,
  view: Viewport,
  polygon: number[][],
): void {
  ctx.beginPath();
  polygon.forEach((v, i) => {
    const d = view.toDisplay({ x: v[0], y: v[1] });
    if (i === 0) ctx.moveTo(d.x, d.y);
    else ctx.lineTo(d.x, d.y);
  });
  ctx.closePath();
}

/** Types present in the segmentation, in stable order, for the legend. */
export function legendEntries(
  seg: Segmentation,
): { label: string; color: string }[] {
  const seen: string[] = [];
  for (const r of seg.regions) {
    const label = r.type ?? "unclassified";
    if (!seen.includes(label)) seen.push(label);
  }
  if (seg.unclassified.length > 0 && !seen.includes("unclassified")) {
    seen.push("unclassified");
  }
  return seen.map((label) => ({
    label,
    color: label === "unclassified" ? UNCLASSIFIED_COLOR : colorFor(label),
  }));
}

function drawRegion(
  ctx: Draw2D,
  view: Viewport,
  region: Region,
  selected: boolean,
): void {
  const color = colorFor(region.type);
  tracePolygon(ctx, view, region.contour);
  ctx.globalAlpha = FILL_ALPHA;
  ctx.fillStyle = color;
  ctx.fill();
  ctx.globalAlpha = 1;
  ctx.strokeStyle = color;
  ctx.lineWidth = selected ? 4 : 2;
  // flagged regions inherited a type the rules could not confirm
  ctx.setLineDash(region.flagged ? [6, 4] : []);
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawUnclassified(ctx: Draw2D, view: Viewport, region: Region): void {
  tracePolygon(ctx, view, region.contour);
  ctx.globalAlpha = 1;
  ctx.strokeStyle = UNCLASSIFIED_COLOR;
  ctx.lineWidth = 1;
  ctx.setLineDash([4, 4]);
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawLines(
  ctx: Draw2D,
  view: Viewport,
  lines: LinesResult,
  regionId: string,
): void {
  ctx.globalAlpha = 1;
  ctx.strokeStyle = "royalblue";
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  for (const line of lines.lines) {
    if (line.parent !== regionId) continue;
    tracePolygon(ctx, view, line.polygon);
    ctx.stroke();
  }
}

function drawLegend(ctx: Draw2D, seg: Segmentation): void {
  ctx.font = "12px sans-serif";
  let y = 8;
  for (const entry of legendEntries(seg)) {
    ctx.globalAlpha = 1;
    ctx.fillStyle = entry.color;
    ctx.fillRect(8, y, 12, 12);
    ctx.fillStyle = "black";
    ctx.fillText(entry.label, 26, y + 10);
    y += 18;
  }
}

function drawZones(ctx: Draw2D, view: Viewport, profile: Profile): void {
  ctx.globalAlpha = 1;
  ctx.font = "11px sans-serif";
  const w = view.imageWidth;
  const h = view.imageHeight;
  for (const rule of profile.rules) {
    const color = colorFor(rule.type);
    for (const zone of rule.zones) {
      const a = view.toDisplay({ x: zone[0] * w, y: zone[1] * h });
      const b = view.toDisplay({
        x: (zone[0] + zone[2]) * w,
        y: (zone[1] + zone[3]) * h,
      });
      ctx.strokeStyle = color;
      ctx.lineWidth = 1;
      ctx.setLineDash([8, 4]);
      ctx.strokeRect(a.x, a.y, b.x - a.x, b.y - a.y);
      ctx.setLineDash([]);
      ctx.fillStyle = color;
      for (const [gx, gy] of [
        [a.x, a.y],
        [b.x, a.y],
        [a.x, b.y],
        [b.x, b.y],
      ]) {
        ctx.fillRect(gx - GRIP / 2, gy - GRIP / 2, GRIP, GRIP);
      }
      ctx.fillText(rule.type, a.x + 4, a.y + 12);
    }
  }
  if (profile.roi) {
    const a = view.toDisplay({
      x: profile.roi[0] * w,
      y: profile.roi[1] * h,
    });
    const b = view.toDisplay({
      x: (profile.roi[0] + profile.roi[2]) * w,
      y: (profile.roi[1] + profile.roi[3]) * h,
    });
    ctx.strokeStyle = "black";
    ctx.lineWidth = 2;
    ctx.setLineDash([2, 4]);
    ctx.strokeRect(a.x, a.y, b.x - a.x, b.y - a.y);
    ctx.setLineDash([]);
  }
}

function drawPending(ctx: Draw2D, view: Viewport, opts: OverlayOptions): void {
  ctx.globalAlpha = 1;
  ctx.strokeStyle = "black";
  ctx.lineWidth = 1;
  ctx.setLineDash([3, 3]);
  if (opts.pendingPolyline && opts.pendingPolyline.length > 1) {
    ctx.beginPath();
    opts.pendingPolyline.forEach((p, i) => {
      const d = view.toDisplay(p);
      if (i === 0) ctx.moveTo(d.x, d.y);
      else ctx.lineTo(d.x, d.y);
    });
    ctx.stroke();
  }
  if (opts.pendingRect) {
    const a = view.toDisplay(opts.pendingRect[0]);
    const b = view.toDisplay(opts.pendingRect[1]);
    ctx.strokeRect(
      Math.min(a.x, b.x),
      Math.min(a.y, b.y),
      Math.abs(b.x - a.x),
      Math.abs(b.y - a.y),
    );
  }
  ctx.setLineDash([]);
}

/** Draw one frame of overlay on top of the page image. A null segmentation
 * leaves the image bare. */
export function renderOverlay(
  ctx: Draw2D,
  view: Viewport,
  seg: Segmentation | null,
  opts: OverlayOptions = {},
): void {
  if (seg) {
    for (const region of seg.regions) {
      drawRegion(ctx, view, region, opts.selection?.includes(region.id) ?? false);
    }
    for (const region of seg.unclassified) {
      drawUnclassified(ctx, view, region);
    }
    if (opts.hovered && opts.lines) {
      drawLines(ctx, view, opts.lines, opts.hovered);
    }
    drawLegend(ctx, seg);
  }
  if (opts.zoneProfile) drawZones(ctx, view, opts.zoneProfile);
  drawPending(ctx, view, opts);
}
