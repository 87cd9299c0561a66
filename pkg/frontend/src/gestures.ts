/** Tool state machines. Every completed gesture yields exactly one Edit
 * for the service to replay; cancelled or degenerate gestures yield null
 * and nothing is posted. All points are original image coordinates. */

import type { Edit, Region } from "./types.js";
import { hitRegion, type Point } from "./view.js";

export const TOOLS = [
  "select",
  "roi",
  "cut-line",
  "fix-rect",
  "fix-polygon",
  "zone-edit",
] as const;

export type Tool = (typeof TOOLS)[number];

function toGeometry(points: Point[]): number[][] {
  return points.map((p) => [p.x, p.y]);
}

/** Polyline cut: click to add vertices, double click to finish. The region
 * the line passes through is the cut target; vertices and segment midpoints
 * are probed in order and the first hit wins. */
export class CutTool {
  points: Point[] = [];

  add(p: Point): void {
    this.points.push(p);
  }

  reset(): void {
    this.points = [];
  }

  finish(regions: Region[]): Edit | null {
    const pts = this.points;
    this.points = [];
    if (pts.length < 2) return null;
    const target = this.targetOf(pts, regions);
    if (!target) return null;
    return {
      kind: "cut-polyline",
      geometry: toGeometry(pts),
      targets: [target.id],
    };
  }

  private targetOf(pts: Point[], regions: Region[]): Region | null {
    const probes: Point[] = [];
    for (let i = 0; i < pts.length; i++) {
      probes.push(pts[i]);
      if (i + 1 < pts.length) {
        probes.push({
          x: (pts[i].x + pts[i + 1].x) / 2,
          y: (pts[i].y + pts[i + 1].y) / 2,
        });
      }
    }
    for (const p of probes) {
      const hit = hitRegion(regions, p);
      if (hit) return hit;
    }
    return null;
  }
}

/** Drag a rectangle, pick a type: emits a fixed-geometry rectangle edit.
 * Geometry is the two opposite corners, normalized min then max. */
export class RectTool {
  private start: Point | null = null;
  current: Point | null = null;

  begin(p: Point): void {
    this.start = p;
    this.current = p;
  }

  drag(p: Point): void {
    if (this.start) this.current = p;
  }

  get active(): boolean {
    return this.start !== null;
  }

  /** Corners of the in-progress rectangle for preview drawing. */
  preview(): [Point, Point] | null {
    if (!this.start || !this.current) return null;
    return [this.start, this.current];
  }

  reset(): void {
    this.start = null;
    this.current = null;
  }

  finish(p: Point, newType: string): Edit | null {
    const start = this.start;
    this.reset();
    if (!start || !newType) return null;
    const x0 = Math.min(start.x, p.x);
    const y0 = Math.min(start.y, p.y);
    const x1 = Math.max(start.x, p.x);
    const y1 = Math.max(start.y, p.y);
    // sub-pixel drags are accidental clicks, not regions
    if (x1 - x0 < 1 || y1 - y0 < 1) return null;
    return {
      kind: "fix-rect",
      geometry: [
        [x0, y0],
        [x1, y1],
      ],
      new_type: newType,
    };
  }
}

/** Click out a polygon, double click to close it with a chosen type. */
export class PolygonTool {
  points: Point[] = [];

  add(p: Point): void {
    this.points.push(p);
  }

  reset(): void {
    this.points = [];
  }

  finish(newType: string): Edit | null {
    const pts = this.points;
    this.points = [];
    if (pts.length < 3 || !newType) return null;
    return {
      kind: "fix-polygon",
      geometry: toGeometry(pts),
      new_type: newType,
    };
  }
}

/** Right click on a region. */
export function deleteEdit(regionId: string): Edit {
  return { kind: "delete", targets: [regionId] };
}

/** Double click on a region, then pick from the type list. */
export function retypeEdit(regionId: string, newType: string): Edit {
  return { kind: "retype", targets: [regionId], new_type: newType };
}

export function mergeEdit(regionIds: string[], newType: string): Edit | null {
  if (regionIds.length < 2 || !newType) return null;
  return { kind: "merge", targets: [...regionIds], new_type: newType };
}
