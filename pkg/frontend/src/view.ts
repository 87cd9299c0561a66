/** Coordinate mapping between original image pixels and display pixels.
 *
 * Gestures arrive in display space, are converted to image space once, and
 * every stored geometry stays in image space; drawing converts back at the
 * current scale. Image coordinates are kept as floats so the display to
 * image to display round trip loses nothing at any zoom; the service rounds
 * on its side when it rasterizes.
 */

import type { Region } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export class Viewport {
  constructor(
    readonly imageWidth: number,
    readonly imageHeight: number,
    public scale = 1,
  ) {
    if (imageWidth <= 0 || imageHeight <= 0) {
      throw new Error(`bad image size ${imageWidth}x${imageHeight}`);
    }
    if (scale <= 0) throw new Error(`bad scale ${scale}`);
  }

  /** Largest scale at which the whole page fits inside maxW x maxH. */
  static fit(
    imageWidth: number,
    imageHeight: number,
    maxW: number,
    maxH: number,
  ): Viewport {
    const s = Math.min(maxW / imageWidth, maxH / imageHeight);
    return new Viewport(imageWidth, imageHeight, s);
  }

  get displayWidth(): number {
    return this.imageWidth * this.scale;
  }

  get displayHeight(): number {
    return this.imageHeight * this.scale;
  }

  toDisplay(p: Point): Point {
    return { x: p.x * this.scale, y: p.y * this.scale };
  }

  /** Display pixel to image coordinates, clamped to the page. */
  toImage(p: Point): Point {
    return {
      x: clamp(p.x / this.scale, 0, this.imageWidth),
      y: clamp(p.y / this.scale, 0, this.imageHeight),
    };
  }

  zoomed(factor: number): Viewport {
    return new Viewport(this.imageWidth, this.imageHeight, this.scale * factor);
  }
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Ray-cast point in polygon; points on an edge count as inside enough
 * for hit testing. */
export function pointInPolygon(p: Point, poly: number[][]): boolean {
  let inside = false;
  const n = poly.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const xi = poly[i][0];
    const yi = poly[i][1];
    const xj = poly[j][0];
    const yj = poly[j][1];
    const crosses = yi > p.y !== yj > p.y;
    if (crosses && p.x < ((xj - xi) * (p.y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

function inRect(p: Point, rect: [number, number, number, number]): boolean {
  const [x, y, w, h] = rect;
  return p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h;
}

/** Region under an image-space point; when regions overlap the smallest
 * one wins so small furniture stays clickable inside large blocks. */
export function hitRegion(regions: Region[], p: Point): Region | null {
  let best: Region | null = null;
  for (const r of regions) {
    if (!inRect(p, r.rect)) continue;
    if (!pointInPolygon(p, r.contour)) continue;
    if (best === null || r.area < best.area) best = r;
  }
  return best;
}
