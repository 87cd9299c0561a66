/** Pure transforms over the profile document for zone and parameter
 * editing. Zones stay in relative page coordinates ([0,1] fractions);
 * conversion from display pixels happens at the call site. Every function
 * returns a new document and leaves its input untouched, so a pending
 * preview can always be discarded by dropping the copy. */

import type { Profile, TypeRule } from "./types.js";
import type { Point } from "./view.js";

export const MIN_ZONE = 0.02;

export type Grip = "nw" | "ne" | "sw" | "se" | "body";

export interface ZoneHandle {
  type: string;
  zoneIndex: number;
  grip: Grip;
}

function copy(profile: Profile): Profile {
  return structuredClone(profile);
}

function ruleOf(profile: Profile, type: string): TypeRule {
  const rule = profile.rules.find((r) => r.type === type);
  if (!rule) throw new Error(`no rule for type ${type}`);
  return rule;
}

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

function corners(zone: number[]): Record<Exclude<Grip, "body">, Point> {
  const [x, y, w, h] = zone;
  return {
    nw: { x, y },
    ne: { x: x + w, y },
    sw: { x, y: y + h },
    se: { x: x + w, y: y + h },
  };
}

/** Corner grips are checked before zone bodies so a grip on a shared edge
 * stays grabbable; `tol` is in the same relative units as `p`. */
export function hitZoneHandle(
  profile: Profile,
  p: Point,
  tol: number,
): ZoneHandle | null {
  for (const rule of profile.rules) {
    for (let i = 0; i < rule.zones.length; i++) {
      for (const [grip, c] of Object.entries(corners(rule.zones[i]))) {
        if (Math.abs(p.x - c.x) <= tol && Math.abs(p.y - c.y) <= tol) {
          return { type: rule.type, zoneIndex: i, grip: grip as Grip };
        }
      }
    }
  }
  for (const rule of profile.rules) {
    for (let i = 0; i < rule.zones.length; i++) {
      const [x, y, w, h] = rule.zones[i];
      if (p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h) {
        return { type: rule.type, zoneIndex: i, grip: "body" };
      }
    }
  }
  return null;
}

/** Move a grip to `to`. Corners resize against the fixed opposite corner
 * with a minimum zone size; a body drag re-centers the zone on `to` at
 * constant size. The whole zone is kept inside the page. */
export function dragZone(
  profile: Profile,
  handle: ZoneHandle,
  to: Point,
): Profile {
  const out = copy(profile);
  const rule = ruleOf(out, handle.type);
  const zone = rule.zones[handle.zoneIndex];
  if (!zone) throw new Error(`no zone ${handle.zoneIndex} on ${handle.type}`);
  const [x, y, w, h] = zone;

  if (handle.grip === "body") {
    const nx = Math.min(1 - w, Math.max(0, to.x - w / 2));
    const ny = Math.min(1 - h, Math.max(0, to.y - h / 2));
    rule.zones[handle.zoneIndex] = [nx, ny, w, h];
    return out;
  }

  // the corner opposite the grip stays put
  const fx = handle.grip === "nw" || handle.grip === "sw" ? x + w : x;
  const fy = handle.grip === "nw" || handle.grip === "ne" ? y + h : y;
  let mx = clamp01(to.x);
  let my = clamp01(to.y);
  if (Math.abs(mx - fx) < MIN_ZONE) mx = fx + Math.sign(mx - fx || 1) * MIN_ZONE;
  if (Math.abs(my - fy) < MIN_ZONE) my = fy + Math.sign(my - fy || 1) * MIN_ZONE;
  mx = clamp01(mx);
  my = clamp01(my);
  const nx = Math.min(fx, mx);
  const ny = Math.min(fy, my);
  rule.zones[handle.zoneIndex] = [
    nx,
    ny,
    Math.max(MIN_ZONE, Math.abs(mx - fx)),
    Math.max(MIN_ZONE, Math.abs(my - fy)),
  ];
  return out;
}

export function addZone(
  profile: Profile,
  type: string,
  zone: number[],
): Profile {
  const out = copy(profile);
  ruleOf(out, type).zones.push([...zone]);
  return out;
}

export function removeZone(
  profile: Profile,
  type: string,
  zoneIndex: number,
): Profile {
  const out = copy(profile);
  const rule = ruleOf(out, type);
  if (zoneIndex < 0 || zoneIndex >= rule.zones.length) {
    throw new Error(`no zone ${zoneIndex} on ${type}`);
  }
  rule.zones.splice(zoneIndex, 1);
  return out;
}

/** Region of interest in relative coordinates, or null to clear it. */
export function withRoi(profile: Profile, roi: number[] | null): Profile {
  const out = copy(profile);
  out.roi = roi
    ? [clamp01(roi[0]), clamp01(roi[1]), clamp01(roi[2]), clamp01(roi[3])]
    : null;
  return out;
}

/** Largest odd number <= n, floored at 1; the service rejects even kernels. */
export function oddify(n: number): number {
  const v = Math.max(1, Math.round(n));
  return v % 2 === 0 ? v - 1 : v;
}

export function withKernel(
  profile: Profile,
  which: "text_kernel" | "image_kernel",
  w: number,
  h: number,
): Profile {
  const out = copy(profile);
  out[which] = [oddify(w), oddify(h)];
  return out;
}

export function withMinArea(
  profile: Profile,
  type: string,
  minArea: number,
): Profile {
  const out = copy(profile);
  ruleOf(out, type).min_area = Math.max(0, Math.round(minArea));
  return out;
}
