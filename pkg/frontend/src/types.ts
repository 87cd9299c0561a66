/** Wire types for the segmentation service. These mirror the JSON the
 * service emits verbatim; the client displays them without reshaping. */

export interface BookInfo {
  id: string;
  page_count: number;
}

export interface PageInfo {
  id: string;
  filename: string;
  width: number;
  height: number;
}

export interface Region {
  id: string;
  type: string | null;
  contour: number[][]; // [x, y] vertices in original image coordinates
  rect: [number, number, number, number]; // x, y, w, h
  area: number;
  candidates: string[];
  fixed: boolean;
  flagged: boolean;
}

export interface Segmentation {
  page_id: string;
  image_filename: string | null;
  size: [number, number]; // original width, height
  regions: Region[];
  reading_order: string[];
  unclassified: Region[];
}

export interface SegResponse {
  segmentation: Segmentation;
  warnings: string[];
  log_length?: number;
}

export interface TextLine {
  parent: string;
  polygon: number[][];
  baseline_y: number;
  index: number;
}

export interface LinesResult {
  page_id: string;
  lines: TextLine[];
  angles: Record<string, number>;
}

export interface TypeRule {
  type: string;
  min_area: number;
  zones: number[][]; // [x, y, w, h] as fractions of the page
  max_occurrence: number | null;
  priority_position: string | null;
}

export interface Profile {
  schema_version: number;
  target_height: number;
  image_kernel: number[];
  text_kernel: number[];
  image_area_threshold: number;
  image_removal_mode: string;
  image_dilation_enabled: boolean;
  binarization_threshold: number | null;
  roi: number[] | null; // relative [x, y, w, h]
  skew_min_area: number;
  heading_height_factor: number;
  heading_area_factor: number;
  rules: TypeRule[];
}

export type EditKind =
  | "cut-polyline"
  | "fix-rect"
  | "fix-polygon"
  | "delete"
  | "retype"
  | "merge";

export interface Edit {
  kind: EditKind;
  geometry?: number[][]; // original image coordinates
  targets?: string[];
  new_type?: string;
}

export interface JobStatus {
  id: string;
  book: string;
  state: "running" | "done" | "cancelled";
  total: number;
  done: number;
  failures: Record<string, string>;
  files: string[];
}

export interface FinalizeResult {
  xml: string;
  lines: string | null;
}

export const REGION_TYPES = [
  "image",
  "paragraph",
  "marginalia",
  "page-number",
  "signature-mark",
  "heading",
  "image-description",
] as const;

/** Overlay fill per type: image green, paragraph red, marginalia yellow,
 * page number cyan, signature mark maroon. Remaining types get stable
 * colors of their own; unknown custom labels share one fallback. */
export const TYPE_COLORS: Record<string, string> = {
  "image": "green",
  "paragraph": "red",
  "marginalia": "yellow",
  "page-number": "cyan",
  "signature-mark": "maroon",
  "heading": "orange",
  "image-description": "teal",
};

export const FALLBACK_COLOR = "slateblue";
export const UNCLASSIFIED_COLOR = "gray";

export function colorFor(type: string | null): string {
  if (type === null) return UNCLASSIFIED_COLOR;
  return TYPE_COLORS[type] ?? FALLBACK_COLOR;
}
