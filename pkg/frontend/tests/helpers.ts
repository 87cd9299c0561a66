/** Shared fixtures: canned wire objects and two fetch fakes. RecordingFetch
 * replays queued responses for client tests; FakeService holds authoritative
 * state and replays edits the way the real service does, so session tests
 * can check the screen against the server's post-replay truth. */

import type { FetchLike } from "../src/client.js";
import type {
  Edit,
  LinesResult,
  Profile,
  Region,
  Segmentation,
} from "../src/types.js";

export function square(
  id: string,
  type: string | null,
  x: number,
  y: number,
  size: number,
): Region {
  return {
    id,
    type,
    contour: [
      [x, y],
      [x + size, y],
      [x + size, y + size],
      [x, y + size],
    ],
    rect: [x, y, size, size],
    area: size * size,
    candidates: type ? [type] : [],
    fixed: false,
    flagged: false,
  };
}

export function makeSeg(
  regions: Region[],
  unclassified: Region[] = [],
): Segmentation {
  return {
    page_id: "page-00",
    image_filename: "page-00.png",
    size: [2000, 3000],
    regions,
    reading_order: regions.map((r) => r.id),
    unclassified,
  };
}

export function makeProfile(): Profile {
  return {
    schema_version: 1,
    target_height: 1600,
    image_kernel: [5, 5],
    text_kernel: [21, 15],
    image_area_threshold: 3000,
    image_removal_mode: "straight-rect",
    image_dilation_enabled: true,
    binarization_threshold: null,
    roi: null,
    skew_min_area: 1500,
    heading_height_factor: 1.4,
    heading_area_factor: 1.4,
    rules: [
      {
        type: "image",
        min_area: 0,
        zones: [],
        max_occurrence: null,
        priority_position: null,
      },
      {
        type: "paragraph",
        min_area: 2000,
        zones: [],
        max_occurrence: null,
        priority_position: null,
      },
      {
        type: "marginalia",
        min_area: 2000,
        zones: [
          [0, 0, 0.25, 1],
          [0.75, 0, 0.25, 1],
        ],
        max_occurrence: null,
        priority_position: null,
      },
      {
        type: "page-number",
        min_area: 500,
        zones: [
          [0, 0, 1, 0.25],
          [0, 0.75, 1, 0.25],
        ],
        max_occurrence: 1,
        priority_position: "top",
      },
    ],
  };
}

export function json(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export interface Call {
  method: string;
  url: string;
  body?: unknown;
  signal?: AbortSignal;
}

/** Queue-driven fake: each call pops the next canned response. */
export class RecordingFetch {
  calls: Call[] = [];
  private queue: Response[] = [];

  push(res: Response): this {
    this.queue.push(res);
    return this;
  }

  readonly fetch: FetchLike = async (url, init) => {
    this.calls.push({
      method: init?.method ?? "GET",
      url,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
      signal: init?.signal ?? undefined,
    });
    const res = this.queue.shift();
    if (!res) throw new Error(`no canned response for ${url}`);
    return res;
  };
}

const EDIT_KINDS = [
  "cut-polyline",
  "fix-rect",
  "fix-polygon",
  "delete",
  "retype",
  "merge",
];

function clone<T>(v: T): T {
  return structuredClone(v);
}

/** Minimal stateful service double. Edits mutate its authoritative
 * segmentation exactly once per POST, so `snapshot()` is what a replay of
 * the accumulated log produces and can be compared to the client's screen. */
export class FakeService {
  calls: Call[] = [];
  seg: Segmentation;
  profile: Profile;
  profilePuts = 0;
  lineFetches = 0;
  log: Edit[] = [];

  constructor(seg?: Segmentation, profile?: Profile) {
    this.seg =
      seg ??
      makeSeg(
        [
          square("r-image", "image", 600, 300, 400),
          square("r-para", "paragraph", 500, 900, 800),
          square("r-marg", "marginalia", 50, 900, 300),
          square("r-pn", "page-number", 950, 60, 100),
        ],
        [square("u-0", null, 1700, 2800, 60)],
      );
    this.profile = profile ?? makeProfile();
  }

  snapshot(): Segmentation {
    return clone(this.seg);
  }

  countCalls(method: string, suffix: string): number {
    return this.calls.filter(
      (c) => c.method === method && c.url.endsWith(suffix),
    ).length;
  }

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body
      ? (JSON.parse(init.body as string) as Record<string, unknown>)
      : undefined;
    this.calls.push({ method, url, body, signal: init?.signal ?? undefined });
    return this.route(method, url, body);
  };

  private segPayload(warnings: string[] = []): Response {
    return json({
      segmentation: this.snapshot(),
      warnings,
      log_length: this.log.length,
    });
  }

  private route(
    method: string,
    url: string,
    body?: Record<string, unknown>,
  ): Response {
    if (method === "GET" && url === "/books") {
      return json({ books: [{ id: "codex", page_count: 1 }] });
    }
    if (method === "POST" && url.endsWith("/segmentation")) {
      const override = body?.profile as Profile | undefined;
      if (!override) return this.segPayload();
      return json({
        segmentation: this.previewFor(override),
        warnings: ["preview"],
        log_length: this.log.length,
      });
    }
    if (method === "POST" && url.endsWith("/edits")) {
      return this.applyEdit(body as unknown as Edit);
    }
    if (method === "GET" && url.endsWith("/profile")) {
      return json({ profile: clone(this.profile) });
    }
    if (method === "PUT" && url.endsWith("/profile")) {
      this.profilePuts += 1;
      this.profile = body as unknown as Profile;
      return json({ profile: clone(this.profile) });
    }
    if (method === "GET" && url.endsWith("/lines")) {
      this.lineFetches += 1;
      return json(this.linesDoc());
    }
    if (method === "POST" && url.endsWith("/lines/cut")) {
      return this.applyLineCut(body as { region_id: string });
    }
    return json({ detail: `no route ${method} ${url}` }, 404);
  }

  /** Previews must be visibly different from the stored state. Removing a
   * marginalia zone reclassifies the regions that zone admitted; this double
   * compresses that to "fewer zones, fewer marginalia regions". */
  private previewFor(override: Profile): Segmentation {
    const seg = this.snapshot();
    const zonesIn = (p: Profile) =>
      p.rules.find((r) => r.type === "marginalia")?.zones.length ?? 0;
    if (zonesIn(override) < zonesIn(this.profile)) {
      seg.regions = seg.regions.filter((r) => r.type !== "marginalia");
      seg.reading_order = seg.regions.map((r) => r.id);
    }
    return seg;
  }

  private applyEdit(edit: Edit): Response {
    if (!EDIT_KINDS.includes(edit.kind)) {
      return json({ detail: `unknown edit kind ${edit.kind}` }, 422);
    }
    const targets = edit.targets ?? [];
    for (const t of targets) {
      if (!this.seg.regions.some((r) => r.id === t)) {
        return json({ detail: `no region ${t}` }, 404);
      }
    }
    if (edit.kind === "delete") {
      this.seg.regions = this.seg.regions.filter((r) => r.id !== targets[0]);
    } else if (edit.kind === "retype") {
      const r = this.seg.regions.find((x) => x.id === targets[0]);
      if (r) r.type = edit.new_type ?? r.type;
    } else if (edit.kind === "merge") {
      const kept = this.seg.regions.find((x) => x.id === targets[0]);
      if (kept) kept.type = edit.new_type ?? kept.type;
      this.seg.regions = this.seg.regions.filter(
        (r) => r.id === targets[0] || !targets.includes(r.id),
      );
    } else if (edit.kind === "cut-polyline") {
      const idx = this.seg.regions.findIndex((r) => r.id === targets[0]);
      const parent = this.seg.regions[idx];
      const [x, y, w, h] = parent.rect;
      const top = square(`${parent.id}.1`, parent.type, x, y, Math.min(w, h / 2));
      const bot = square(
        `${parent.id}.2`,
        parent.type,
        x,
        y + h / 2,
        Math.min(w, h / 2),
      );
      this.seg.regions.splice(idx, 1, top, bot);
    } else {
      // fixed-geometry region, one new entry
      this.seg.regions.push(
        square(`fix-${this.log.length}`, edit.new_type ?? null, 0, 0, 50),
      );
    }
    this.seg.reading_order = this.seg.regions.map((r) => r.id);
    this.log.push(edit);
    return this.segPayload();
  }

  private applyLineCut(body: { region_id: string }): Response {
    return this.applyEdit({
      kind: "cut-polyline",
      geometry: [
        [0, 0],
        [1, 1],
      ],
      targets: [body.region_id],
    });
  }

  private linesDoc(): LinesResult {
    const lines = [];
    const angles: Record<string, number> = {};
    for (const r of this.seg.regions) {
      if (r.type === "image") continue;
      angles[r.id] = 0;
      const [x, y, w, h] = r.rect;
      for (let i = 0; i < 2; i++) {
        const ly = y + (h * (i + 1)) / 3;
        lines.push({
          parent: r.id,
          polygon: [
            [x, ly - 10],
            [x + w, ly - 10],
            [x + w, ly + 10],
            [x, ly + 10],
          ],
          baseline_y: Math.round(ly + 8),
          index: i,
        });
      }
    }
    return { page_id: this.seg.page_id, lines, angles };
  }
}
