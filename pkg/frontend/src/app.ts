/** Browser shell: a page viewer with a toolbar, canvas overlay, and the
 * correction gestures. All state lives in EditorSession; this file only
 * routes DOM events into it and redraws from its fields. */

import { ServiceClient, ServiceError } from "./client.js";
import {
  CutTool,
  deleteEdit,
  PolygonTool,
  RectTool,
  retypeEdit,
  TOOLS,
  type Tool,
} from "./gestures.js";
import { renderOverlay } from "./overlay.js";
import { EditorSession } from "./session.js";
import { REGION_TYPES, type Profile } from "./types.js";
import { hitRegion, Viewport, type Point } from "./view.js";
import {
  dragZone,
  hitZoneHandle,
  withKernel,
  withRoi,
  type ZoneHandle,
} from "./zones.js";

const MAX_VIEW = { w: 1000, h: 860 };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function option(value: string, label = value): HTMLOptionElement {
  const o = el("option");
  o.value = value;
  o.textContent = label;
  return o;
}

export async function mountApp(
  root: HTMLElement,
  baseUrl = "",
): Promise<void> {
  const client = new ServiceClient(baseUrl);
  const session = new EditorSession(client);

  const toolbar = el("div", "toolbar");
  const bookSelect = el("select", "books");
  const pageSelect = el("select", "pages");
  const toolButtons = new Map<Tool, HTMLButtonElement>();
  const typePicker = el("select", "type-picker");
  for (const t of REGION_TYPES) typePicker.append(option(t));
  typePicker.value = "paragraph";

  const textW = el("input", "kernel");
  const textH = el("input", "kernel");
  for (const [input, value] of [
    [textW, "21"],
    [textH, "15"],
  ] as const) {
    input.type = "range";
    input.min = "1";
    input.max = "61";
    input.step = "2";
    input.value = value;
  }
  const saveBtn = el("button", "save", "save profile");
  const discardBtn = el("button", "discard", "discard preview");
  const finalizeBtn = el("button", "finalize", "finalize page");
  const status = el("div", "status");
  const toasts = el("div", "toasts");

  const stage = el("div", "stage");
  stage.style.position = "relative";
  const img = el("img", "page");
  const canvas = el("canvas", "overlay");
  canvas.style.position = "absolute";
  canvas.style.left = "0";
  canvas.style.top = "0";
  stage.append(img, canvas);

  toolbar.append(bookSelect, pageSelect);
  for (const t of TOOLS) {
    const b = el("button", "tool", t);
    b.addEventListener("click", () => {
      session.setTool(t);
      cut.reset();
      rect.reset();
      polygon.reset();
    });
    toolButtons.set(t, b);
    toolbar.append(b);
  }
  toolbar.append(
    typePicker,
    el("span", "label", "text kernel"),
    textW,
    textH,
    saveBtn,
    discardBtn,
    finalizeBtn,
  );
  root.append(toolbar, stage, status, toasts);

  let view: Viewport | null = null;
  let lastProfile: Profile | null = null;
  const cut = new CutTool();
  const rect = new RectTool();
  const polygon = new PolygonTool();
  let zoneDrag: ZoneHandle | null = null;
  let roiStart: Point | null = null;

  function toast(text: string): void {
    const t = el("div", "toast", text);
    toasts.append(t);
    setTimeout(() => t.remove(), 4000);
  }

  function run(p: Promise<unknown>): void {
    p.catch((e) => {
      if (e instanceof ServiceError) toast(`service: ${e.message}`);
      else toast(String(e));
    });
  }

  function redraw(): void {
    for (const [t, b] of toolButtons) {
      b.disabled = t === session.tool;
    }
    status.textContent = session.warnings.join("; ");
    if (!view) return;
    canvas.width = Math.round(view.displayWidth);
    canvas.height = Math.round(view.displayHeight);
    img.width = canvas.width;
    img.height = canvas.height;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    renderOverlay(ctx, view, session.segmentation, {
      hovered: session.hovered,
      lines: session.lines,
      zoneProfile:
        session.tool === "zone-edit" || session.tool === "roi"
          ? (session.pendingProfile ?? lastProfile)
          : null,
      pendingPolyline:
        session.tool === "cut-line" ? cut.points
        : session.tool === "fix-polygon" ? polygon.points
        : undefined,
      pendingRect: rect.preview(),
    });
  }
  session.onChange = redraw;

  async function populateBooks(): Promise<string | null> {
    const books = await client.listBooks();
    bookSelect.replaceChildren(...books.map((b) => option(b.id)));
    if (books.length === 0) return null;
    await populatePages(books[0].id);
    return books[0].id;
  }

  async function populatePages(book: string): Promise<void> {
    const pages = await client.listPages(book);
    pageSelect.replaceChildren(...pages.map((p) => option(p.id)));
    if (pages.length > 0) await openPage(book, pages[0].id);
  }

  async function openPage(book: string, page: string): Promise<void> {
    img.src = client.imageUrl(book, page);
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error(`image failed: ${page}`));
    });
    view = Viewport.fit(
      img.naturalWidth,
      img.naturalHeight,
      MAX_VIEW.w,
      MAX_VIEW.h,
    );
    lastProfile = await client.getProfile(book);
    await session.open(book, page);
  }

  bookSelect.addEventListener("change", () =>
    run(populatePages(bookSelect.value)),
  );
  pageSelect.addEventListener("change", () =>
    run(openPage(bookSelect.value, pageSelect.value)),
  );

  function imagePoint(ev: MouseEvent): Point | null {
    if (!view) return null;
    const r = canvas.getBoundingClientRect();
    return view.toImage({ x: ev.clientX - r.left, y: ev.clientY - r.top });
  }

  function relativePoint(p: Point): Point {
    return { x: p.x / view!.imageWidth, y: p.y / view!.imageHeight };
  }

  function profileBase(): Profile {
    const base = session.pendingProfile ?? lastProfile;
    if (!base) throw new Error("profile not loaded yet");
    return base;
  }

  canvas.addEventListener("mousedown", (ev) => {
    const p = imagePoint(ev);
    if (!p || ev.button !== 0) return;
    switch (session.tool) {
      case "fix-rect":
        rect.begin(p);
        break;
      case "roi":
        roiStart = p;
        break;
      case "zone-edit":
        zoneDrag = hitZoneHandle(profileBase(), relativePoint(p), 0.01);
        break;
    }
  });

  canvas.addEventListener("mousemove", (ev) => {
    const p = imagePoint(ev);
    if (!p) return;
    if (session.tool === "select" && session.segmentation) {
      const hit = hitRegion(session.segmentation.regions, p);
      run(session.hover(hit ? hit.id : null));
    } else if (session.tool === "fix-rect" && rect.active) {
      rect.drag(p);
      redraw();
    } else if (session.tool === "zone-edit" && zoneDrag) {
      // drag feedback re-previews on release; here just move the rectangle
      session.pendingProfile = dragZone(
        profileBase(),
        zoneDrag,
        relativePoint(p),
      );
      redraw();
    }
  });

  canvas.addEventListener("mouseup", (ev) => {
    const p = imagePoint(ev);
    if (!p) return;
    if (session.tool === "fix-rect" && rect.active) {
      run(session.submitEdit(rect.finish(p, typePicker.value)));
    } else if (session.tool === "roi" && roiStart) {
      const a = relativePoint(roiStart);
      const b = relativePoint(p);
      roiStart = null;
      run(
        session.previewProfile(
          withRoi(profileBase(), [
            Math.min(a.x, b.x),
            Math.min(a.y, b.y),
            Math.abs(b.x - a.x),
            Math.abs(b.y - a.y),
          ]),
        ),
      );
    } else if (session.tool === "zone-edit" && zoneDrag) {
      zoneDrag = null;
      if (session.pendingProfile) run(session.previewProfile(session.pendingProfile));
    }
  });

  canvas.addEventListener("click", (ev) => {
    const p = imagePoint(ev);
    if (!p) return;
    if (session.tool === "cut-line") {
      cut.add(p);
      redraw();
    } else if (session.tool === "fix-polygon") {
      polygon.add(p);
      redraw();
    }
  });

  canvas.addEventListener("dblclick", (ev) => {
    const p = imagePoint(ev);
    if (!p || !session.segmentation) return;
    if (session.tool === "cut-line") {
      run(session.submitEdit(cut.finish(session.segmentation.regions)));
    } else if (session.tool === "fix-polygon") {
      run(session.submitEdit(polygon.finish(typePicker.value)));
    } else if (session.tool === "select") {
      const hit = hitRegion(session.segmentation.regions, p);
      if (hit) run(session.submitEdit(retypeEdit(hit.id, typePicker.value)));
    }
  });

  canvas.addEventListener("contextmenu", (ev) => {
    ev.preventDefault();
    const p = imagePoint(ev);
    if (!p || !session.segmentation || session.tool !== "select") return;
    const hit = hitRegion(session.segmentation.regions, p);
    if (hit) run(session.submitEdit(deleteEdit(hit.id)));
  });

  function kernelPreview(): void {
    run(
      session.previewProfile(
        withKernel(
          profileBase(),
          "text_kernel",
          Number(textW.value),
          Number(textH.value),
        ),
      ),
    );
  }
  textW.addEventListener("change", kernelPreview);
  textH.addEventListener("change", kernelPreview);

  saveBtn.addEventListener("click", () =>
    run(
      session.saveProfile().then((saved) => {
        if (saved) {
          lastProfile = saved;
          toast("profile saved");
        } else {
          toast("no pending changes");
        }
      }),
    ),
  );
  discardBtn.addEventListener("click", () => run(session.discardPreview()));
  finalizeBtn.addEventListener("click", () =>
    run(
      client
        .finalize(session.book, session.page)
        .then((r) => toast(`wrote ${r.xml}`)),
    ),
  );

  await populateBooks();
}
