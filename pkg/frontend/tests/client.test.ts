import { describe, expect, it } from "vitest";

import { ServiceClient, ServiceError } from "../src/client.js";
import { json, makeProfile, makeSeg, RecordingFetch } from "./helpers.js";

function clientWith(fake: RecordingFetch): ServiceClient {
  return new ServiceClient("", fake.fetch);
}

describe("ServiceClient routes", () => {
  it("lists books and pages", async () => {
    const fake = new RecordingFetch()
      .push(json({ books: [{ id: "codex", page_count: 3 }] }))
      .push(
        json({
          pages: [
            { id: "page-00", filename: "page-00.png", width: 10, height: 20 },
          ],
        }),
      );
    const c = clientWith(fake);
    const books = await c.listBooks();
    expect(books).toEqual([{ id: "codex", page_count: 3 }]);
    const pages = await c.listPages("codex");
    expect(pages[0].id).toBe("page-00");
    expect(fake.calls.map((x) => [x.method, x.url])).toEqual([
      ["GET", "/books"],
      ["GET", "/books/codex/pages"],
    ]);
  });

  it("builds image URLs without fetching", () => {
    const fake = new RecordingFetch();
    const c = new ServiceClient("http://svc", fake.fetch);
    expect(c.imageUrl("codex", "page-00")).toBe(
      "http://svc/books/codex/pages/page-00/image",
    );
    expect(fake.calls).toHaveLength(0);
  });

  it("posts segmentation with an empty body when there is no override", async () => {
    const fake = new RecordingFetch().push(
      json({ segmentation: makeSeg([]), warnings: [] }),
    );
    await clientWith(fake).segmentation("codex", "page-00");
    expect(fake.calls[0]).toMatchObject({
      method: "POST",
      url: "/books/codex/pages/page-00/segmentation",
      body: {},
    });
  });

  it("wraps a profile override under the profile key", async () => {
    const profile = makeProfile();
    const fake = new RecordingFetch().push(
      json({ segmentation: makeSeg([]), warnings: [] }),
    );
    await clientWith(fake).segmentation("codex", "page-00", profile);
    expect(fake.calls[0].body).toEqual({ profile });
  });

  it("posts edits verbatim", async () => {
    const fake = new RecordingFetch().push(
      json({ segmentation: makeSeg([]), warnings: [], log_length: 1 }),
    );
    const edit = { kind: "delete" as const, targets: ["r-1"] };
    await clientWith(fake).postEdit("codex", "page-00", edit);
    expect(fake.calls[0]).toMatchObject({
      method: "POST",
      url: "/books/codex/pages/page-00/edits",
      body: edit,
    });
  });

  it("sends line gestures with the service field names", async () => {
    const payload = json({ segmentation: makeSeg([]), warnings: [] });
    const fake = new RecordingFetch().push(payload.clone()).push(payload.clone());
    const c = clientWith(fake);
    await c.cutAtLine("codex", "page-00", "r-1", 2, "below");
    await c.retypeAtLine("codex", "page-00", "r-1", 0, "heading");
    expect(fake.calls[0].url).toBe("/books/codex/pages/page-00/lines/cut");
    expect(fake.calls[0].body).toEqual({
      region_id: "r-1",
      line_index: 2,
      side: "below",
    });
    expect(fake.calls[1].url).toBe("/books/codex/pages/page-00/lines/retype");
    expect(fake.calls[1].body).toEqual({
      region_id: "r-1",
      line_index: 0,
      new_type: "heading",
    });
  });

  it("unwraps profile, consistency, and finalize envelopes", async () => {
    const profile = makeProfile();
    const fake = new RecordingFetch()
      .push(json({ profile }))
      .push(json({ profile }))
      .push(json({ consistent: true }))
      .push(json({ xml: "/b/page-00.xml", lines: null }));
    const c = clientWith(fake);
    expect(await c.getProfile("codex")).toEqual(profile);
    expect(await c.putProfile("codex", profile)).toEqual(profile);
    expect(await c.consistency("codex", "page-00")).toBe(true);
    expect(await c.finalize("codex", "page-00")).toEqual({
      xml: "/b/page-00.xml",
      lines: null,
    });
    expect(fake.calls[1].method).toBe("PUT");
  });

  it("drives line jobs", async () => {
    const status = {
      id: "job-1",
      book: "codex",
      state: "running",
      total: 3,
      done: 0,
      failures: {},
      files: [],
    };
    const fake = new RecordingFetch()
      .push(json(status))
      .push(json({ ...status, state: "done", done: 3 }))
      .push(json({ ...status, state: "cancelled" }));
    const c = clientWith(fake);
    const started = await c.startLineJob("codex", ["page-00", "page-01"]);
    expect(started.id).toBe("job-1");
    expect(fake.calls[0].body).toEqual({ pages: ["page-00", "page-01"] });
    expect((await c.jobStatus("codex", "job-1")).state).toBe("done");
    expect((await c.cancelJob("codex", "job-1")).state).toBe("cancelled");
    expect(fake.calls[2].url).toBe("/books/codex/linejobs/job-1/cancel");
  });

  it("percent-encodes path segments", async () => {
    const fake = new RecordingFetch().push(json({ pages: [] }));
    await clientWith(fake).listPages("my book");
    expect(fake.calls[0].url).toBe("/books/my%20book/pages");
  });
});

describe("ServiceClient errors", () => {
  it("surfaces the service detail on validation failures", async () => {
    const fake = new RecordingFetch().push(
      json({ detail: "unknown edit kind warp" }, 422),
    );
    const err = await clientWith(fake)
      .postEdit("codex", "page-00", { kind: "delete", targets: ["x"] })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).status).toBe(422);
    expect((err as ServiceError).message).toBe("unknown edit kind warp");
  });

  it("falls back to the status line for non-JSON error bodies", async () => {
    const fake = new RecordingFetch().push(
      new Response("boom", { status: 500, statusText: "Internal Server Error" }),
    );
    const err = await clientWith(fake)
      .listBooks()
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).message).toBe("500 Internal Server Error");
  });
});
