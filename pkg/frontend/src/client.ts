/** Typed HTTP client for the segmentation service. One method per route,
 * no local state: every answer comes straight from the service. */

import type {
  BookInfo,
  Edit,
  FinalizeResult,
  JobStatus,
  LinesResult,
  PageInfo,
  Profile,
  SegResponse,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }
}

function enc(segment: string): string {
  return encodeURIComponent(segment);
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...a) => fetch(...a),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const init: RequestInit = { method, signal };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = `${res.status} ${res.statusText}`;
      try {
        const doc = (await res.json()) as { detail?: unknown };
        if (typeof doc.detail === "string") detail = doc.detail;
      } catch {
        // non-JSON error body, keep the status line
      }
      throw new ServiceError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  async listBooks(): Promise<BookInfo[]> {
    const doc = await this.request<{ books: BookInfo[] }>("GET", "/books");
    return doc.books;
  }

  async listPages(book: string): Promise<PageInfo[]> {
    const doc = await this.request<{ pages: PageInfo[] }>(
      "GET",
      `/books/${enc(book)}/pages`,
    );
    return doc.pages;
  }

  /** URL of the page scan, for an img element; not fetched here. */
  imageUrl(book: string, page: string): string {
    return `${this.baseUrl}/books/${enc(book)}/pages/${enc(page)}/image`;
  }

  async getProfile(book: string): Promise<Profile> {
    const doc = await this.request<{ profile: Profile }>(
      "GET",
      `/books/${enc(book)}/profile`,
    );
    return doc.profile;
  }

  async putProfile(book: string, profile: Profile): Promise<Profile> {
    const doc = await this.request<{ profile: Profile }>(
      "PUT",
      `/books/${enc(book)}/profile`,
      profile,
    );
    return doc.profile;
  }

  /** Current segmentation. With `override` the service computes a preview
   * under that profile without touching the stored one. */
  segmentation(
    book: string,
    page: string,
    override?: Profile | null,
    signal?: AbortSignal,
  ): Promise<SegResponse> {
    const body = override ? { profile: override } : {};
    return this.request<SegResponse>(
      "POST",
      `/books/${enc(book)}/pages/${enc(page)}/segmentation`,
      body,
      signal,
    );
  }

  postEdit(book: string, page: string, edit: Edit): Promise<SegResponse> {
    return this.request<SegResponse>(
      "POST",
      `/books/${enc(book)}/pages/${enc(page)}/edits`,
      edit,
    );
  }

  lines(book: string, page: string): Promise<LinesResult> {
    return this.request<LinesResult>(
      "GET",
      `/books/${enc(book)}/pages/${enc(page)}/lines`,
    );
  }

  cutAtLine(
    book: string,
    page: string,
    regionId: string,
    lineIndex: number,
    side: "above" | "below",
  ): Promise<SegResponse> {
    return this.request<SegResponse>(
      "POST",
      `/books/${enc(book)}/pages/${enc(page)}/lines/cut`,
      { region_id: regionId, line_index: lineIndex, side },
    );
  }

  retypeAtLine(
    book: string,
    page: string,
    regionId: string,
    lineIndex: number,
    newType: string,
  ): Promise<SegResponse> {
    return this.request<SegResponse>(
      "POST",
      `/books/${enc(book)}/pages/${enc(page)}/lines/retype`,
      { region_id: regionId, line_index: lineIndex, new_type: newType },
    );
  }

  finalize(book: string, page: string): Promise<FinalizeResult> {
    return this.request<FinalizeResult>(
      "POST",
      `/books/${enc(book)}/pages/${enc(page)}/finalize`,
    );
  }

  async consistency(book: string, page: string): Promise<boolean> {
    const doc = await this.request<{ consistent: boolean }>(
      "GET",
      `/books/${enc(book)}/pages/${enc(page)}/consistency`,
    );
    return doc.consistent;
  }

  startLineJob(book: string, pages: string[]): Promise<JobStatus> {
    return this.request<JobStatus>("POST", `/books/${enc(book)}/linejobs`, {
      pages,
    });
  }

  jobStatus(book: string, jobId: string): Promise<JobStatus> {
    return this.request<JobStatus>(
      "GET",
      `/books/${enc(book)}/linejobs/${enc(jobId)}`,
    );
  }

  cancelJob(book: string, jobId: string): Promise<JobStatus> {
    return this.request<JobStatus>(
      "POST",
      `/books/${enc(book)}/linejobs/${enc(jobId)}/cancel`,
    );
  }
}
