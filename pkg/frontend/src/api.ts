import type { NextResponse, RatingRecord, Rubrics, Summary } from "./types.js";

/** Server rejected the request (4xx/5xx); `status` carries the HTTP code. */
export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** The request never reached the server (offline, refused, timeout). */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    public baseUrl: string,
    public studyId: string,
    private fetchFn: FetchLike = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new NetworkError(String(err));
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response.json();
  }

  imageUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  next(raterId: string): Promise<NextResponse> {
    const rater = encodeURIComponent(raterId);
    return this.request(
      `/api/studies/${encodeURIComponent(this.studyId)}/next?rater=${rater}`,
    ) as Promise<NextResponse>;
  }

  async submit(record: RatingRecord): Promise<void> {
    await this.request(`/api/studies/${encodeURIComponent(this.studyId)}/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(record),
    });
  }

  summary(): Promise<Summary> {
    return this.request(
      `/api/studies/${encodeURIComponent(this.studyId)}/summary`,
    ) as Promise<Summary>;
  }

  rubrics(): Promise<Rubrics> {
    return this.request("/api/rubrics") as Promise<Rubrics>;
  }
}
