import type {
  ItemsResponse,
  SessionInfo,
  Summary,
  TagResponse,
  TagSubmission,
} from "./types.js";

/** Minimal response surface so tests can stub fetch without DOM Response. */
export interface FetchResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<FetchResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function raise(resp: FetchResponse): Promise<never> {
  let code = "error";
  let message = `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike,
    private readonly base: string = "",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) await raise(resp);
    return (await resp.json()) as T;
  }

  createSession(annotator: string, dialect?: string): Promise<SessionInfo> {
    const body: Record<string, string> = { annotator };
    if (dialect) body.dialect = dialect;
    return this.request<SessionInfo>("POST", "/sessions", body);
  }

  items(sessionId: string, n = 1): Promise<ItemsResponse> {
    return this.request<ItemsResponse>("GET", `/sessions/${sessionId}/items?n=${n}`);
  }

  submitTag(submission: TagSubmission): Promise<TagResponse> {
    return this.request<TagResponse>("POST", "/tags", submission);
  }

  summary(dialect?: string): Promise<Summary> {
    const query = dialect ? `?dialect=${encodeURIComponent(dialect)}` : "";
    return this.request<Summary>("GET", `/summary${query}`);
  }
}
