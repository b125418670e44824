import type {
  DatasetInfo,
  DrawItem,
  EstimatesPayload,
  SessionConfigBody,
  SessionRecord,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A failed call, carrying the service's machine-readable code when it sent
 *  one ("network" when the request never completed). */
export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number | null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    public readonly base: string,
    fetchFn?: FetchLike,
  ) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("network", `request failed: ${String(err)}`, null);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      // fall through: non-JSON bodies are handled by status below
    }
    if (!response.ok) {
      const detail = (payload as { error?: { code?: string; message?: string } })?.error;
      throw new ApiError(
        detail?.code ?? "http_error",
        detail?.message ?? `unexpected status ${response.status}`,
        response.status,
      );
    }
    return payload as T;
  }

  async listDatasets(): Promise<DatasetInfo[]> {
    const out = await this.request<{ datasets: DatasetInfo[] }>("GET", "/datasets");
    return out.datasets;
  }

  async createSession(config: SessionConfigBody = {}): Promise<string> {
    const out = await this.request<{ id: string }>("POST", "/sessions", config);
    return out.id;
  }

  drawBatch(sessionId: string, n: number): Promise<{ draws: DrawItem[] }> {
    return this.request("POST", `/sessions/${sessionId}/draws?n=${n}`);
  }

  submitLabels(
    sessionId: string,
    items: { unit_id: string; f: number }[],
  ): Promise<EstimatesPayload> {
    return this.request("POST", `/sessions/${sessionId}/labels`, items);
  }

  estimates(sessionId: string): Promise<EstimatesPayload> {
    return this.request("GET", `/sessions/${sessionId}/estimates`);
  }

  session(sessionId: string): Promise<SessionRecord> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  setStopTargets(
    sessionId: string,
    targets: Record<string, number | null>,
  ): Promise<EstimatesPayload> {
    return this.request("POST", `/sessions/${sessionId}/config`, {
      stop_targets: targets,
    });
  }
}
