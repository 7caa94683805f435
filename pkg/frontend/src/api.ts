// Thin typed client over the HTTP API. Community pages only ever call the
// GET methods; planner methods attach the bearer token and If-Match header.

import type {
  ClusterResponse,
  FacetOptions,
  LayoutResponse,
  OutputCard,
  ProjectView,
  VoiceCard,
  VoicePage,
  VoiceQuery,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function fail(response: Response): Promise<never> {
  let code = "error";
  let message = response.statusText;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body
  }
  throw new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    public baseUrl = "",
    public plannerToken: string | null = null,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await fail(response);
    return response.json() as Promise<T>;
  }

  private plannerHeaders(revision?: number): Record<string, string> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (this.plannerToken) headers["Authorization"] = `Bearer ${this.plannerToken}`;
    if (revision !== undefined) headers["If-Match"] = String(revision);
    return headers;
  }

  getProject(): Promise<ProjectView> {
    return this.getJson("/api/project");
  }

  getFacets(): Promise<FacetOptions> {
    return this.getJson("/api/facets");
  }

  getVoices(query: VoiceQuery = {}): Promise<VoicePage> {
    const params = new URLSearchParams();
    for (const key of ["event_id", "topic_id", "output_id", "sub_geography_id"] as const) {
      for (const value of query[key] ?? []) params.append(key, value);
    }
    if (query.cited !== undefined) params.set("cited", String(query.cited));
    if (query.search) params.set("search", query.search);
    if (query.sort) params.set("sort", query.sort);
    if (query.offset !== undefined) params.set("offset", String(query.offset));
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    const qs = params.toString();
    return this.getJson(`/api/voices${qs ? "?" + qs : ""}`);
  }

  getVoice(id: string): Promise<VoiceCard> {
    return this.getJson(`/api/voices/${encodeURIComponent(id)}`);
  }

  getOutputs(opts: { kind?: string; goal_id?: string } = {}): Promise<OutputCard[]> {
    const params = new URLSearchParams();
    if (opts.kind) params.set("kind", opts.kind);
    if (opts.goal_id) params.set("goal_id", opts.goal_id);
    const qs = params.toString();
    return this.getJson(`/api/outputs${qs ? "?" + qs : ""}`);
  }

  getClusters(zoom: number, bbox?: [number, number, number, number]): Promise<ClusterResponse> {
    const params = new URLSearchParams({ zoom: String(zoom) });
    if (bbox) params.set("bbox", bbox.join(","));
    return this.getJson(`/api/map/clusters?${params}`);
  }

  getLayout(scheme: string): Promise<LayoutResponse> {
    return this.getJson(`/api/cluster-layout?scheme=${encodeURIComponent(scheme)}`);
  }

  async patchVoice(
    id: string,
    revision: number,
    changes: Partial<{
      topic_ids: string[];
      output_ids: string[];
      uncited_rationale: string | null;
      uncited_note: string | null;
    }>,
  ): Promise<VoiceCard> {
    const response = await fetch(`${this.baseUrl}/api/voices/${encodeURIComponent(id)}`, {
      method: "PATCH",
      headers: this.plannerHeaders(revision),
      body: JSON.stringify(changes),
    });
    if (!response.ok) await fail(response);
    return response.json();
  }

  async patchOutput(
    id: string,
    revision: number,
    changes: Record<string, unknown>,
  ): Promise<OutputCard> {
    const response = await fetch(`${this.baseUrl}/api/outputs/${encodeURIComponent(id)}`, {
      method: "PATCH",
      headers: this.plannerHeaders(revision),
      body: JSON.stringify(changes),
    });
    if (!response.ok) await fail(response);
    return response.json();
  }

  async createOutput(fields: Record<string, unknown>): Promise<OutputCard> {
    const response = await fetch(`${this.baseUrl}/api/outputs`, {
      method: "POST",
      headers: this.plannerHeaders(),
      body: JSON.stringify(fields),
    });
    if (!response.ok) await fail(response);
    return response.json();
  }

  async postFeedback(payload: Record<string, unknown>): Promise<void> {
    const response = await fetch(`${this.baseUrl}/api/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) await fail(response);
  }

  // Telemetry lines go out as newline-delimited JSON; failures are
  // swallowed so tracking can never break the page.
  async postTelemetry(kind: "events" | "heartbeats", lines: string[]): Promise<void> {
    if (!lines.length) return;
    try {
      await fetch(`${this.baseUrl}/api/analytics/${kind}`, {
        method: "POST",
        headers: { "Content-Type": "application/x-ndjson" },
        body: lines.join("\n"),
      });
    } catch (error) {
      console.error("telemetry flush failed", error);
    }
  }
}
