// Thin typed wrapper over the episode service.  Every method returns parsed
// JSON; HTTP errors surface as ApiError with the service's detail verbatim.

import type { ActionDoc, EpisodeState, GridInfo, StepResponse } from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`HTTP ${status}: ${typeof detail === "string" ? detail : JSON.stringify(detail)}`);
    this.status = status;
    this.detail = detail;
  }
}

export class ApiClient {
  baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) return undefined as T;
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, (payload as any).detail ?? payload);
    }
    return payload as T;
  }

  grid(): Promise<GridInfo> {
    return this.request("GET", "/grid");
  }

  actionSchema(): Promise<Record<string, unknown>> {
    return this.request("GET", "/schemas/action");
  }

  async createEpisode(scenario: string): Promise<{ episode_id: string; observation: EpisodeState }> {
    return this.request("POST", "/episodes", { scenario });
  }

  state(episodeId: string): Promise<EpisodeState> {
    return this.request("GET", `/episodes/${episodeId}`);
  }

  step(episodeId: string, action: ActionDoc): Promise<StepResponse> {
    return this.request("POST", `/episodes/${episodeId}/step`, action);
  }

  simulate(episodeId: string, action: ActionDoc): Promise<StepResponse> {
    return this.request("POST", `/episodes/${episodeId}/simulate`, action);
  }

  suggest(episodeId: string, agent: string): Promise<{ agent: string; action: ActionDoc }> {
    return this.request("POST", `/episodes/${episodeId}/agent-suggest`, { agent });
  }

  deleteEpisode(episodeId: string): Promise<void> {
    return this.request("DELETE", `/episodes/${episodeId}`);
  }
}
