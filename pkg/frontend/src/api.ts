// Thin typed client for the orchestrator HTTP API.

import type {
  ApprovalDecision,
  EventView,
  GateName,
  RunSummary,
  RunView,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

export class ConsoleApi {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async listRuns(): Promise<RunSummary[]> {
    const body = await this.request<{ runs: RunSummary[] }>("/runs");
    return body.runs;
  }

  getRun(runId: string): Promise<RunView> {
    return this.request<RunView>(`/runs/${runId}`);
  }

  async getEvents(runId: string, after: number, waitSeconds = 0): Promise<EventView[]> {
    const query = `after=${after}&wait=${waitSeconds}`;
    const body = await this.request<{ events: EventView[] }>(
      `/runs/${runId}/events?${query}`,
    );
    return body.events;
  }

  submitApproval(
    runId: string,
    gate: GateName,
    payload: ApprovalDecision[],
    actor = "console",
  ): Promise<RunView> {
    return this.request<RunView>(`/runs/${runId}/approval`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ gate, payload, actor }),
    });
  }

  artifactUrl(runId: string, path: string): string {
    return `${this.baseUrl}/runs/${runId}/artifacts/${path}`;
  }
}
