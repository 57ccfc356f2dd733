/** Typed client for the deployment-session HTTP API. */

export interface RankingRow {
  sensor: string;
  evsi: number;
  baseline_cost: number;
  candidate_cost: number;
  action_on_signal: string;
  action_on_no_signal: string;
}

export interface RankingsView {
  status: string;
  deployed: string[];
  rankings: RankingRow[];
}

export interface SweepRow {
  sensor: string;
  evsi: number;
  action_on_signal: string;
  action_on_no_signal: string;
}

export interface SweepSection {
  ratio: number;
  rows: SweepRow[];
}

export interface SweepDoc {
  ratios: number[];
  sections: SweepSection[];
}

export interface SignalResponse {
  sensor: string;
  signal: boolean;
  recommended_action: string;
  status: string;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly httpStatus: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class Client {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    const body = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const code = typeof body.code === "string" ? body.code : "bad_request";
      const message = typeof body.message === "string" ? body.message : response.statusText;
      throw new ApiError(code, message, response.status);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health");
  }

  getRankings(): Promise<RankingsView> {
    return this.request("/api/rankings");
  }

  getSession(): Promise<Record<string, unknown>> {
    return this.request("/api/session");
  }

  getSweep(ratios: number[]): Promise<SweepDoc> {
    return this.request(`/api/sweep?ratios=${ratios.join(",")}`);
  }

  deploy(sensor: string): Promise<RankingsView> {
    return this.post("/api/deploy", { sensor });
  }

  signal(sensor: string, signal: boolean): Promise<SignalResponse> {
    return this.post("/api/signal", { sensor, signal });
  }

  reset(): Promise<RankingsView> {
    return this.post("/api/reset", {});
  }
}
