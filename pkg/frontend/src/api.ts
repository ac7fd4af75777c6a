// Typed client for the forecast service's /v1 JSON API.
//
// Every number shown in the console comes out of these response types
// untouched; the client never derives or recomputes a probability.

export interface SituationBody {
  down: number;
  ydstogo: number;
  shotgun: boolean;
  no_huddle: boolean;
  own_score: number;
  opp_score: number;
  goaltogo: boolean;
  yardline_100: number;
}

export type Call = "run" | "pass";

export interface ForecastBody {
  pass_prob: number;
  run_prob: number;
  predicted_call: Call;
  filtered_state_probs: number[] | null;
  n_history: number;
  threshold_advice: "consult" | "low_confidence";
}

export interface SessionCreated {
  session_id: string;
  team: string;
  home: boolean;
  n_history: number;
}

export interface SessionSummary extends SessionCreated {
  filtered_state_probs: number[] | null;
}

export interface HealthBody {
  status: string;
  teams: string[];
  threshold: number;
  active_sessions: number;
}

export interface Violation {
  field: string;
  message: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly violations: Violation[],
  ) {
    super(message);
    this.name = "ApiError";
  }

  violationFor(field: string): string | null {
    const hit = this.violations.find((v) => v.field === field);
    return hit ? hit.message : null;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    throw new ApiError(
      response.status,
      body?.code ?? "error",
      body?.message ?? `HTTP ${response.status}`,
      body?.violations ?? [],
    );
  }
  return body as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  health(): Promise<HealthBody> {
    return request(this.url("/v1/health"));
  }

  createSession(team: string, home: boolean): Promise<SessionCreated> {
    return request(this.url("/v1/sessions"), post({ team, home }));
  }

  getSession(sessionId: string): Promise<SessionSummary> {
    return request(this.url(`/v1/sessions/${encodeURIComponent(sessionId)}`));
  }

  forecast(sessionId: string, situation: SituationBody): Promise<ForecastBody> {
    return request(
      this.url(`/v1/sessions/${encodeURIComponent(sessionId)}/forecast`),
      post(situation),
    );
  }

  recordPlay(
    sessionId: string,
    situation: SituationBody,
    actualCall: Call,
  ): Promise<{ n_history: number }> {
    return request(
      this.url(`/v1/sessions/${encodeURIComponent(sessionId)}/plays`),
      post({ ...situation, actual_call: actualCall }),
    );
  }
}
