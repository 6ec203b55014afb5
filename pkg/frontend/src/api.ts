/**
 * Typed client for the analysis service under /api/v1.
 *
 * The interfaces mirror the JSON payloads one to one, aliases included
 * (`from`, `contextProfile`, `sessionXml`, ...), so a response can be
 * used as-is without any mapping layer.
 */

export type Order = "leftFirst" | "rightFirst";

export interface Health {
  status: string;
  version: string;
}

export interface SessionSummary {
  id: string;
  stage: string;
  composition: string;
  clients: string[];
  services: string[];
}

export interface ContextAttr {
  name: string;
  value: string;
  kind: string;
  visibility: string;
}

export interface PayloadArg {
  name?: string | null;
  type?: string | null;
  context?: boolean | null;
  concept?: string | null;
  expr?: string | null;
}

export interface Label {
  id: string;
  kind: string;
  operation: string | null;
  direction: string | null;
  guard: string;
  payload: PayloadArg[];
  display: string;
}

export interface State {
  id: string;
  final: boolean;
}

export interface Transition {
  from: string;
  label: string;
  to: string;
}

export interface Protocol {
  id: string;
  states: State[];
  initial: string;
  labels: Label[];
  transitions: Transition[];
  contextProfile: ContextAttr[];
}

export interface Graphs {
  composition: string;
  clients: Protocol[];
  services: Protocol[];
}

export interface ArgumentMatch {
  leftArg: string;
  rightArg: string;
  degree: string;
  type: string;
}

export interface CandidatePair {
  left: string;
  right: string;
  matches: ArgumentMatch[];
}

export interface CandidateGroup {
  pardep: number;
  left: string;
  right: string;
  pairs: CandidatePair[];
}

export interface Candidates {
  stage: string;
  groups: CandidateGroup[];
}

export interface Dependency {
  dominant: string;
  dominated: string;
}

export interface Dependencies {
  stage: string;
  dependencies: Dependency[];
}

export interface Flagged {
  kind: string;
  first: Dependency;
  second: Dependency;
  explanation: string;
}

export interface Report {
  consistent: boolean;
  flagged: Flagged[];
  chainWarnings: string[];
}

export interface PairReport {
  pair: string[];
  report: Report;
}

export interface Verification {
  consistent: boolean;
  merged: Report;
  reports: PairReport[];
}

export interface SelectionItem {
  pardep: number;
  pair: number;
  order: Order;
}

export interface Selection {
  stage: string;
  selected: Dependencies;
  extended: Dependencies;
  verification: Verification;
}

export interface TraceStep {
  choice: number;
  kind: string;
  fired: string[];
  operation: string | null;
  description: string;
}

export interface EnabledChoice {
  index: number;
  kind: string;
  fired: string[];
  operation: string | null;
  description: string;
}

export interface BlockedLabel {
  label: string;
  blocking: string[];
}

export interface Trace {
  stage: string;
  steps: TraceStep[];
  enabled: EnabledChoice[];
  blocked: BlockedLabel[];
  completed: boolean;
}

export interface SavedSession {
  id: string;
  stage: string;
  sessionXml: string;
}

/** Non-2xx response; `message` carries the server's `detail` string. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/**
 * 409 raised by the verification gate: the composition is flagged and
 * the caller has to pass force to run it anyway. Carries the merged
 * report so the verdict can be shown next to the refusal.
 */
export class GateError extends ApiError {
  constructor(
    message: string,
    readonly verification: Report,
  ) {
    super(409, message);
    this.name = "GateError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    query?: Record<string, string>,
  ): Promise<T> {
    let url = `${this.base}/api/v1${path}`;
    if (query && Object.keys(query).length > 0) {
      url += `?${new URLSearchParams(query)}`;
    }
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(url, init);
    if (!res.ok) {
      throw await toError(res);
    }
    return (await res.json()) as T;
  }

  health(): Promise<Health> {
    return this.request("GET", "/health");
  }

  /** Create a session from inline XML, or from the server's default scenario. */
  createSession(scenarioXml?: string): Promise<SessionSummary> {
    const body = scenarioXml === undefined ? {} : { scenarioXml };
    return this.request("POST", "/sessions", body);
  }

  /** Resume a previously saved session from its XML export. */
  loadSession(sessionXml: string): Promise<SessionSummary> {
    return this.request("POST", "/sessions/load", { sessionXml });
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.request("GET", `/sessions/${id}`);
  }

  graphs(id: string): Promise<Graphs> {
    return this.request("GET", `/sessions/${id}/graphs`);
  }

  candidates(id: string): Promise<Candidates> {
    return this.request("GET", `/sessions/${id}/candidates`);
  }

  putSelection(id: string, items: SelectionItem[]): Promise<Selection> {
    return this.request("PUT", `/sessions/${id}/selection`, items);
  }

  extended(id: string): Promise<Dependencies> {
    return this.request("GET", `/sessions/${id}/extended`);
  }

  verification(id: string): Promise<Verification> {
    return this.request("GET", `/sessions/${id}/verification`);
  }

  step(id: string, choice: number, force = false): Promise<Trace> {
    return this.request("POST", `/sessions/${id}/step`, { choice, force });
  }

  reset(id: string): Promise<Trace> {
    return this.request("POST", `/sessions/${id}/reset`);
  }

  trace(id: string, force = false): Promise<Trace> {
    return this.request(
      "GET",
      `/sessions/${id}/trace`,
      undefined,
      force ? { force: "true" } : undefined,
    );
  }

  save(id: string): Promise<SavedSession> {
    return this.request("GET", `/sessions/${id}/save`);
  }
}

async function toError(res: Response): Promise<ApiError> {
  let detail: unknown = null;
  try {
    detail = ((await res.json()) as { detail?: unknown }).detail;
  } catch {
    // non-JSON body; fall through to the status text
  }
  if (detail !== null && typeof detail === "object" && "verification" in detail) {
    const gate = detail as { message?: string; verification: Report };
    return new GateError(gate.message ?? "verification flagged", gate.verification);
  }
  const message =
    typeof detail === "string"
      ? detail
      : detail !== null && detail !== undefined
        ? JSON.stringify(detail)
        : `${res.status} ${res.statusText}`;
  return new ApiError(res.status, message);
}
