// Typed client over the trial service. Every method is one endpoint;
// the server owns all game state. Test items arrive as opaque ids plus
// an image route and never carry class information.

export interface Phase {
  kind: "training" | "testing" | "passed" | "exhausted";
  round?: number;
  item?: number;
}

export interface ExhibitEntry {
  path: string;
  label: number;
  seed: number;
  image_url: string;
}

export interface ItemView {
  item_id: string;
  round: number;
  index: number;
  total: number;
  image_url: string;
}

export interface SessionState {
  session: string;
  task: string;
  biased: boolean;
  phase: Phase;
  examples_seen: number;
  training_set: string;
  passed_rounds: number;
  failures: number;
  exhibit: { class0: ExhibitEntry[]; class1: ExhibitEntry[] };
  item: ItemView | null;
}

export interface MoreReply {
  examples_seen: number;
  samples: ExhibitEntry[];
}

export interface BeginReply {
  round: number;
  attempt: number;
  item: ItemView;
}

export interface Verdict {
  round: number;
  attempt: number;
  errors: number;
  correct: number;
  result: "pass" | "fail";
}

export interface AnswerReply {
  verdict: Verdict | null;
  item: ItemView | null;
  phase: Phase;
}

export interface RoundReport {
  round: number;
  attempt: number;
  errors: number;
  correct: number;
  accuracy: number;
  result: string;
  duration_s: number;
  mean_answer_ms: number | null;
}

export interface Report {
  session: string;
  task: string;
  passed: boolean;
  phase: Phase;
  examples_seen: number;
  failures: number;
  answers: number;
  rounds: RoundReport[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public category: string,
    public detail: string,
  ) {
    super(`${category}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class Client {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json().catch(() => ({}));
    if (!res.ok) {
      throw new ApiError(
        res.status,
        payload.error ?? "http",
        payload.detail ?? res.statusText,
      );
    }
    return payload as T;
  }

  createSession(task: string, seed: number, biased = false): Promise<SessionState> {
    return this.call("POST", "/api/sessions", { task, seed, biased });
  }

  getSession(sid: string): Promise<SessionState> {
    return this.call("GET", `/api/sessions/${sid}`);
  }

  moreExamples(sid: string, classId: number): Promise<MoreReply> {
    return this.call("POST", `/api/sessions/${sid}/more`, { class_id: classId });
  }

  beginTesting(sid: string): Promise<BeginReply> {
    return this.call("POST", `/api/sessions/${sid}/begin`);
  }

  submitAnswer(
    sid: string,
    itemId: string,
    classId: number,
    responseMs: number,
  ): Promise<AnswerReply> {
    return this.call("POST", `/api/sessions/${sid}/answers`, {
      item_id: itemId,
      class_id: classId,
      response_ms: responseMs,
    });
  }

  report(sid: string): Promise<Report> {
    return this.call("GET", `/api/sessions/${sid}/report`);
  }
}
