// View layer. The server owns the game; this module renders its
// payloads and maps each user action to exactly one endpoint call.
// The only client-side state is the session id (kept in the URL hash),
// the payload currently on screen, and the answer timer.

import {
  AnswerReply,
  ApiError,
  Client,
  ItemView,
  Report,
  SessionState,
} from "./api";

const INSTRUCTIONS = [
  "This is a visual classification game. Patterns belong to one of two " +
    "classes, and your job is to work out the rule that separates them.",
  "You will study labeled examples side by side: class 0 on the left of " +
    "the screen, class 1 on the right. Ask for more examples whenever " +
    "you like, and stop training once you believe you know the rule.",
  "Testing shows 20 patterns, one at a time; label each one. A perfect " +
    "round advances you; four clean rounds in a row complete the game.",
  "Any mistake sends you back to training with richer examples before " +
    "you retry. You will not be told which answers were wrong, only how " +
    "many. After several failed rounds the game ends.",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, cls: string, onClick: () => void): HTMLButtonElement {
  const b = el("button", cls, label);
  b.addEventListener("click", onClick);
  return b;
}

export class App {
  private state: SessionState | null = null;
  private shownAt = 0; // performance.now() when the current test item appeared
  private banner: HTMLElement;
  private main: HTMLElement;

  constructor(
    root: HTMLElement,
    private client: Client,
    private now: () => number = () => performance.now(),
  ) {
    this.banner = el("div", "banner hidden");
    this.main = el("main");
    root.replaceChildren(this.banner, this.main);
  }

  // ---- wiring ------------------------------------------------------

  async start(): Promise<void> {
    const sid = window.location.hash.replace(/^#\/?/, "");
    if (sid) {
      await this.act(async () => {
        this.state = await this.client.getSession(sid);
        this.renderState();
      });
    } else {
      this.renderIntro();
    }
  }

  /** Run one service call; network failure shows a retry banner and
   * keeps the current screen (the server holds the real state). */
  private async act(fn: () => Promise<void>): Promise<void> {
    try {
      this.hideBanner();
      await fn();
    } catch (err) {
      if (err instanceof ApiError) {
        this.showBanner(`${err.category}: ${err.detail}`, fn);
      } else {
        this.showBanner("network failure - the session is safe on the server", fn);
      }
    }
  }

  private showBanner(text: string, retry: () => Promise<void>): void {
    this.banner.replaceChildren(
      el("span", "", text),
      button("retry", "retry", () => void this.act(retry)),
    );
    this.banner.classList.remove("hidden");
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
  }

  private renderState(): void {
    const s = this.state;
    if (!s) return;
    window.location.hash = `#/${s.session}`;
    if (s.phase.kind === "training") this.renderTraining(s);
    else if (s.phase.kind === "testing" && s.item) this.renderItem(s.item);
    else void this.act(() => this.showReport());
  }

  // ---- screens -----------------------------------------------------

  private renderIntro(): void {
    const box = el("section", "intro");
    box.append(el("h1", "", "visual classification"));
    for (const p of INSTRUCTIONS) box.append(el("p", "", p));

    const task = el("input");
    task.id = "task";
    task.value = "symmetry_global";
    const seed = el("input");
    seed.id = "seed";
    seed.type = "number";
    seed.value = String(Math.floor(Math.random() * 1e6));
    const biased = el("input");
    biased.id = "biased";
    biased.type = "checkbox";

    const form = el("div", "controls");
    form.append(
      el("label", "", "task "),
      task,
      el("label", "", "seed "),
      seed,
      el("label", "", "single-object bias "),
      biased,
      button("start session", "primary start", () =>
        void this.act(async () => {
          this.state = await this.client.createSession(
            task.value,
            Number(seed.value),
            biased.checked,
          );
          this.renderState();
        }),
      ),
    );
    box.append(form);
    this.main.replaceChildren(box);
  }

  private exhibitColumn(cls: 0 | 1, s: SessionState): HTMLElement {
    const entries = cls === 0 ? s.exhibit.class0 : s.exhibit.class1;
    const col = el("section", `exhibit class-${cls}`);
    col.append(el("h2", "", `class ${cls}`));
    const grid = el("div", "grid");
    for (const e of entries) {
      const img = el("img");
      img.src = e.image_url;
      img.alt = `class ${cls} example`;
      grid.append(img);
    }
    col.append(
      grid,
      button(`show 3 more class ${cls}`, `more more-${cls}`, () =>
        void this.act(async () => {
          const sid = s.session;
          await this.client.moreExamples(sid, cls);
          // one action, one call: re-render from the refreshed session
          this.state = await this.client.getSession(sid);
          this.renderState();
        }),
      ),
    );
    return col;
  }

  private renderTraining(s: SessionState): void {
    const head = el("header");
    head.append(
      el("h1", "", `training round ${s.phase.round}`),
      el("p", "status",
        `set ${s.training_set} - ${s.examples_seen} examples seen - ` +
        `${s.passed_rounds}/4 test rounds passed - ${s.failures} failed attempts`),
    );
    const columns = el("div", "columns");
    columns.append(this.exhibitColumn(0, s), this.exhibitColumn(1, s));
    const stop = button("stop training, start the test", "primary stop", () =>
      void this.act(async () => {
        const reply = await this.client.beginTesting(s.session);
        this.renderItem(reply.item);
      }),
    );
    this.main.replaceChildren(head, columns, stop);
  }

  private renderItem(item: ItemView, note?: string): void {
    const head = el("header");
    head.append(
      el("h1", "", `test round ${item.round} of 4`),
      el("p", "progress", `item ${item.index} of ${item.total}`),
    );
    if (note) head.append(el("p", "note", note));

    const img = el("img", "test-image");
    img.src = item.image_url;
    img.alt = "pattern to classify";

    const answer = (cls: 0 | 1) =>
      void this.act(async () => {
        const ms = this.now() - this.shownAt;
        const sid = this.state!.session;
        const reply = await this.client.submitAnswer(sid, item.item_id, cls, ms);
        this.afterAnswer(reply);
      });
    const buttons = el("div", "answers");
    buttons.append(
      button("class 0", "answer answer-0", () => answer(0)),
      button("class 1", "answer answer-1", () => answer(1)),
    );
    this.main.replaceChildren(head, img, buttons);
    this.shownAt = this.now();
  }

  private afterAnswer(reply: AnswerReply): void {
    if (!reply.verdict) {
      this.renderItem(reply.item!);
      return;
    }
    const v = reply.verdict;
    if (v.result === "pass" && reply.item) {
      this.renderItem(reply.item, `round ${v.round} passed, ${v.correct}/20`);
      return;
    }
    // terminal for this round: passed the game, failed, or exhausted
    const box = el("section", "verdict");
    box.append(el("h1", "", v.result === "pass" ? "round passed" : "round failed"));
    box.append(el("p", "", `round ${v.round}: ${v.correct} of 20 correct, ` +
                           `${v.errors} error(s)`));
    if (reply.phase.kind === "passed") {
      box.append(el("p", "", "all four rounds passed."));
      box.append(button("view report", "primary to-report", () =>
        void this.act(() => this.showReport())));
    } else if (reply.phase.kind === "exhausted") {
      box.append(el("p", "", "the session has ended."));
      box.append(button("view report", "primary to-report", () =>
        void this.act(() => this.showReport())));
    } else {
      box.append(el("p", "", "back to training with more varied examples."));
      box.append(button("continue training", "primary to-training", () =>
        void this.act(async () => {
          this.state = await this.client.getSession(this.state!.session);
          this.renderState();
        })));
    }
    this.main.replaceChildren(box);
  }

  private async showReport(): Promise<void> {
    const rep: Report = await this.client.report(this.state!.session);
    const box = el("section", "report");
    box.append(
      el("h1", "", rep.passed ? "passed" : `ended: ${rep.phase.kind}`),
      el("p", "totals",
        `task ${rep.task} - ${rep.examples_seen} training examples - ` +
        `${rep.answers} answers - ${rep.failures} failed rounds`),
    );
    const table = el("table", "rounds");
    const headRow = el("tr");
    for (const h of ["round", "attempt", "correct", "result", "mean ms"]) {
      headRow.append(el("th", "", h));
    }
    table.append(headRow);
    for (const r of rep.rounds) {
      const row = el("tr", r.result);
      row.append(
        el("td", "", String(r.round)),
        el("td", "", String(r.attempt)),
        el("td", "", `${r.correct}/20`),
        el("td", "", r.result),
        el("td", "", r.mean_answer_ms === null ? "-" : r.mean_answer_ms.toFixed(0)),
      );
      table.append(row);
    }
    box.append(table);
    this.main.replaceChildren(box);
  }
}
