// Full session walk-throughs against a live service, driven entirely
// through the rendered DOM. Ground truth for answering comes from the
// server's own event log on disk - never from anything the client saw.
// Every payload the client does see is recorded and audited for leaks.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeEach, describe, expect, inject, it } from "vitest";
import { Client } from "../src/api";
import { App } from "../src/app";

const BASE = inject("baseUrl");
const LOG_DIR = inject("logDir");

interface Audit {
  responses: unknown[];
  answerBodies: Array<Record<string, unknown>>;
}

function auditingClient(): { client: Client; audit: Audit } {
  const audit: Audit = { responses: [], answerBodies: [] };
  const fetchFn: typeof fetch = async (input, init) => {
    if (init?.body && String(input).endsWith("/answers")) {
      audit.answerBodies.push(JSON.parse(String(init.body)));
    }
    const res = await fetch(BASE + String(input), init);
    const clone = res.clone();
    try {
      audit.responses.push(await clone.json());
    } catch {
      // non-JSON (images) are not client payloads in the audited sense
    }
    return res;
  };
  return { client: new Client("", fetchFn), audit };
}

/** item_id -> label, read out-of-band from the server's event log. */
function truthFromLog(sid: string): Map<string, number> {
  const out = new Map<string, number>();
  const text = readFileSync(join(LOG_DIR, `${sid}.jsonl`), "utf8");
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const event = JSON.parse(line);
    if (event.event === "begin_testing") {
      for (const item of event.items) out.set(item.item_id, item.label);
    }
  }
  return out;
}

async function until<T>(fn: () => T | null | undefined | false, ms = 15000): Promise<T> {
  const deadline = Date.now() + ms;
  for (;;) {
    const got = fn();
    if (got) return got;
    if (Date.now() > deadline) throw new Error("condition timed out");
    await new Promise((r) => setTimeout(r, 10));
  }
}

function q<T extends HTMLElement>(root: HTMLElement, sel: string): T | null {
  return root.querySelector(sel) as T | null;
}

function sidFromHash(): string {
  return window.location.hash.replace(/^#\/?/, "");
}

/** The item currently on screen, identified via the last audited payload. */
function currentItemId(audit: Audit): string | null {
  for (let i = audit.responses.length - 1; i >= 0; i--) {
    const payload = audit.responses[i] as Record<string, unknown>;
    const item = (payload?.item ?? payload) as Record<string, unknown>;
    if (item && typeof item.item_id === "string") return item.item_id;
  }
  return null;
}

async function startSession(root: HTMLElement, seed: number): Promise<{
  app: App;
  audit: Audit;
  sid: string;
}> {
  window.location.hash = "";
  const { client, audit } = auditingClient();
  const app = new App(root, client);
  await app.start();
  const seedInput = await until(() => q<HTMLInputElement>(root, "#seed"));
  seedInput.value = String(seed);
  q<HTMLButtonElement>(root, ".start")!.click();
  await until(() => q(root, ".columns"));
  return { app, audit, sid: sidFromHash() };
}

/** Click through one 20-item round; wrongIndices are answered flipped. */
async function playRound(
  root: HTMLElement,
  audit: Audit,
  sid: string,
  wrongIndices: number[] = [],
): Promise<void> {
  const truth = truthFromLog(sid);
  for (let i = 0; i < 20; i++) {
    const progress = `item ${i + 1} of 20`;
    await until(() => q(root, ".progress")?.textContent === progress);
    const itemId = currentItemId(audit)!;
    expect(truth.has(itemId)).toBe(true);
    let answer = truth.get(itemId)!;
    if (wrongIndices.includes(i)) answer = 1 - answer;
    q<HTMLButtonElement>(root, `.answer-${answer}`)!.click();
    // wait until this answer's round trip finished: either the next
    // item, a verdict screen, or the pass interstitial appeared
    await until(() =>
      i < 19
        ? q(root, ".progress")?.textContent === `item ${i + 2} of 20`
        : q(root, ".verdict") || q(root, ".note"),
    );
  }
}

function walkLeakAudit(audit: Audit, sid: string): void {
  // no object that names a test item may carry a label or a sample path
  const offenders: string[] = [];
  const scan = (node: unknown): void => {
    if (Array.isArray(node)) {
      node.forEach(scan);
      return;
    }
    if (node === null || typeof node !== "object") return;
    const obj = node as Record<string, unknown>;
    if (typeof obj.item_id === "string") {
      const keys = Object.keys(obj).sort();
      for (const key of keys) {
        if (!["item_id", "round", "index", "total", "image_url"].includes(key)) {
          offenders.push(`${obj.item_id}: ${key}`);
        }
      }
      const url = String(obj.image_url ?? "");
      if (url && url !== `/api/sessions/${sid}/items/${obj.item_id}/image`) {
        offenders.push(`${obj.item_id}: image_url=${url}`);
      }
    }
    Object.values(obj).forEach(scan);
  };
  audit.responses.forEach(scan);
  expect(offenders).toEqual([]);
}

describe("full session walks", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("perfect player: create, train, four rounds, report", async () => {
    const { audit, sid } = await startSession(root, 2001);

    // training screen: class 0 column left of class 1, both 12 strong
    const columns = root.querySelectorAll(".exhibit");
    expect(columns).toHaveLength(2);
    expect(columns[0].className).toContain("class-0");
    expect(columns[1].className).toContain("class-1");
    expect(columns[0].querySelectorAll("img")).toHaveLength(12);

    // one "show 3 more" request for class 1
    q<HTMLButtonElement>(root, ".more-1")!.click();
    await until(() =>
      q(root, ".class-1")?.querySelectorAll("img").length === 15);
    expect(q(root, ".status")!.textContent).toContain("27 examples seen");

    q<HTMLButtonElement>(root, ".stop")!.click();
    await until(() => q(root, ".answers"));

    for (let round = 1; round <= 4; round++) {
      await until(() => q(root, "h1")?.textContent === `test round ${round} of 4`);
      await playRound(root, audit, sid);
    }

    await until(() => q(root, ".verdict"));
    expect(q(root, ".verdict")!.textContent).toContain("all four rounds passed");
    q<HTMLButtonElement>(root, ".to-report")!.click();

    const report = await until(() => q(root, ".report"));
    expect(q(report, "h1")!.textContent).toBe("passed");
    expect(report.querySelectorAll("tr.pass")).toHaveLength(4);
    expect(q(report, ".totals")!.textContent).toContain("80 answers");

    // client-side timing reached the server on every answer
    expect(audit.answerBodies).toHaveLength(80);
    for (const body of audit.answerBodies) {
      expect(typeof body.response_ms).toBe("number");
      expect(body.response_ms as number).toBeGreaterThanOrEqual(0);
    }

    walkLeakAudit(audit, sid);
  });

  it("an error returns the player to training on a deeper set", async () => {
    const { audit, sid } = await startSession(root, 2002);
    q<HTMLButtonElement>(root, ".stop")!.click();
    await until(() => q(root, ".answers"));
    await playRound(root, audit, sid, [7]);

    const verdict = await until(() => q(root, ".verdict"));
    expect(verdict.textContent).toContain("round failed");
    expect(verdict.textContent).toContain("19 of 20 correct");
    q<HTMLButtonElement>(root, ".to-training")!.click();

    await until(() => q(root, ".columns"));
    expect(q(root, "h1")!.textContent).toBe("training round 2");
    expect(q(root, ".status")!.textContent).toContain("set a2");
    walkLeakAudit(audit, sid);
  });

  it("refresh mid-test restores the same phase from the hash", async () => {
    const { audit, sid } = await startSession(root, 2003);
    q<HTMLButtonElement>(root, ".stop")!.click();
    await until(() => q(root, ".answers"));

    // answer three items, then simulate a reload into a fresh App
    const truth = truthFromLog(sid);
    for (let i = 0; i < 3; i++) {
      await until(() => q(root, ".progress")?.textContent === `item ${i + 1} of 20`);
      const itemId = currentItemId(audit)!;
      q<HTMLButtonElement>(root, `.answer-${truth.get(itemId)!}`)!.click();
    }
    await until(() => q(root, ".progress")?.textContent === "item 4 of 20");

    document.body.innerHTML = '<div id="app"></div>';
    const fresh = document.getElementById("app")!;
    window.location.hash = `#/${sid}`;
    const { client } = auditingClient();
    await new App(fresh, client).start();
    await until(() => q(fresh, ".progress"));
    expect(q(fresh, "h1")!.textContent).toBe("test round 1 of 4");
    expect(q(fresh, ".progress")!.textContent).toBe("item 4 of 20");
  });
});
