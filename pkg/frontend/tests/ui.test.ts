// View behavior with a canned service: answer timing, the retry
// banner, and error surfacing. No live backend here.

import { beforeEach, describe, expect, it } from "vitest";
import { Client } from "../src/api";
import { App } from "../src/app";

const ITEM4 = {
  item_id: "r1a1i04",
  round: 1,
  index: 4,
  total: 20,
  image_url: "/api/sessions/s1/items/r1a1i04/image",
};

const TESTING_STATE = {
  session: "s1",
  task: "symmetry_global",
  biased: false,
  phase: { kind: "testing", round: 1, item: 4 },
  examples_seen: 24,
  training_set: "a1",
  passed_rounds: 0,
  failures: 0,
  exhibit: { class0: [], class1: [] },
  item: ITEM4,
};

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

async function flush(): Promise<void> {
  for (let i = 0; i < 20; i++) await new Promise((r) => setTimeout(r, 0));
}

describe("view layer", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
    window.location.hash = "#/s1";
  });

  it("sends the measured response time with each answer", async () => {
    let clock = 1000;
    const bodies: Array<Record<string, unknown>> = [];
    const fetchFn: typeof fetch = async (input, init) => {
      const url = String(input);
      if (url.endsWith("/answers")) {
        bodies.push(JSON.parse(String(init!.body)));
        return json({
          verdict: null,
          item: { ...ITEM4, item_id: "r1a1i05", index: 5 },
          phase: { kind: "testing", round: 1, item: 5 },
        });
      }
      return json(TESTING_STATE);
    };
    const app = new App(root, new Client("", fetchFn), () => clock);
    await app.start();

    expect(root.querySelector(".progress")!.textContent).toBe("item 4 of 20");
    clock = 1137; // 137ms of looking at the pattern
    (root.querySelector(".answer-1") as HTMLButtonElement).click();
    await flush();

    expect(bodies).toHaveLength(1);
    expect(bodies[0].item_id).toBe("r1a1i04");
    expect(bodies[0].class_id).toBe(1);
    expect(bodies[0].response_ms).toBe(137);
    expect(root.querySelector(".progress")!.textContent).toBe("item 5 of 20");
  });

  it("network failure shows a retry banner and loses nothing", async () => {
    let failures = 1;
    const fetchFn: typeof fetch = async () => {
      if (failures > 0) {
        failures--;
        throw new TypeError("fetch failed");
      }
      return json(TESTING_STATE);
    };
    const app = new App(root, new Client("", fetchFn));
    await app.start();

    const banner = root.querySelector(".banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("network failure");

    (banner.querySelector(".retry") as HTMLButtonElement).click();
    await flush();
    expect(root.querySelector(".banner")!.classList.contains("hidden")).toBe(true);
    expect(root.querySelector(".progress")!.textContent).toBe("item 4 of 20");
  });

  it("surfaces service errors with their category", async () => {
    const fetchFn: typeof fetch = async (input) => {
      if (String(input).endsWith("/answers")) {
        return json({ error: "protocol", detail: "duplicate answer" }, 409);
      }
      return json(TESTING_STATE);
    };
    const app = new App(root, new Client("", fetchFn));
    await app.start();
    (root.querySelector(".answer-0") as HTMLButtonElement).click();
    await flush();

    expect(root.querySelector(".banner")!.textContent).toContain(
      "protocol: duplicate answer",
    );
  });
});
