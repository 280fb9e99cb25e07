// Client <-> endpoint mapping with a recording fetch stub.

import { describe, expect, it } from "vitest";
import { ApiError, Client } from "../src/api";

interface Call {
  url: string;
  method?: string;
  body?: unknown;
}

function stub(payload: unknown, status = 200): { client: Client; calls: Call[] } {
  const calls: Call[] = [];
  const fetchFn: typeof fetch = async (input, init) => {
    calls.push({
      url: String(input),
      method: init?.method,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    return new Response(JSON.stringify(payload), { status });
  };
  return { client: new Client("http://x", fetchFn), calls };
}

describe("api client", () => {
  it("maps create to POST /api/sessions", async () => {
    const { client, calls } = stub({ session: "abc" });
    await client.createSession("counting", 7, true);
    expect(calls).toEqual([
      {
        url: "http://x/api/sessions",
        method: "POST",
        body: { task: "counting", seed: 7, biased: true },
      },
    ]);
  });

  it("maps answers to the session answer route", async () => {
    const { client, calls } = stub({ verdict: null, item: null, phase: {} });
    await client.submitAnswer("abc", "r1a1i01", 0, 412.5);
    expect(calls[0].url).toBe("http://x/api/sessions/abc/answers");
    expect(calls[0].body).toEqual({
      item_id: "r1a1i01",
      class_id: 0,
      response_ms: 412.5,
    });
  });

  it("turns error payloads into typed ApiErrors", async () => {
    const { client } = stub({ error: "protocol", detail: "out-of-order" }, 409);
    const err = await client.beginTesting("abc").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.category).toBe("protocol");
    expect(err.detail).toBe("out-of-order");
  });

  it("tolerates non-JSON error bodies", async () => {
    const calls: Call[] = [];
    const fetchFn: typeof fetch = async (input) => {
      calls.push({ url: String(input) });
      return new Response("gateway exploded", { status: 502, statusText: "Bad Gateway" });
    };
    const client = new Client("", fetchFn);
    const err = await client.getSession("abc").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(502);
    expect(err.category).toBe("http");
  });
});
