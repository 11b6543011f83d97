import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, type Frame, type StreamStatus } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

interface Recorded {
  url: string;
  init?: RequestInit;
}

function recordingFetch(responder: (url: string, init?: RequestInit) => Response) {
  const calls: Recorded[] = [];
  const impl = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    return responder(url, init);
  };
  return { calls, impl };
}

describe("ApiClient requests", () => {
  it("sends the token as a bearer header on every route", async () => {
    const { calls, impl } = recordingFetch(() => jsonResponse(200, { events: [] }));
    const client = new ApiClient("sesame", impl);
    await client.events();
    const headers = calls[0].init?.headers as Record<string, string>;
    expect(headers.Authorization).toBe("Bearer sesame");
  });

  it("posts drive commands, omitting duration when untimed", async () => {
    const { calls, impl } = recordingFetch(() =>
      jsonResponse(200, { command_id: 3, status: "accepted" }),
    );
    const client = new ApiClient("t", impl);

    const res = await client.drive("forward", 1500);
    expect(res.command_id).toBe(3);
    expect(calls[0].url).toBe("/api/control/drive");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({
      command: "forward",
      duration_ms: 1500,
    });

    await client.drive("stop", null);
    expect(JSON.parse(calls[1].init?.body as string)).toEqual({ command: "stop" });
  });

  it("surfaces the server's detail message on errors", async () => {
    const { impl } = recordingFetch(() => jsonResponse(409, { detail: "queue full" }));
    const client = new ApiClient("t", impl);
    const err = await client.drive("forward", null).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toBe("queue full");
  });

  it("falls back to the status text for non-JSON error bodies", async () => {
    const { impl } = recordingFetch(
      () => new Response("boom", { status: 502, statusText: "Bad Gateway" }),
    );
    const client = new ApiClient("t", impl);
    const err = await client.info().catch((e) => e);
    expect(err.detail).toBe("Bad Gateway");
  });

  it("builds data queries from the optional window arguments", async () => {
    const { calls, impl } = recordingFetch(() =>
      jsonResponse(200, { sensor: "co", unit: "ppm", samples: [] }),
    );
    const client = new ApiClient("t", impl);
    await client.data("co");
    await client.data("co", 1.5, 9, 4);
    expect(calls[0].url).toBe("/api/data/co");
    expect(calls[1].url).toBe("/api/data/co?t1=1.5&t2=9&stride=4");
  });
});

function sseBody(chunks: string[]): ReadableStream<Uint8Array> {
  const enc = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const c of chunks) controller.enqueue(enc.encode(c));
      controller.close();
    },
  });
}

function miniFrame(seq: number): Frame {
  return {
    seq,
    t: seq * 0.05,
    pose: { x: 0, y: 0, heading: 0 },
    compass_deg: 0,
    motors: { left: "stop", right: "stop" },
    sensors: {},
    warnings: [],
    camera: { available: false, note: "" },
    active_command: null,
    queue_depth: 0,
  };
}

describe("streamTelemetry", () => {
  afterEach(() => {
    vi.useRealTimers();
  });

  it("parses frames even when chunks split mid-message", async () => {
    const f1 = JSON.stringify(miniFrame(1));
    const f2 = JSON.stringify(miniFrame(2));
    // keep-alive comment, then two frames with the second cut in half
    const body = sseBody([
      ": keep-alive\n\ndata: " + f1.slice(0, 10),
      f1.slice(10) + "\n\ndata: " + f2 + "\n\n",
    ]);
    const frames: Frame[] = [];
    const statuses: StreamStatus[] = [];
    let fetches = 0;

    vi.useFakeTimers();
    const client = new ApiClient("t", async () => {
      fetches += 1;
      return fetches === 1
        ? new Response(body, { status: 200 })
        : // the reconnect attempt gets a stream that stays open
          new Response(new ReadableStream({ start() {} }), { status: 200 });
    });
    const handle = client.streamTelemetry(
      (f) => frames.push(f),
      (s) => statuses.push(s),
    );

    await vi.waitFor(() => expect(statuses).toContain("stale"));
    expect(frames.map((f) => f.seq)).toEqual([1, 2]);
    expect(statuses).toEqual(["connecting", "live", "stale"]);

    // the drop schedules a reconnect
    await vi.advanceTimersByTimeAsync(1000);
    expect(fetches).toBe(2);
    handle.stop();
  });

  it("gives up after a 401 instead of hammering the server", async () => {
    const statuses: StreamStatus[] = [];
    let fetches = 0;
    vi.useFakeTimers();
    const client = new ApiClient("bad", async () => {
      fetches += 1;
      return jsonResponse(401, { detail: "missing or invalid bearer token" });
    });
    const handle = client.streamTelemetry(() => {}, (s) => statuses.push(s));

    await vi.waitFor(() => expect(statuses).toContain("stale"));
    await vi.advanceTimersByTimeAsync(5000);
    expect(fetches).toBe(1);
    expect(statuses).toEqual(["connecting", "stale"]);
    handle.stop();
  });

  it("retries other failures until stopped", async () => {
    let fetches = 0;
    vi.useFakeTimers();
    const client = new ApiClient("t", async () => {
      fetches += 1;
      return new Response("down", { status: 503 });
    });
    const handle = client.streamTelemetry(() => {}, () => {});

    await vi.waitFor(() => expect(fetches).toBe(1));
    await vi.advanceTimersByTimeAsync(2500);
    expect(fetches).toBe(3);
    handle.stop();
    await vi.advanceTimersByTimeAsync(5000);
    expect(fetches).toBe(3);
  });
});
