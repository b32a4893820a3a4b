import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, getProgress, nextItem, postDecision } from "../src/api.js";
import { stage1Item } from "./helpers.js";

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("nextItem", () => {
  it("builds the query and parses the item", async () => {
    const fetch = vi.fn().mockResolvedValue(json(200, stage1Item()));
    vi.stubGlobal("fetch", fetch);
    const item = await nextItem("http://h", "anna b", 1);
    expect(fetch).toHaveBeenCalledWith("http://h/items/next?annotator=anna%20b&stage=1", undefined);
    expect(item?.item_id).toBe("s1-a");
  });

  it("returns null on an empty queue", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(json(200, null)));
    expect(await nextItem("", "anna", 2)).toBeNull();
  });

  it("surfaces the service detail string", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(json(404, { detail: "unknown annotator 'bob'" })));
    const err = await nextItem("", "bob", 1).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toBe("unknown annotator 'bob'");
  });
});

describe("postDecision", () => {
  const body = {
    stage: 1 as const,
    item_id: "s1-a",
    annotator_id: "anna",
    flag: "correct" as const,
    timestamp: "t",
  };

  it("posts JSON and parses the ack", async () => {
    const fetch = vi.fn().mockResolvedValue(json(200, { ok: true, replaced: false, audit_count: 1 }));
    vi.stubGlobal("fetch", fetch);
    const ack = await postDecision("", body);
    expect(ack.audit_count).toBe(1);
    const [url, init] = fetch.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/decisions");
    expect(init.method).toBe("POST");
    expect((init.headers as Record<string, string>)["Content-Type"]).toBe("application/json");
    expect(JSON.parse(init.body as string)).toEqual(body);
  });

  it("flattens structured validation details", async () => {
    const detail = [{ loc: ["body", "stage"], msg: "field required" }];
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(json(422, { detail })));
    const err = await postDecision("", body).catch((e: unknown) => e);
    expect((err as ApiError).message).toContain("field required");
  });

  it("lets network failures through untouched", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("fetch failed")));
    const err = await postDecision("", body).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(TypeError);
    expect(err).not.toBeInstanceOf(ApiError);
  });
});

describe("getProgress", () => {
  it("parses the report", async () => {
    const report = { annotators: { anna: {} }, audit_count: 0 };
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(json(200, report)));
    expect(await getProgress("http://h")).toEqual(report);
  });
});
