// Thin client for the annotation service. Every call goes through request()
// so errors are uniform: a non-2xx response becomes an ApiError carrying the
// service's detail string, while network-level failures keep their native
// TypeError so callers can tell the two apart.

import type { DecisionAck, DecisionBody, ProgressReport, Stage, WorkItem } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request(url: string, init?: RequestInit): Promise<unknown> {
  const res = await fetch(url, init);
  if (!res.ok) {
    let detail = `${res.status} ${res.statusText}`;
    try {
      const body = (await res.json()) as { detail?: unknown };
      if (typeof body.detail === "string") detail = body.detail;
      else if (body.detail !== undefined) detail = JSON.stringify(body.detail);
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(res.status, detail);
  }
  return res.json();
}

export async function nextItem(base: string, annotator: string, stage: Stage): Promise<WorkItem | null> {
  const query = `annotator=${encodeURIComponent(annotator)}&stage=${stage}`;
  return (await request(`${base}/items/next?${query}`)) as WorkItem | null;
}

export async function getItem(base: string, itemId: string): Promise<WorkItem> {
  return (await request(`${base}/items/${encodeURIComponent(itemId)}`)) as WorkItem;
}

export async function postDecision(base: string, body: DecisionBody): Promise<DecisionAck> {
  return (await request(`${base}/decisions`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  })) as DecisionAck;
}

export async function getProgress(base: string): Promise<ProgressReport> {
  return (await request(`${base}/progress`)) as ProgressReport;
}
