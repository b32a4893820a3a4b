// Shared builders for tests: work items shaped exactly like the service
// serializes them.

import type { Stage1Payload, Stage2Payload, WorkItem } from "../src/types.js";

export function stage1Item(overrides: Partial<Stage1Payload> = {}, itemId = "s1-a"): WorkItem {
  const passage = "He studied under the old master in Vienna.";
  const payload: Stage1Payload = {
    question: "Who taught the composer?",
    passage_id: "p:1",
    passage_text: passage,
    span: { text: "the old master", char_start: 17, char_end: 31 },
    ...overrides,
  };
  return { item_id: itemId, stage: 1, assigned_to: null, payload };
}

export function stage2Item(overrides: Partial<Stage2Payload> = {}, itemId = "s2-a"): WorkItem {
  const payload: Stage2Payload = {
    question: "Who taught the composer?",
    answer_candidates: [
      { id: "Q100", label: "First Teacher" },
      { id: "Q200", label: "Second Teacher" },
    ],
    topic_candidates: [{ id: "Q300", label: "The Composer" }],
    ...overrides,
  };
  return { item_id: itemId, stage: 2, assigned_to: null, payload };
}
