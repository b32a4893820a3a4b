import { describe, expect, it } from "vitest";

import {
  canSubmit,
  chooseFlag,
  decisionBody,
  initialState,
  itemLoaded,
  loadFailed,
  submitRejectedByService,
  submitStarted,
  submitSucceeded,
  submitUnreachable,
  toggleAnswer,
  toggleReject,
  toggleTopic,
} from "../src/state.js";
import { stage1Item, stage2Item } from "./helpers.js";

describe("stage 1 flow", () => {
  it("starts loading with submit disabled", () => {
    const state = initialState("anna", 1);
    expect(state.phase).toBe("loading");
    expect(canSubmit(state)).toBe(false);
    expect(decisionBody(state, "t")).toBeNull();
  });

  it("keeps submit disabled until a flag is chosen", () => {
    const state = itemLoaded(initialState("anna", 1), stage1Item());
    expect(state.phase).toBe("annotating");
    expect(canSubmit(state)).toBe(false);
    const flagged = chooseFlag(state, "correct");
    expect(canSubmit(flagged)).toBe(true);
  });

  it("last flag choice wins", () => {
    let state = itemLoaded(initialState("anna", 1), stage1Item());
    state = chooseFlag(state, "incorrect_question");
    state = chooseFlag(state, "incorrect_passage");
    expect(state.selection.flag).toBe("incorrect_passage");
    expect(decisionBody(state, "2026-01-01T00:00:00Z")).toEqual({
      stage: 1,
      item_id: "s1-a",
      annotator_id: "anna",
      flag: "incorrect_passage",
      timestamp: "2026-01-01T00:00:00Z",
    });
  });

  it("ignores flags outside stage 1 annotating", () => {
    const busy = submitStarted(chooseFlag(itemLoaded(initialState("anna", 1), stage1Item()), "correct"));
    expect(chooseFlag(busy, "incorrect_question")).toBe(busy);
    const stage2 = itemLoaded(initialState("anna", 2), stage2Item());
    expect(chooseFlag(stage2, "correct")).toBe(stage2);
  });
});

describe("stage 2 flow", () => {
  const fresh = () => itemLoaded(initialState("anna", 2), stage2Item());

  it("needs an explicit choice before submit", () => {
    const state = fresh();
    expect(canSubmit(state)).toBe(false);
    expect(canSubmit(toggleAnswer(state, "Q100"))).toBe(true);
    expect(canSubmit(toggleReject(state))).toBe(true);
  });

  it("unticking everything still counts as a choice", () => {
    let state = toggleAnswer(fresh(), "Q100");
    state = toggleAnswer(state, "Q100");
    expect(state.selection.answers.size).toBe(0);
    expect(canSubmit(state)).toBe(true);
  });

  it("builds sorted entity lists", () => {
    let state = fresh();
    state = toggleAnswer(state, "Q200");
    state = toggleAnswer(state, "Q100");
    state = toggleTopic(state, "Q300");
    expect(decisionBody(state, "ts")).toEqual({
      stage: 2,
      item_id: "s2-a",
      annotator_id: "anna",
      accepted_answer_entities: ["Q100", "Q200"],
      accepted_topic_entities: ["Q300"],
      rejected: false,
      timestamp: "ts",
    });
  });

  it("reject clears the checklists and vice versa", () => {
    let state = toggleAnswer(toggleTopic(fresh(), "Q300"), "Q100");
    state = toggleReject(state);
    expect(state.selection.rejected).toBe(true);
    expect(state.selection.answers.size).toBe(0);
    expect(state.selection.topics.size).toBe(0);
    expect(decisionBody(state, "ts")).toMatchObject({
      accepted_answer_entities: [],
      accepted_topic_entities: [],
      rejected: true,
    });
    state = toggleAnswer(state, "Q100");
    expect(state.selection.rejected).toBe(false);
    expect([...state.selection.answers]).toEqual(["Q100"]);
  });

  it("reject toggles off again", () => {
    const state = toggleReject(toggleReject(fresh()));
    expect(state.selection.rejected).toBe(false);
    expect(canSubmit(state)).toBe(true);
  });
});

describe("submit outcomes", () => {
  const flagged = () => chooseFlag(itemLoaded(initialState("anna", 1), stage1Item()), "correct");

  it("success advances to loading and counts the decision", () => {
    const state = submitSucceeded(submitStarted(flagged()));
    expect(state.phase).toBe("loading");
    expect(state.decided).toBe(1);
  });

  it("service rejection keeps the selection and shows the reason", () => {
    const state = submitRejectedByService(submitStarted(flagged()), "flag: must be one of [...]");
    expect(state.phase).toBe("annotating");
    expect(state.selection.flag).toBe("correct");
    expect(state.notice).toContain("must be one of");
    expect(state.canRetry).toBe(false);
  });

  it("network failure offers a retry without losing the selection", () => {
    const state = submitUnreachable(submitStarted(flagged()), "offline");
    expect(state.phase).toBe("annotating");
    expect(state.canRetry).toBe(true);
    expect(state.selection.flag).toBe("correct");
  });

  it("no more items means done", () => {
    const state = itemLoaded(initialState("anna", 1), null);
    expect(state.phase).toBe("done");
    expect(canSubmit(state)).toBe(false);
  });

  it("load failure is retriable", () => {
    const state = loadFailed(initialState("anna", 1), "connect refused");
    expect(state.phase).toBe("failed");
    expect(state.canRetry).toBe(true);
  });
});
