// Screen state and its transitions, all pure functions so the flow is
// testable without a DOM. main.ts owns the mutable reference and the wiring.
//
// The rule that matters: submit stays disabled until the annotator has made
// an explicit choice. Stage 1 needs a flag; stage 2 needs any checkbox
// toggle or the reject control. Reject is exclusive with accepted entities
// (the service refuses rejected=true alongside non-empty sets), so toggling
// reject clears both checklists and ticking a checkbox clears reject.

import type {
  DecisionBody,
  ProgressReport,
  Stage,
  Stage1Flag,
  WorkItem,
} from "./types.js";

export type Phase = "loading" | "annotating" | "submitting" | "done" | "failed";

export interface Selection {
  flag: Stage1Flag | null;
  answers: Set<string>;
  topics: Set<string>;
  rejected: boolean;
  touched: boolean;
}

export interface ViewState {
  annotator: string;
  stage: Stage;
  phase: Phase;
  item: WorkItem | null;
  selection: Selection;
  notice: string | null;
  canRetry: boolean;
  progress: ProgressReport | null;
  decided: number;
}

export function emptySelection(): Selection {
  return { flag: null, answers: new Set(), topics: new Set(), rejected: false, touched: false };
}

export function initialState(annotator: string, stage: Stage): ViewState {
  return {
    annotator,
    stage,
    phase: "loading",
    item: null,
    selection: emptySelection(),
    notice: null,
    canRetry: false,
    progress: null,
    decided: 0,
  };
}

export function loadStarted(state: ViewState): ViewState {
  return { ...state, phase: "loading", notice: null, canRetry: false };
}

export function itemLoaded(state: ViewState, item: WorkItem | null): ViewState {
  const phase = item === null ? "done" : "annotating";
  return { ...state, phase, item, selection: emptySelection(), notice: null, canRetry: false };
}

export function loadFailed(state: ViewState, message: string): ViewState {
  return { ...state, phase: "failed", notice: message, canRetry: true };
}

export function chooseFlag(state: ViewState, flag: Stage1Flag): ViewState {
  if (state.phase !== "annotating" || state.item?.stage !== 1) return state;
  return { ...state, notice: null, selection: { ...state.selection, flag, touched: true } };
}

function toggled(set: Set<string>, id: string): Set<string> {
  const next = new Set(set);
  if (next.has(id)) next.delete(id);
  else next.add(id);
  return next;
}

export function toggleAnswer(state: ViewState, id: string): ViewState {
  if (state.phase !== "annotating" || state.item?.stage !== 2) return state;
  const sel = state.selection;
  return {
    ...state,
    notice: null,
    selection: { ...sel, answers: toggled(sel.answers, id), rejected: false, touched: true },
  };
}

export function toggleTopic(state: ViewState, id: string): ViewState {
  if (state.phase !== "annotating" || state.item?.stage !== 2) return state;
  const sel = state.selection;
  return {
    ...state,
    notice: null,
    selection: { ...sel, topics: toggled(sel.topics, id), rejected: false, touched: true },
  };
}

export function toggleReject(state: ViewState): ViewState {
  if (state.phase !== "annotating" || state.item?.stage !== 2) return state;
  const rejected = !state.selection.rejected;
  return {
    ...state,
    notice: null,
    selection: { flag: null, answers: new Set(), topics: new Set(), rejected, touched: true },
  };
}

export function canSubmit(state: ViewState): boolean {
  if (state.phase !== "annotating" || state.item === null) return false;
  if (state.item.stage === 1) return state.selection.flag !== null;
  return state.selection.touched;
}

/** Build the POST body for the current selection, or null when submit is not allowed. */
export function decisionBody(state: ViewState, timestamp: string): DecisionBody | null {
  if (!canSubmit(state) || state.item === null) return null;
  const item = state.item;
  if (item.stage === 1) {
    return {
      stage: 1,
      item_id: item.item_id,
      annotator_id: state.annotator,
      flag: state.selection.flag as Stage1Flag,
      timestamp,
    };
  }
  return {
    stage: 2,
    item_id: item.item_id,
    annotator_id: state.annotator,
    accepted_answer_entities: [...state.selection.answers].sort(),
    accepted_topic_entities: [...state.selection.topics].sort(),
    rejected: state.selection.rejected,
    timestamp,
  };
}

export function submitStarted(state: ViewState): ViewState {
  return { ...state, phase: "submitting", notice: null, canRetry: false };
}

export function submitSucceeded(state: ViewState): ViewState {
  return { ...state, phase: "loading", decided: state.decided + 1, notice: null, canRetry: false };
}

/** 422 from the service: show the reason inline, keep the selection, no advance. */
export function submitRejectedByService(state: ViewState, message: string): ViewState {
  return { ...state, phase: "annotating", notice: message, canRetry: false };
}

/**
 * Network-level failure: the POST may or may not have landed. Offer a retry
 * that resubmits the very same body; the service replaces rather than
 * duplicates, so retrying is safe.
 */
export function submitUnreachable(state: ViewState, message: string): ViewState {
  return { ...state, phase: "annotating", notice: message, canRetry: true };
}

export function progressLoaded(state: ViewState, progress: ProgressReport): ViewState {
  return { ...state, progress };
}
