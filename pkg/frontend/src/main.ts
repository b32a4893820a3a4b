// Entry point. Owns the single mutable ViewState, talks to the service
// through api.ts, and re-renders the whole app after every transition.
// Nothing is persisted client side: a refresh asks the service for the
// current item again and lands in the same place.

import * as api from "./api.js";
import { keyAction } from "./keyboard.js";
import * as st from "./state.js";
import { page } from "./views.js";
import type { DecisionBody, Stage, Stage1Flag } from "./types.js";

const KB_BASE_DEFAULT = "https://www.wikidata.org/wiki/";

export interface BootParams {
  annotator: string;
  stage: Stage;
  base: string;
  kbBase: string;
}

export function bootParams(search: string): BootParams | null {
  const params = new URLSearchParams(search);
  const annotator = (params.get("annotator") ?? "").trim();
  const stageRaw = params.get("stage");
  const stage: Stage | null = stageRaw === "1" ? 1 : stageRaw === "2" ? 2 : null;
  if (!annotator || stage === null) return null;
  return {
    annotator,
    stage,
    base: (params.get("api") ?? "").replace(/\/+$/, ""),
    kbBase: params.get("kb") ?? KB_BASE_DEFAULT,
  };
}

export function startForm(): string {
  return (
    `<header><h1>annotation</h1></header>` +
    `<main><form id="start" method="get">` +
    `<label>Annotator <input name="annotator" required autofocus></label>` +
    `<label><input type="radio" name="stage" value="1" checked> stage 1</label>` +
    `<label><input type="radio" name="stage" value="2"> stage 2</label>` +
    `<button type="submit">Start</button>` +
    `</form></main>`
  );
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

export function run(root: HTMLElement, boot: BootParams): void {
  let state = st.initialState(boot.annotator, boot.stage);
  // Body of an unacknowledged POST; retry resends it verbatim.
  let pending: DecisionBody | null = null;

  const apply = (next: st.ViewState): void => {
    state = next;
    root.innerHTML = page(state, { kbBase: boot.kbBase });
  };

  async function refreshProgress(): Promise<void> {
    try {
      apply(st.progressLoaded(state, await api.getProgress(boot.base)));
    } catch {
      // panel stays stale; the next successful call refreshes it
    }
  }

  async function loadNext(): Promise<void> {
    apply(st.loadStarted(state));
    try {
      apply(st.itemLoaded(state, await api.nextItem(boot.base, boot.annotator, boot.stage)));
    } catch (err) {
      apply(st.loadFailed(state, describe(err)));
    }
    void refreshProgress();
  }

  async function submit(retrying: boolean): Promise<void> {
    if (!retrying) pending = st.decisionBody(state, new Date().toISOString());
    if (!pending) return;
    apply(st.submitStarted(state));
    try {
      await api.postDecision(boot.base, pending);
      pending = null;
      apply(st.submitSucceeded(state));
      await loadNext();
    } catch (err) {
      if (err instanceof api.ApiError) {
        pending = null;
        apply(st.submitRejectedByService(state, describe(err)));
      } else {
        apply(st.submitUnreachable(state, "could not reach the service; your choices are kept"));
      }
    }
  }

  root.addEventListener("click", (event) => {
    const el = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
    if (!el) return;
    switch (el.dataset.action) {
      case "flag":
        apply(st.chooseFlag(state, el.dataset.flag as Stage1Flag));
        break;
      case "toggle-answer":
        apply(st.toggleAnswer(state, el.dataset.id ?? ""));
        break;
      case "toggle-topic":
        apply(st.toggleTopic(state, el.dataset.id ?? ""));
        break;
      case "reject":
        apply(st.toggleReject(state));
        break;
      case "submit":
        void submit(false);
        break;
      case "retry":
        void submit(true);
        break;
      case "reload":
        void loadNext();
        break;
    }
  });

  document.addEventListener("keydown", (event) => {
    if (event.ctrlKey || event.metaKey || event.altKey) return;
    const target = event.target;
    if (
      (target instanceof HTMLInputElement && target.type !== "checkbox") ||
      target instanceof HTMLTextAreaElement
    ) {
      return;
    }
    const action = keyAction(boot.stage, event.key);
    if (!action) return;
    if (action.kind === "flag") {
      apply(st.chooseFlag(state, action.flag));
      event.preventDefault();
    } else if (action.kind === "submit" && st.canSubmit(state)) {
      void submit(false);
      event.preventDefault();
    }
  });

  void loadNext();
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    const boot = bootParams(window.location.search);
    if (boot) run(root, boot);
    else root.innerHTML = startForm();
  }
}
