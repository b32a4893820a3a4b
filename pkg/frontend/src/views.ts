// HTML renderers: pure string builders over ViewState so they can be
// asserted on directly. main.ts injects the output and routes events via
// data-action attributes; nothing here touches the DOM.

import { canSubmit } from "./state.js";
import type { ViewState } from "./state.js";
import { STAGE1_FLAGS } from "./types.js";
import type {
  Candidate,
  ProgressReport,
  SpanInfo,
  Stage1Payload,
  Stage2Payload,
  WorkItem,
} from "./types.js";

export interface ViewOptions {
  /** Base URL for entity source links; empty string renders plain ids. */
  kbBase: string;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Passage text with the tagged span wrapped in <mark>, everything escaped. */
export function highlightSpan(text: string, span: SpanInfo): string {
  const start = Math.max(0, Math.min(span.char_start, text.length));
  const end = Math.max(start, Math.min(span.char_end, text.length));
  return (
    escapeHtml(text.slice(0, start)) +
    "<mark>" +
    escapeHtml(text.slice(start, end)) +
    "</mark>" +
    escapeHtml(text.slice(end))
  );
}

function flagCaption(flag: string): string {
  return flag.replace(/_/g, " ");
}

function actionRow(state: ViewState): string {
  const notice = state.notice
    ? `<p class="notice" role="alert">${escapeHtml(state.notice)}</p>`
    : "";
  if (state.canRetry) {
    return `${notice}<div class="actions"><button data-action="retry">Retry</button></div>`;
  }
  const busy = state.phase === "submitting";
  const disabled = busy || !canSubmit(state) ? " disabled" : "";
  const caption = busy ? "Submitting" : "Submit";
  return `${notice}<div class="actions"><button class="submit" data-action="submit"${disabled}>${caption}</button></div>`;
}

function stage1View(item: WorkItem, state: ViewState): string {
  const payload = item.payload as Stage1Payload;
  const chosen = state.selection.flag;
  const flags = STAGE1_FLAGS.map((flag, index) => {
    const pressed = chosen === flag;
    return (
      `<button class="flag${pressed ? " chosen" : ""}" data-action="flag" data-flag="${flag}"` +
      ` aria-pressed="${pressed}"><kbd>${index + 1}</kbd> ${flagCaption(flag)}</button>`
    );
  }).join("");
  return (
    `<section class="item" data-item="${escapeHtml(item.item_id)}">` +
    `<h2 class="question">${escapeHtml(payload.question)}</h2>` +
    `<blockquote class="passage" data-passage="${escapeHtml(payload.passage_id)}">` +
    highlightSpan(payload.passage_text, payload.span) +
    `</blockquote>` +
    `<div class="flags" role="group" aria-label="verdict">${flags}</div>` +
    actionRow(state) +
    `</section>`
  );
}

function checklist(
  kind: "answer" | "topic",
  title: string,
  rows: Candidate[],
  chosen: Set<string>,
  kbBase: string,
): string {
  const lines = rows
    .map((candidate) => {
      const id = escapeHtml(candidate.id);
      const checked = chosen.has(candidate.id) ? " checked" : "";
      const source = kbBase
        ? `<a class="source" href="${escapeHtml(kbBase + encodeURIComponent(candidate.id))}"` +
          ` target="_blank" rel="noopener">${id}</a>`
        : `<code>${id}</code>`;
      return (
        `<li><label><input type="checkbox" data-action="toggle-${kind}" data-id="${id}"${checked}>` +
        ` ${escapeHtml(candidate.label || candidate.id)}</label> ${source}</li>`
      );
    })
    .join("");
  return (
    `<fieldset class="checklist ${kind}"><legend>${title}</legend>` +
    `<ul>${lines || '<li class="empty">no candidates</li>'}</ul></fieldset>`
  );
}

function stage2View(item: WorkItem, state: ViewState, kbBase: string): string {
  const payload = item.payload as Stage2Payload;
  const sel = state.selection;
  return (
    `<section class="item" data-item="${escapeHtml(item.item_id)}">` +
    `<h2 class="question">${escapeHtml(payload.question)}</h2>` +
    `<div class="panels">` +
    checklist("answer", "Answer entities", payload.answer_candidates, sel.answers, kbBase) +
    checklist("topic", "Topic entities", payload.topic_candidates, sel.topics, kbBase) +
    `</div>` +
    `<label class="reject"><input type="checkbox" data-action="reject"${sel.rejected ? " checked" : ""}>` +
    ` Reject: none of the candidates fit</label>` +
    actionRow(state) +
    `</section>`
  );
}

export function progressView(state: ViewState): string {
  const report: ProgressReport | null = state.progress;
  if (!report) return '<aside class="progress"></aside>';
  const rows = Object.keys(report.annotators)
    .sort()
    .map((name) => {
      const stages = report.annotators[name];
      const cells = ["1", "2"]
        .map((stage) => {
          const counts = stages[stage] ?? { queued: 0, served: 0, decided: 0 };
          return `<td>${counts.decided}/${counts.queued}</td>`;
        })
        .join("");
      const me = name === state.annotator ? ' class="me"' : "";
      return `<tr${me}><th scope="row">${escapeHtml(name)}</th>${cells}</tr>`;
    })
    .join("");
  return (
    `<aside class="progress"><h3>Progress</h3>` +
    `<table><thead><tr><th></th><th>stage 1</th><th>stage 2</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<p class="audit">decisions logged: ${report.audit_count}</p></aside>`
  );
}

export function page(state: ViewState, options: ViewOptions): string {
  const header =
    `<header><h1>annotation</h1>` +
    `<p class="who">${escapeHtml(state.annotator)} &middot; stage ${state.stage}</p></header>`;
  let body: string;
  if (state.phase === "loading") {
    body = '<p class="status">Loading</p>';
  } else if (state.phase === "done") {
    const n = state.decided;
    body = `<p class="status">Queue is empty. ${n} decision${n === 1 ? "" : "s"} this session.</p>`;
  } else if (state.phase === "failed") {
    body =
      `<p class="notice" role="alert">${escapeHtml(state.notice ?? "request failed")}</p>` +
      `<div class="actions"><button data-action="reload">Try again</button></div>`;
  } else if (state.item === null) {
    body = '<p class="status">Loading</p>';
  } else if (state.item.stage === 1) {
    body = stage1View(state.item, state);
  } else {
    body = stage2View(state.item, state, options.kbBase);
  }
  return `${header}<main>${body}</main>${progressView(state)}`;
}
