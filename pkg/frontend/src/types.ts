// Wire types for the annotation service HTTP API. Field names mirror the
// JSON exactly; do not rename.

export type Stage = 1 | 2;

export interface SpanInfo {
  text: string;
  char_start: number;
  char_end: number;
}

export interface Stage1Payload {
  question: string;
  passage_id: string;
  passage_text: string;
  span: SpanInfo;
}

export interface Candidate {
  id: string;
  label: string;
}

export interface Stage2Payload {
  question: string;
  answer_candidates: Candidate[];
  topic_candidates: Candidate[];
}

export interface WorkItem {
  item_id: string;
  stage: Stage;
  assigned_to: string | null;
  payload: Stage1Payload | Stage2Payload;
}

export const STAGE1_FLAGS = [
  "correct",
  "incorrect_question",
  "incorrect_passage",
  "incorrect_fragment",
] as const;

export type Stage1Flag = (typeof STAGE1_FLAGS)[number];

export interface Stage1Body {
  stage: 1;
  item_id: string;
  annotator_id: string;
  flag: Stage1Flag;
  timestamp: string;
}

export interface Stage2Body {
  stage: 2;
  item_id: string;
  annotator_id: string;
  accepted_answer_entities: string[];
  accepted_topic_entities: string[];
  rejected: boolean;
  timestamp: string;
}

export type DecisionBody = Stage1Body | Stage2Body;

export interface DecisionAck {
  ok: boolean;
  replaced: boolean;
  audit_count: number;
}

export interface StageCounts {
  queued: number;
  served: number;
  decided: number;
}

export interface ProgressReport {
  annotators: Record<string, Record<string, StageCounts>>;
  audit_count: number;
}
