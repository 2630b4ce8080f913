export type ReasonCode =
  | "ADDED_LETTER"
  | "MISSING_LETTER"
  | "CHANGED_LETTER"
  | "TWO_MINOR";

export const REASON_CODES: readonly ReasonCode[] = [
  "ADDED_LETTER",
  "MISSING_LETTER",
  "CHANGED_LETTER",
  "TWO_MINOR",
];

export const REASON_DESCRIPTIONS: Record<ReasonCode, string> = {
  ADDED_LETTER: "at least one letter added without phonetic reason",
  MISSING_LETTER: "at least one letter missing",
  CHANGED_LETTER: "at least one letter changed",
  TWO_MINOR: "two or more minor slips (related sounds, geminates, vowel length)",
};

export interface SessionInfo {
  id: string;
  annotator: string;
  dialect: string | null;
  queue_length: number;
  cursor: number;
  top_k: number;
}

export interface CandidateView {
  rank: number;
  text: string;
}

export interface TagRecord {
  headword: string;
  dialect: string;
  rank: number;
  candidate: string;
  tag: 0 | 1;
  annotator: string;
  reason?: ReasonCode;
}

export interface ItemPayload {
  item_id: string;
  headword: string;
  dialect: string;
  sampa: string;
  candidates: CandidateView[];
  tagged?: Record<string, TagRecord>;
}

export interface ItemsResponse {
  items: ItemPayload[];
  cursor: number;
  total: number;
  complete: boolean;
}

export interface TagSubmission {
  session_id: string;
  item_id: string;
  rank: number;
  tag: 0 | 1;
  reason?: ReasonCode;
  client_ts?: number;
  overwrite?: boolean;
}

export interface TagResponse {
  record: TagRecord;
  cursor: number;
  item_complete: boolean;
}

export interface SummaryColumn {
  items: number;
  per_rank: string[];
  total: string;
}

export interface Summary {
  top_k: number;
  dialects: Record<string, SummaryColumn>;
  records: number;
  complete_items: number;
}

/** Per-rank state; "tagged" is set only from server acknowledgments. */
export type TagState =
  | { status: "untagged" }
  | { status: "pending" }
  | { status: "queued" }
  | { status: "tagged"; tag: 0 | 1; reason?: ReasonCode };
