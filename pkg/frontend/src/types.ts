/** Wire types mirrored from the annotation service's JSON API. */

export interface QueryDoc {
  id: string;
  text: string;
  language: string;
}

export interface StatementDoc {
  text: string;
  citations: number[];
}

export interface SectionDoc {
  heading: string;
  statements: StatementDoc[];
}

export interface OverviewDoc {
  text: string;
  citations: number[];
  position: "leading" | "trailing";
}

export interface DocEntryDoc {
  n: number;
  url: string;
  title: string;
  snippet?: string;
}

export interface SummaryDoc {
  id: string;
  system_id: string;
  overview: OverviewDoc;
  sections: SectionDoc[];
  doclist: DocEntryDoc[];
}

/** One NDJSON line of the summaries dataset, as served per side. */
export interface SummaryFileDoc {
  version: string;
  query: QueryDoc;
  summary: SummaryDoc;
}

export type Side = "A" | "B";

/** GET /api/pairs/{id} response. The server decides which summary is A. */
export interface PairPayload {
  pair_id: string;
  query: QueryDoc;
  sides: Record<Side, SummaryFileDoc>;
  status: "open" | "partial" | "complete";
}

export type Grade = "Perfectly" | "Partially" | "No";

export const GRADES: readonly Grade[] = ["Perfectly", "Partially", "No"];

/** One row of a POST /api/pairs/{id}/labels batch. */
export interface LabelOut {
  criterion: string;
  summary_id: string;
  i: number | null;
  j: number | null;
  grade: Grade;
}

export interface SubmissionBody {
  labeller_id: string;
  kind: "human";
  labels: LabelOut[];
  preference: Side | null;
  partial: boolean;
}

export interface SubmitResponse {
  pair_id: string;
  stored: number;
  status: string;
}

export interface NextPairDone {
  pair_id: null;
  done: true;
}
