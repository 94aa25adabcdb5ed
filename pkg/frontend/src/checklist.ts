/**
 * Label checklist and submission assembly.
 *
 * Mirrors the server's per-pair checklist: every summary needs OS/OF/OR and
 * CompAbs grades, one HRdirect grade per non-empty heading, and SRel plus SF
 * grades per statement; the pair needs one preference. Submit stays disabled
 * until the checklist is complete.
 */

import type {
  Grade,
  LabelOut,
  PairPayload,
  Side,
  SubmissionBody,
  SummaryDoc,
} from "./types.js";

export interface ChecklistTarget {
  criterion: string;
  summary_id: string;
  i: number | null;
  j: number | null;
}

export function checklistTargets(summary: SummaryDoc): ChecklistTarget[] {
  const sid = summary.id;
  const targets: ChecklistTarget[] = [
    { criterion: "OS", summary_id: sid, i: null, j: null },
    { criterion: "OF", summary_id: sid, i: null, j: null },
    { criterion: "OR", summary_id: sid, i: null, j: null },
    { criterion: "CompAbs", summary_id: sid, i: null, j: null },
  ];
  summary.sections.forEach((section, idx) => {
    const i = idx + 1;
    if (section.heading) {
      targets.push({ criterion: "HRdirect", summary_id: sid, i, j: null });
    }
    section.statements.forEach((_, jdx) => {
      const j = jdx + 1;
      targets.push({ criterion: "SRel", summary_id: sid, i, j });
      targets.push({ criterion: "SF", summary_id: sid, i, j });
    });
  });
  return targets;
}

export function pairChecklist(pair: PairPayload): ChecklistTarget[] {
  return [
    ...checklistTargets(pair.sides.A.summary),
    ...checklistTargets(pair.sides.B.summary),
  ];
}

export function targetKey(target: ChecklistTarget): string {
  return [target.criterion, target.summary_id, target.i ?? "", target.j ?? ""].join("|");
}

/** Grades keyed by targetKey, plus the blinded side preference. */
export interface LabelState {
  grades: Record<string, Grade>;
  preference: Side | null;
}

export function emptyState(): LabelState {
  return { grades: {}, preference: null };
}

export function missingTargets(pair: PairPayload, state: LabelState): string[] {
  const missing = pairChecklist(pair)
    .filter((target) => !(targetKey(target) in state.grades))
    .map(targetKey);
  if (state.preference === null) {
    missing.push("preference");
  }
  return missing;
}

export function isComplete(pair: PairPayload, state: LabelState): boolean {
  return missingTargets(pair, state).length === 0;
}

/**
 * Serialize the state for POST /api/pairs/{id}/labels. Labels follow
 * checklist order so identical states always serialize identically.
 */
export function buildSubmission(
  pair: PairPayload,
  state: LabelState,
  labellerId: string,
  partial = false,
): SubmissionBody {
  const labels: LabelOut[] = [];
  for (const target of pairChecklist(pair)) {
    const grade = state.grades[targetKey(target)];
    if (grade !== undefined) {
      labels.push({
        criterion: target.criterion,
        summary_id: target.summary_id,
        i: target.i,
        j: target.j,
        grade,
      });
    }
  }
  return {
    labeller_id: labellerId,
    kind: "human",
    labels,
    preference: state.preference,
    partial,
  };
}

/** Minimal Storage surface so tests can substitute an in-memory map. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export function storageKey(labellerId: string, pairId: string): string {
  return `sgss:${labellerId}:${pairId}`;
}

export function saveState(
  store: KeyValueStore,
  labellerId: string,
  pairId: string,
  state: LabelState,
): void {
  store.setItem(storageKey(labellerId, pairId), JSON.stringify(state));
}

export function loadState(
  store: KeyValueStore,
  labellerId: string,
  pairId: string,
): LabelState {
  const raw = store.getItem(storageKey(labellerId, pairId));
  if (raw === null) {
    return emptyState();
  }
  try {
    const parsed = JSON.parse(raw) as LabelState;
    if (typeof parsed === "object" && parsed !== null && typeof parsed.grades === "object") {
      return { grades: parsed.grades, preference: parsed.preference ?? null };
    }
  } catch {
    // Corrupt saved state falls through to a fresh one.
  }
  return emptyState();
}

export function clearState(store: KeyValueStore, labellerId: string, pairId: string): void {
  store.removeItem(storageKey(labellerId, pairId));
}

/** Throws when a pair payload is structurally unusable; no partial render. */
export function validatePair(payload: unknown): PairPayload {
  const pair = payload as PairPayload;
  if (!pair || typeof pair.pair_id !== "string" || !pair.sides) {
    throw new Error("malformed pair payload: missing pair_id or sides");
  }
  for (const side of ["A", "B"] as const) {
    const doc = pair.sides[side];
    if (!doc || !doc.summary || !doc.summary.overview || !Array.isArray(doc.summary.sections)) {
      throw new Error(`malformed pair payload: side ${side} is not a summary document`);
    }
    for (const section of doc.summary.sections) {
      if (!Array.isArray(section.statements)) {
        throw new Error(`malformed pair payload: side ${side} has a section without statements`);
      }
    }
  }
  if (!pair.query || typeof pair.query.text !== "string") {
    throw new Error("malformed pair payload: missing query");
  }
  return pair;
}
