/**
 * DOM rendering for one summary pair.
 *
 * Two columns in the order the server sent them (the canonical left/right
 * assignment never reaches the browser). Every checklist item is a 3-point
 * control; the overall-comprehensiveness and preference controls sit in a
 * footer so both summaries are read before they are answered.
 */

import {
  type ChecklistTarget,
  type LabelState,
  missingTargets,
  targetKey,
} from "./checklist.js";
import { GRADES, type Grade, type PairPayload, type Side, type SummaryFileDoc } from "./types.js";

export interface RenderHandlers {
  onState(state: LabelState): void;
  onSubmit(): void;
  onSkip(): void;
}

const CRITERION_LABELS: Record<string, string> = {
  OS: "Overview answers the query on its own",
  OF: "Overview is supported by its cited documents",
  OR: "Overview avoids redundancy",
  HRdirect: "Heading represents its section",
  SRel: "Relevant to the query",
  SF: "Supported by its cited documents",
  CompAbs: "Covers the relevant material overall",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class PairView {
  private focusedKey: string | null = null;
  private submitButton!: HTMLButtonElement;
  private missingNote!: HTMLElement;
  private groups = new Map<string, HTMLElement>();

  constructor(
    private readonly root: HTMLElement,
    private readonly pair: PairPayload,
    private readonly state: LabelState,
    private readonly handlers: RenderHandlers,
  ) {}

  render(): void {
    this.root.replaceChildren();
    this.groups.clear();

    const header = el("header", "pair-header");
    header.append(
      el("h1", "query", this.pair.query.text),
      el("p", "hint", "Grade every item on both sides, then pick the better summary. Keys 1/2/3 grade the focused item."),
    );
    this.root.append(header);

    const columns = el("div", "columns");
    for (const side of ["A", "B"] as const) {
      columns.append(this.renderSide(side, this.pair.sides[side]));
    }
    this.root.append(columns);
    this.root.append(this.renderFooter());
    this.refresh();
  }

  /** Render a parse failure instead of a partial pair. */
  static renderError(root: HTMLElement, message: string): void {
    root.replaceChildren();
    const box = el("div", "error-screen");
    box.append(el("h1", undefined, "Cannot display this pair"), el("p", undefined, message));
    root.append(box);
  }

  private renderSide(side: Side, doc: SummaryFileDoc): HTMLElement {
    const summary = doc.summary;
    const column = el("section", "column");
    column.append(el("h2", "side-name", `Summary ${side}`));

    const overview = el("div", "overview");
    overview.append(
      el("p", "overview-text", summary.overview.text),
      this.citationLinks(side, summary.overview.citations),
    );
    for (const criterion of ["OS", "OF", "OR"]) {
      overview.append(
        this.gradeControl({ criterion, summary_id: summary.id, i: null, j: null }),
      );
    }

    const body = el("div", "sections");
    summary.sections.forEach((section, idx) => {
      const i = idx + 1;
      const box = el("div", "section");
      if (section.heading) {
        box.append(el("h3", "heading", section.heading));
        box.append(
          this.gradeControl({ criterion: "HRdirect", summary_id: summary.id, i, j: null }),
        );
      }
      section.statements.forEach((statement, jdx) => {
        const j = jdx + 1;
        const row = el("div", "statement");
        row.append(el("p", "statement-text", statement.text), this.citationLinks(side, statement.citations));
        row.append(this.gradeControl({ criterion: "SRel", summary_id: summary.id, i, j }));
        row.append(this.gradeControl({ criterion: "SF", summary_id: summary.id, i, j }));
        box.append(row);
      });
      body.append(box);
    });

    const doclist = el("div", "doclist");
    doclist.append(el("h3", undefined, "Documents"));
    for (const entry of summary.doclist) {
      const item = el("div", "doc-entry");
      item.id = `doc-${side}-${entry.n}`;
      const link = el("a", "doc-title", `[${entry.n}] ${entry.title}`);
      link.href = entry.url;
      link.target = "_blank";
      item.append(link);
      if (entry.snippet) {
        item.append(el("p", "doc-snippet", entry.snippet));
      }
      doclist.append(item);
    }

    const parts = [overview, body];
    if (summary.overview.position === "trailing") {
      parts.reverse();
    }
    column.append(...parts, doclist);
    return column;
  }

  private citationLinks(side: Side, citations: number[]): HTMLElement {
    const wrap = el("span", "citations");
    for (const n of citations) {
      const link = el("a", "citation", `[${n}]`);
      link.href = `#doc-${side}-${n}`;
      link.addEventListener("click", (event) => {
        event.preventDefault();
        const target = document.getElementById(`doc-${side}-${n}`);
        if (target) {
          target.scrollIntoView({ block: "center" });
          target.classList.add("highlight");
          setTimeout(() => target.classList.remove("highlight"), 1200);
        }
      });
      wrap.append(link);
    }
    return wrap;
  }

  private gradeControl(target: ChecklistTarget): HTMLElement {
    const key = targetKey(target);
    const group = el("div", "grade-group");
    group.tabIndex = 0;
    group.dataset.key = key;
    group.append(el("span", "grade-label", CRITERION_LABELS[target.criterion] ?? target.criterion));
    GRADES.forEach((grade, index) => {
      const button = el("button", "grade-button", `${index + 1} ${grade}`);
      button.type = "button";
      button.dataset.grade = grade;
      button.addEventListener("click", () => this.setGrade(key, grade));
      group.append(button);
    });
    group.addEventListener("focusin", () => {
      this.focusedKey = key;
    });
    this.groups.set(key, group);
    return group;
  }

  private renderFooter(): HTMLElement {
    const footer = el("footer", "pair-footer");
    for (const side of ["A", "B"] as const) {
      footer.append(
        this.gradeControl({
          criterion: "CompAbs",
          summary_id: this.pair.sides[side].summary.id,
          i: null,
          j: null,
        }),
      );
    }

    const preference = el("div", "preference-group");
    preference.append(el("span", "grade-label", "Which summary is better overall?"));
    for (const side of ["A", "B"] as const) {
      const button = el("button", "preference-button", `Summary ${side}`);
      button.type = "button";
      button.dataset.side = side;
      button.addEventListener("click", () => {
        this.state.preference = side;
        this.handlers.onState(this.state);
        this.refresh();
      });
      preference.append(button);
    }
    footer.append(preference);

    this.missingNote = el("p", "missing-note");
    this.submitButton = el("button", "submit-button", "Submit") as HTMLButtonElement;
    this.submitButton.type = "button";
    this.submitButton.addEventListener("click", () => this.handlers.onSubmit());
    const skip = el("button", "skip-button", "Skip this pair");
    skip.type = "button";
    skip.addEventListener("click", () => this.handlers.onSkip());
    footer.append(this.missingNote, this.submitButton, skip);
    return footer;
  }

  private setGrade(key: string, grade: Grade): void {
    this.state.grades[key] = grade;
    this.handlers.onState(this.state);
    this.refresh();
  }

  /** 1/2/3 grade the focused control without leaving the keyboard. */
  handleKey(event: KeyboardEvent): void {
    const index = Number.parseInt(event.key, 10) - 1;
    if (this.focusedKey === null || Number.isNaN(index) || index < 0 || index >= GRADES.length) {
      return;
    }
    this.setGrade(this.focusedKey, GRADES[index]);
  }

  private refresh(): void {
    for (const [key, group] of this.groups) {
      const chosen = this.state.grades[key];
      for (const button of group.querySelectorAll<HTMLButtonElement>(".grade-button")) {
        button.classList.toggle("selected", button.dataset.grade === chosen);
      }
    }
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".preference-button")) {
      button.classList.toggle("selected", button.dataset.side === this.state.preference);
    }
    const missing = missingTargets(this.pair, this.state);
    this.submitButton.disabled = missing.length > 0;
    this.missingNote.textContent =
      missing.length > 0 ? `${missing.length} item(s) still need an answer` : "Ready to submit";
  }

  /** Highlight the targets a 409 response reported as missing. */
  showMissing(keys: string[]): void {
    for (const [key, group] of this.groups) {
      group.classList.toggle("attention", keys.includes(key));
    }
  }
}
