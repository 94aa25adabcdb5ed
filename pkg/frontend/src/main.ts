/** Entry point: identify the labeller, then loop over open pairs. */

import { ApiError, fetchNextPair, skipPair, submitLabels } from "./api.js";
import {
  buildSubmission,
  clearState,
  loadState,
  saveState,
  validatePair,
} from "./checklist.js";
import { PairView } from "./render.js";
import type { PairPayload } from "./types.js";

function labellerId(): string {
  let id = window.localStorage.getItem("sgss:labeller");
  while (!id) {
    id = window.prompt("Enter your labeller id")?.trim() || null;
  }
  window.localStorage.setItem("sgss:labeller", id);
  return id;
}

async function showPair(root: HTMLElement, labeller: string, pair: PairPayload): Promise<void> {
  const state = loadState(window.localStorage, labeller, pair.pair_id);
  const view = new PairView(root, pair, state, {
    onState(next) {
      // Every change lands in localStorage, so a reload loses nothing.
      saveState(window.localStorage, labeller, pair.pair_id, next);
    },
    async onSubmit() {
      try {
        await submitLabels(pair.pair_id, buildSubmission(pair, state, labeller));
        clearState(window.localStorage, labeller, pair.pair_id);
        await run(root, labeller);
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          const detail = error.detail as { missing_targets?: string[] } | string;
          const missing =
            typeof detail === "object" && detail?.missing_targets ? detail.missing_targets : [];
          view.showMissing(missing.map((m) => m.replace(/[()\/]/g, "|")));
          window.alert(`The server reported missing answers:\n${missing.join("\n")}`);
        } else {
          // Network failure: labels stay in localStorage for a retry.
          window.alert("Submission failed; your answers are saved locally. Retry when back online.");
        }
      }
    },
    async onSkip() {
      await skipPair(pair.pair_id, labeller);
      await run(root, labeller);
    },
  });
  view.render();
  window.onkeydown = (event) => {
    if (event.target instanceof HTMLInputElement) return;
    view.handleKey(event);
  };
}

async function run(root: HTMLElement, labeller: string): Promise<void> {
  try {
    const payload = await fetchNextPair(labeller);
    if (payload.pair_id === null) {
      root.replaceChildren();
      const done = document.createElement("h1");
      done.textContent = "All pairs are labelled. Thank you!";
      root.append(done);
      return;
    }
    await showPair(root, labeller, validatePair(payload));
  } catch (error) {
    PairView.renderError(root, error instanceof Error ? error.message : String(error));
  }
}

const root = document.getElementById("app");
if (root) {
  void run(root, labellerId());
}
