/** Thin fetch wrappers over the annotation service's JSON API. */

import type { NextPairDone, PairPayload, SubmissionBody, SubmitResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`request failed with status ${status}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail: unknown = null;
    try {
      detail = (await response.json()).detail;
    } catch {
      // Non-JSON error body; status alone has to do.
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export async function fetchNextPair(labellerId: string): Promise<PairPayload | NextPairDone> {
  const response = await fetch(`/api/pairs/next?labeller=${encodeURIComponent(labellerId)}`);
  return asJson(response);
}

export async function fetchPair(pairId: string, labellerId: string): Promise<PairPayload> {
  const response = await fetch(
    `/api/pairs/${encodeURIComponent(pairId)}?labeller=${encodeURIComponent(labellerId)}`,
  );
  return asJson(response);
}

export async function submitLabels(
  pairId: string,
  body: SubmissionBody,
): Promise<SubmitResponse> {
  const response = await fetch(`/api/pairs/${encodeURIComponent(pairId)}/labels`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return asJson(response);
}

export async function skipPair(pairId: string, labellerId: string): Promise<void> {
  const response = await fetch(
    `/api/pairs/${encodeURIComponent(pairId)}/skip?labeller=${encodeURIComponent(labellerId)}`,
    { method: "POST" },
  );
  await asJson(response);
}
