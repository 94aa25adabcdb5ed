"""Deterministic mock labelling endpoint for tests and offline runs.

Implements the same wire contract as a real endpoint: POST {model, messages,
temperature} -> {content}. Answers are a pure function of the prompt text, so
repeated runs are bit-identical.
"""
from __future__ import annotations

import hashlib
import json
from typing import Callable, Optional

import httpx

GRADES = ("Perfectly", "Partially", "No")


def deterministic_answer(prompt: str) -> str:
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    if "LEFT" in prompt and "RIGHT" in prompt:
        return "LEFT" if digest[0] % 2 == 0 else "RIGHT"
    return GRADES[digest[0] % 3]


def make_mock_transport(
    answer: Optional[Callable[[str], str]] = None,
) -> httpx.MockTransport:
    answer = answer or deterministic_answer

    def handler(request: httpx.Request) -> httpx.Response:
        payload = json.loads(request.content.decode("utf-8"))
        prompt = payload["messages"][-1]["content"]
        return httpx.Response(200, json={"content": answer(prompt)})

    return httpx.MockTransport(handler)
