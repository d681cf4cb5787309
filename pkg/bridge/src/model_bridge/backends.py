"""Scoring and summarization backends.

The deterministic test backends let conformance tests run without model
weights; real model backends implement the same two callables and drop in
via the app factory.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from math import sqrt
from pathlib import Path

_WORD_RE = re.compile(r"\w+", re.UNICODE)

DEFAULT_CANNED_SUMMARY = (
    "This is a canned lay summary produced by the deterministic test backend.")


def _tokens(text: str) -> list[str]:
    return [w.lower() for w in _WORD_RE.findall(text)]


class LexicalReranker:
    """Term-frequency cosine between query and candidate; deterministic."""

    def score(self, query: str, candidates: list[tuple[str, str]]) -> dict[str, float]:
        q = Counter(_tokens(query))
        nq = sqrt(sum(c * c for c in q.values()))
        scores = {}
        for cid, text in candidates:
            p = Counter(_tokens(text))
            np = sqrt(sum(c * c for c in p.values()))
            if nq == 0 or np == 0:
                scores[cid] = 0.0
                continue
            dot = sum(q[t] * p[t] for t in q.keys() & p.keys())
            scores[cid] = dot / (nq * np)
        return scores


class EchoSummarizer:
    """Always returns one fixed string; the simplest deterministic backend."""

    def __init__(self, text: str = DEFAULT_CANNED_SUMMARY):
        self.text = text

    def summarize(self, system: str, user: str, temperature: float) -> str:
        return self.text


class RecordedSummarizer:
    """Replays responses recorded once and frozen in a JSON file.

    The file maps sha256(system + "\\x00" + user) to the recorded summary.
    """

    def __init__(self, recordings_path: str | Path):
        with open(recordings_path, encoding="utf-8") as fh:
            self.recordings: dict[str, str] = json.load(fh)

    @staticmethod
    def request_key(system: str, user: str) -> str:
        return hashlib.sha256((system + "\x00" + user).encode("utf-8")).hexdigest()

    def summarize(self, system: str, user: str, temperature: float) -> str:
        key = self.request_key(system, user)
        if key not in self.recordings:
            raise LookupError(f"no recorded response for request {key}")
        return self.recordings[key]
