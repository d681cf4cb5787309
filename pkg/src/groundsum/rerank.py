"""Candidate re-ranking against the lead window.

Two scorers share one interface: a built-in lexical scorer (idf-weighted
cosine, fully deterministic) and a remote model-backed scorer reached over
HTTP. Downstream assembly consumes only the ordering, never the magnitudes.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import requests

from .corpus import Passage
from .grounding import CandidatePool
from .textproc import normalized_tokens


class RemoteScorerError(RuntimeError):
    """Remote scorer unreachable or violating the wire contract."""


@dataclass(frozen=True)
class ScoredCandidate:
    passage: Passage
    score: float


@dataclass(frozen=True)
class ScorerSpec:
    kind: str = "lexical"  # "lexical" | "remote"
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in ("lexical", "remote"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote scorer requires an endpoint")


def score_lexical(query: str, passage_text: str, idf: dict[str, float]) -> float:
    """Cosine similarity of idf-weighted term-frequency vectors, in [0, 1]."""
    q = Counter(t for t in normalized_tokens(query) if idf.get(t, 0.0) > 0.0)
    p = Counter(t for t in normalized_tokens(passage_text) if idf.get(t, 0.0) > 0.0)
    if not q or not p:
        return 0.0
    dot = sum(q[t] * idf[t] ** 2 * p[t] for t in q.keys() & p.keys())
    nq = math.sqrt(sum((c * idf[t]) ** 2 for t, c in q.items()))
    np_ = math.sqrt(sum((c * idf[t]) ** 2 for t, c in p.items()))
    return dot / (nq * np_)


def pool_idf(pool: CandidatePool) -> dict[str, float]:
    """Non-negative idf computed over the pool's own candidate texts."""
    n = len(pool.candidates)
    df: Counter[str] = Counter()
    for c in pool.candidates:
        df.update(set(normalized_tokens(c.text)))
    return {t: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}


def _score_remote(pool: CandidatePool, query: str, endpoint: str) -> dict[str, float]:
    payload = {
        "query": query,
        "candidates": [{"id": c.passage_id, "text": c.text} for c in pool.candidates],
    }
    try:
        resp = requests.post(endpoint.rstrip("/") + "/rerank", json=payload, timeout=120)
        resp.raise_for_status()
        body = resp.json()
    except (requests.RequestException, ValueError) as exc:
        raise RemoteScorerError(f"remote scorer at {endpoint} failed: {exc}") from exc
    scores = {item["id"]: float(item["score"]) for item in body.get("scores", [])}
    expected = {c.passage_id for c in pool.candidates}
    if set(scores) != expected:
        raise RemoteScorerError(
            f"remote scorer returned ids {sorted(scores)} but expected {sorted(expected)}")
    bad = [pid for pid, s in scores.items() if not math.isfinite(s)]
    if bad:
        raise RemoteScorerError(f"remote scorer returned non-finite scores for {bad}")
    return scores


def rank_pool(pool: CandidatePool, query: str, scorer: ScorerSpec) -> list[ScoredCandidate]:
    """Order the pool by score descending, ties by passage_id ascending."""
    if scorer.kind == "lexical":
        idf = pool_idf(pool)
        scores = {c.passage_id: score_lexical(query, c.text, idf) for c in pool.candidates}
    else:
        scores = _score_remote(pool, query, scorer.endpoint)
    ranked = [ScoredCandidate(passage=c, score=scores[c.passage_id]) for c in pool.candidates]
    ranked.sort(key=lambda sc: (-sc.score, sc.passage.passage_id))
    return ranked
