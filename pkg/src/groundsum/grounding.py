"""Retrieval step of the grounding pipeline: per-sentence top-k BM25 search
over the lead window, dictionary definition linking, candidate pooling with
deduplication, and self-abstract removal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .bm25 import Index, search
from .corpus import DefinitionEntry, Passage
from .textproc import normalized_tokens, split_sentences, take_lead


class CorpusKind(str, Enum):
    SEARCHABLE = "searchable"
    DEFINITIONAL = "definitional"


@dataclass(frozen=True)
class GroundingConfig:
    corpora: tuple[tuple[str, CorpusKind], ...]
    lead_budget: int = 1024
    per_sentence_k: int = 1

    def __post_init__(self):
        if self.per_sentence_k < 1:
            raise ValueError(f"per_sentence_k must be >= 1, got {self.per_sentence_k}")
        names = [name for name, _ in self.corpora]
        if len(set(names)) != len(names):
            raise ValueError("corpus names must be unique")

    def searchable(self) -> list[str]:
        # canonical name order so retrieval is independent of config ordering
        return sorted(name for name, kind in self.corpora if kind == CorpusKind.SEARCHABLE)

    def definitional(self) -> list[str]:
        return sorted(name for name, kind in self.corpora if kind == CorpusKind.DEFINITIONAL)


@dataclass(frozen=True)
class Provenance:
    source: str
    sentence_index: int | None = None
    matched_term: str | None = None


@dataclass
class CandidatePool:
    doc_id: str
    candidates: list[Passage] = field(default_factory=list)
    provenance: list[Provenance] = field(default_factory=list)
    duplicates_suppressed: int = 0

    def add(self, passage: Passage, prov: Provenance) -> bool:
        """Add unless a candidate with the same (source, passage_id) exists."""
        key = (passage.source, passage.passage_id)
        if any((c.source, c.passage_id) == key for c in self.candidates):
            self.duplicates_suppressed += 1
            return False
        self.candidates.append(passage)
        self.provenance.append(prov)
        return True


def retrieve_candidates(doc_id: str, article: str, indexes: dict[str, Index],
                        config: GroundingConfig) -> CandidatePool:
    """Per-sentence top-k retrieval from every searchable corpus over the lead window."""
    searchable = config.searchable()
    missing = [name for name in searchable if name not in indexes]
    if missing:
        raise KeyError(f"no index for configured corpora: {missing}")
    lead = take_lead(article, config.lead_budget)
    pool = CandidatePool(doc_id=doc_id)
    for sent_idx, sentence in enumerate(split_sentences(lead)):
        for name in searchable:
            index = indexes[name]
            for hit in search(index, sentence.text, config.per_sentence_k):
                pool.add(index.passages[hit.passage_id],
                         Provenance(source=name, sentence_index=sent_idx))
    return pool


def link_definitions(article: str, definitions: list[DefinitionEntry],
                     config: GroundingConfig, source: str) -> list[Passage]:
    """Greedy longest-match dictionary lookup over the lead window's tokens.

    Each distinct matched term yields one definition passage whose title is
    the matched term (used downstream as provenance).
    """
    by_term = {tuple(entry.term.split()): entry for entry in definitions}
    if not by_term:
        return []
    max_len = max(len(k) for k in by_term)
    tokens = normalized_tokens(take_lead(article, config.lead_budget))

    matched: list[Passage] = []
    seen_terms: set[str] = set()
    i = 0
    while i < len(tokens):
        for span in range(min(max_len, len(tokens) - i), 0, -1):
            key = tuple(tokens[i : i + span])
            if key in by_term:
                entry = by_term[key]
                if entry.term not in seen_terms:
                    seen_terms.add(entry.term)
                    matched.append(Passage(passage_id=f"def:{entry.term}", source=source,
                                           title=entry.term, text=entry.definition))
                i += span
                break
        else:
            i += 1
    return matched


def _word_ngrams(text: str, n: int) -> set[tuple[str, ...]]:
    tokens = normalized_tokens(text)
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def ngram_jaccard(a: str, b: str, n: int = 3) -> float:
    sa, sb = _word_ngrams(a, n), _word_ngrams(b, n)
    if not sa and not sb:
        return 1.0
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


SELF_SIMILARITY_THRESHOLD = 0.8


def remove_self(pool: CandidatePool, doc_id: str, own_abstract: str) -> tuple[CandidatePool, list[Passage]]:
    """Drop the document's own passages: origin id match or near-duplicate abstract.

    Returns the filtered pool and the dropped passages (for provenance logs).
    """
    kept = CandidatePool(doc_id=pool.doc_id)
    dropped = []
    for passage, prov in zip(pool.candidates, pool.provenance):
        is_self = passage.origin_doc_id == doc_id or (
            own_abstract and ngram_jaccard(passage.text, own_abstract) >= SELF_SIMILARITY_THRESHOLD
        )
        if is_self:
            dropped.append(passage)
        else:
            kept.add(passage, prov)
    return kept, dropped
