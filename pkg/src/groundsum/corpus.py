"""Corpus ingestion: passage files, 6-sentence chunking, definition stores,
bibliographic reference strings, and the evaluation dataset format.

All on-disk formats are UTF-8 JSON-lines; see README for the key sets.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .textproc import normalized_tokens, split_sentences

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Malformed or inconsistent corpus data."""


@dataclass(frozen=True)
class Passage:
    passage_id: str
    source: str
    title: str
    text: str
    origin_doc_id: str | None = None

    def __post_init__(self):
        if not self.text:
            raise CorpusError(f"passage {self.passage_id!r} has empty text")


@dataclass(frozen=True)
class DefinitionEntry:
    term: str  # normalized: lowercased tokens joined by single spaces
    definition: str


@dataclass(frozen=True)
class BiblioRecord:
    doc_id: str
    title: str
    first_author_surname: str
    year: int

    def __post_init__(self):
        if not (1500 <= self.year <= 2100):
            raise CorpusError(f"year {self.year} out of range [1500, 2100]")
        if not self.title:
            raise CorpusError("title must be non-empty")


@dataclass(frozen=True)
class DatasetDocument:
    doc_id: str
    title: str
    first_author_surname: str
    year: int
    article: str
    abstract: str
    reference_summary: str


def chunk_document(doc_id: str, title: str, body: str, sentences_per_chunk: int = 6,
                   source: str = "") -> list[Passage]:
    """Chunk a document into consecutive windows of N sentences (last may be short)."""
    if sentences_per_chunk < 1:
        raise ValueError(f"sentences_per_chunk must be >= 1, got {sentences_per_chunk}")
    sentences = split_sentences(body)
    passages = []
    for chunk_no, i in enumerate(range(0, len(sentences), sentences_per_chunk)):
        window = sentences[i : i + sentences_per_chunk]
        passages.append(Passage(
            passage_id=f"{doc_id}#{chunk_no}",
            source=source,
            title=title,
            text=" ".join(s.text for s in window),
            origin_doc_id=doc_id,
        ))
    return passages


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def load_passages(path: str | Path, source: str) -> list[Passage]:
    """Load a passage JSON-lines file, stamping `source` onto every record."""
    passages = []
    seen = set()
    for lineno, obj in _read_jsonl(path):
        try:
            passage = Passage(
                passage_id=str(obj["id"]),
                source=source,
                title=str(obj.get("title", "")),
                text=str(obj["text"]),
                origin_doc_id=obj.get("origin_doc_id"),
            )
        except KeyError as exc:
            raise CorpusError(f"{path}:{lineno}: missing key {exc}") from exc
        if passage.passage_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate passage id {passage.passage_id!r}")
        seen.add(passage.passage_id)
        passages.append(passage)
    return passages


def write_passages(path: str | Path, passages: Iterable[Passage]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in passages:
            rec = {"id": p.passage_id, "title": p.title, "text": p.text}
            if p.origin_doc_id is not None:
                rec["origin_doc_id"] = p.origin_doc_id
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def normalize_term(term: str) -> str:
    return " ".join(normalized_tokens(term))


def load_definitions(path: str | Path) -> list[DefinitionEntry]:
    """Load a term -> definition JSON-lines file; duplicate terms: last wins."""
    by_term: dict[str, DefinitionEntry] = {}
    for lineno, obj in _read_jsonl(path):
        try:
            term = normalize_term(str(obj["term"]))
            definition = str(obj["definition"])
        except KeyError as exc:
            raise CorpusError(f"{path}:{lineno}: missing key {exc}") from exc
        if not term:
            raise CorpusError(f"{path}:{lineno}: term empty after normalization")
        if not definition:
            raise CorpusError(f"{path}:{lineno}: empty definition")
        if term in by_term:
            logger.warning("%s:%d: duplicate term %r, keeping last entry", path, lineno, term)
        by_term[term] = DefinitionEntry(term=term, definition=definition)
    return list(by_term.values())


def format_reference_string(rec: BiblioRecord) -> str:
    return f"{rec.first_author_surname}, et al. ({rec.year}). {rec.title}."


def load_dataset(path: str | Path) -> list[DatasetDocument]:
    """Load the evaluation dataset; fail fast on malformed records, naming the id."""
    docs = []
    seen = set()
    for lineno, obj in _read_jsonl(path):
        doc_id = str(obj.get("id", f"<line {lineno}>"))
        try:
            doc = DatasetDocument(
                doc_id=str(obj["id"]),
                title=str(obj["title"]),
                first_author_surname=str(obj["first_author_surname"]),
                year=int(obj["year"]),
                article=str(obj["article"]),
                abstract=str(obj["abstract"]),
                reference_summary=str(obj["reference_summary"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{path}:{lineno}: malformed dataset record {doc_id!r}: {exc}") from exc
        if doc.doc_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate document id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs
