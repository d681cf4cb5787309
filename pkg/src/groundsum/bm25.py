"""Immutable inverted index with Okapi BM25 scoring and top-k search.

The index is built once and never mutated; searches are read-only and safe
to run concurrently. Persistence uses a directory with a plain-text `meta`
header, a binary `postings` file, and a `passages` JSON-lines file (so
retrieved passages can be materialized without the source corpus).

Postings binary layout (little-endian), after an 8-byte magic "GSIDX001":
    uint32 doc_count
    per doc:  uint16 id_len, id utf-8 bytes, uint32 token_count
    uint32 term_count
    per term: uint16 term_len, term utf-8 bytes, uint32 posting_count,
              posting_count * (uint32 doc_index, uint32 term_frequency)
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Passage
from .textproc import normalized_tokens

_MAGIC = b"GSIDX001"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class BM25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class Hit:
    passage_id: str
    score: float


@dataclass(frozen=True)
class Index:
    postings: dict[str, tuple[tuple[str, int], ...]]  # term -> ((passage_id, tf), ...)
    doc_lengths: dict[str, int]
    avg_doc_length: float
    doc_count: int
    params: BM25Params
    passages: dict[str, Passage] = field(repr=False)


def build_index(passages: list[Passage], params: BM25Params = BM25Params()) -> Index:
    if not passages:
        raise ValueError("empty corpus: cannot build an index over zero passages")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    by_id: dict[str, Passage] = {}
    for p in passages:
        if p.passage_id in by_id:
            raise ValueError(f"duplicate passage id {p.passage_id!r}")
        by_id[p.passage_id] = p
        tokens = normalized_tokens(p.text)
        doc_lengths[p.passage_id] = len(tokens)
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((p.passage_id, tf))
    avg = sum(doc_lengths.values()) / len(doc_lengths)
    return Index(
        postings={t: tuple(ps) for t, ps in postings.items()},
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        doc_count=len(doc_lengths),
        params=params,
        passages=by_id,
    )


def idf(index: Index, term: str) -> float:
    """Non-negative idf: ln(1 + (N - df + 0.5) / (df + 0.5)); 0-df terms included."""
    df = len(index.postings.get(term, ()))
    return math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))


def _tf_component(tf: int, dl: int, index: Index) -> float:
    k1, b = index.params.k1, index.params.b
    return tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / index.avg_doc_length))


def bm25_score(index: Index, query_terms: list[str], passage_id: str) -> float:
    if passage_id not in index.doc_lengths:
        raise KeyError(f"unknown passage ref {passage_id!r}")
    dl = index.doc_lengths[passage_id]
    score = 0.0
    for term in query_terms:
        for pid, tf in index.postings.get(term, ()):
            if pid == passage_id:
                score += idf(index, term) * _tf_component(tf, dl, index)
                break
    return score


def search(index: Index, query: str, k: int) -> list[Hit]:
    """Top-k passages by BM25, score descending, ties by passage_id ascending."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores: dict[str, float] = {}
    for term in normalized_tokens(query):
        term_idf = idf(index, term)
        for pid, tf in index.postings.get(term, ()):
            scores[pid] = scores.get(pid, 0.0) + term_idf * _tf_component(tf, index.doc_lengths[pid], index)
    hits = [Hit(pid, s) for pid, s in scores.items() if s > 0.0]
    hits.sort(key=lambda h: (-h.score, h.passage_id))
    return hits[:k]


def save_index(index: Index, directory: str | Path) -> None:
    """Write the index atomically (build in a temp dir, then swap in)."""
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=directory.parent, prefix=".idx-"))
    try:
        doc_ids = sorted(index.doc_lengths)
        doc_pos = {pid: i for i, pid in enumerate(doc_ids)}
        with open(tmp / "meta", "w", encoding="utf-8") as fh:
            fh.write(f"format_version: {_FORMAT_VERSION}\n")
            fh.write(f"k1: {index.params.k1!r}\n")
            fh.write(f"b: {index.params.b!r}\n")
            fh.write(f"doc_count: {index.doc_count}\n")
            fh.write(f"avg_doc_length: {index.avg_doc_length!r}\n")
        with open(tmp / "postings", "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(doc_ids)))
            for pid in doc_ids:
                raw = pid.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)) + raw)
                fh.write(struct.pack("<I", index.doc_lengths[pid]))
            fh.write(struct.pack("<I", len(index.postings)))
            for term in sorted(index.postings):
                raw = term.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)) + raw)
                plist = index.postings[term]
                fh.write(struct.pack("<I", len(plist)))
                for pid, tf in plist:
                    fh.write(struct.pack("<II", doc_pos[pid], tf))
        with open(tmp / "passages", "w", encoding="utf-8") as fh:
            for pid in doc_ids:
                p = index.passages[pid]
                fh.write(json.dumps({
                    "id": p.passage_id, "source": p.source, "title": p.title,
                    "text": p.text, "origin_doc_id": p.origin_doc_id,
                }, ensure_ascii=False) + "\n")
        if directory.exists():
            backup = Path(str(directory) + ".old")
            os.rename(directory, backup)
            os.rename(tmp, directory)
            _rmtree(backup)
        else:
            os.rename(tmp, directory)
    except BaseException:
        _rmtree(tmp)
        raise


def load_index(directory: str | Path) -> Index:
    directory = Path(directory)
    meta: dict[str, str] = {}
    with open(directory / "meta", encoding="utf-8") as fh:
        for line in fh:
            key, _, value = line.partition(":")
            meta[key.strip()] = value.strip()
    if int(meta["format_version"]) != _FORMAT_VERSION:
        raise ValueError(f"unsupported index format version {meta['format_version']}")
    params = BM25Params(k1=float(meta["k1"]), b=float(meta["b"]))

    with open(directory / "postings", "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise ValueError(f"{directory}/postings: bad magic")
    off = 8

    def u16():
        nonlocal off
        (v,) = struct.unpack_from("<H", data, off)
        off += 2
        return v

    def u32():
        nonlocal off
        (v,) = struct.unpack_from("<I", data, off)
        off += 4
        return v

    def utf8(n):
        nonlocal off
        v = data[off : off + n].decode("utf-8")
        off += n
        return v

    doc_count = u32()
    doc_ids = []
    doc_lengths = {}
    for _ in range(doc_count):
        pid = utf8(u16())
        doc_ids.append(pid)
        doc_lengths[pid] = u32()
    postings: dict[str, tuple[tuple[str, int], ...]] = {}
    for _ in range(u32()):
        term = utf8(u16())
        plist = []
        for _ in range(u32()):
            doc_idx = u32()
            tf = u32()
            plist.append((doc_ids[doc_idx], tf))
        postings[term] = tuple(plist)

    passages: dict[str, Passage] = {}
    with open(directory / "passages", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            passages[obj["id"]] = Passage(
                passage_id=obj["id"], source=obj["source"], title=obj["title"],
                text=obj["text"], origin_doc_id=obj.get("origin_doc_id"),
            )
    avg = sum(doc_lengths.values()) / len(doc_lengths)
    return Index(postings=postings, doc_lengths=doc_lengths, avg_doc_length=avg,
                 doc_count=doc_count, params=params, passages=passages)


def _rmtree(path: Path) -> None:
    import shutil

    shutil.rmtree(path, ignore_errors=True)
