"""Deterministic tokenization, sentence segmentation, and token-budget accounting.

The tokenizer splits on any non-alphanumeric character (Unicode categories)
and lowercases for the normalized form. It is deliberately model-agnostic:
callers that need subword-exact budgets can substitute their own counter via
the ``token_counter`` hooks exposed by the higher-level modules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Unicode letters and digits, underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_TERMINATORS = ".!?"


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    start: int  # char offset into the source text
    end: int    # exclusive char offset


@dataclass(frozen=True)
class Sentence:
    text: str
    start_token: int
    end_token: int  # exclusive


@dataclass(frozen=True)
class TokenBudget:
    lead_budget: int = 1024
    doc_budget: int = 8192
    grounding_budget: int = 8192

    def __post_init__(self):
        for name in ("lead_budget", "doc_budget", "grounding_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


def tokenize(text: str) -> list[Token]:
    """Split text into alphanumeric runs; punctuation never survives as a token."""
    return [
        Token(surface=m.group(), normalized=m.group().lower(), start=m.start(), end=m.end())
        for m in _TOKEN_RE.finditer(text)
    ]


def normalized_tokens(text: str) -> list[str]:
    return [t.normalized for t in tokenize(text)]


def count_tokens(text: str) -> int:
    return len(tokenize(text))


def take_lead(text: str, budget: int) -> str:
    """Prefix of `text` containing at most `budget` tokens, cut at a token boundary."""
    if budget <= 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    tokens = tokenize(text)
    if len(tokens) <= budget:
        return text
    return text[: tokens[budget - 1].end]


def _boundary_positions(text: str) -> list[int]:
    """Char offsets of sentence-closing terminators.

    A terminator closes a sentence when followed by whitespace then an
    uppercase letter, or when only whitespace (possibly nothing) remains.
    """
    positions = []
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        j = i + 1
        if j >= n:
            positions.append(i)
            continue
        if not text[j].isspace():
            continue
        while j < n and text[j].isspace():
            j += 1
        if j >= n or text[j].isupper():
            positions.append(i)
    return positions


def split_sentences(text: str) -> list[Sentence]:
    """Rule-based sentence segmentation covering every token exactly once."""
    tokens = tokenize(text)
    if not tokens:
        return []
    boundaries = _boundary_positions(text)
    sentences = []
    tok_i = 0
    seg_start = 0
    for b in boundaries:
        start_tok = tok_i
        while tok_i < len(tokens) and tokens[tok_i].start <= b:
            tok_i += 1
        if tok_i == start_tok:
            continue  # terminator with no tokens of its own (e.g. "?!")
        sentences.append(Sentence(text=text[seg_start : b + 1].strip(), start_token=start_tok, end_token=tok_i))
        seg_start = b + 1
    if tok_i < len(tokens):
        sentences.append(Sentence(text=text[seg_start:].strip(), start_token=tok_i, end_token=len(tokens)))
    return sentences
