"""Model-input assembly: budgeted document prefix, the `<|SEARCH|>` separator,
the bibliographic reference string, and as many ranked passages as fit whole
within the grounding budget. Also builds the zero-shot chat prompts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rerank import ScoredCandidate
from .textproc import TokenBudget, count_tokens, take_lead

SEARCH_MARKER = "<|SEARCH|>"
PASSAGE_DELIMITER = "\n\n"

ZERO_SHOT_SYSTEM_PROMPT = (
    "You are a document summarizing agent focusing on summarizing documents to "
    "make them readable for a lay audience. Summarize the documents presented "
    "by the user in as simple terms as possible."
)
ZERO_SHOT_USER_TEMPLATE = (
    "Summarize this document for a lay audience:\n"
    "{document}\n"
    "Below are a set of search results that ground the above document.\n"
    "{search_results}"
)
ZERO_SHOT_DOC_BUDGET = 2048


class BudgetError(ValueError):
    """A mandatory element does not fit within its budget."""


@dataclass(frozen=True)
class ModelInput:
    text: str
    search_marker_offset: int
    global_attention_offsets: tuple[int, ...]
    doc_tokens_used: int
    grounding_tokens_used: int
    passages_used: tuple[str, ...]       # passage ids in rank order
    passage_sources: tuple[str, ...]     # aligned corpus names, for usage stats
    ref_string: str


@dataclass(frozen=True)
class PromptPair:
    system: str
    user: str


def _select_passages(ranked: list[ScoredCandidate], budget_left: int) -> tuple[list[ScoredCandidate], int]:
    """Rank-order prefix of passages that fit whole; stop at the first overflow."""
    used = 0
    selected = []
    for sc in ranked:
        cost = count_tokens(sc.passage.text)
        if used + cost > budget_left:
            break
        used += cost
        selected.append(sc)
    return selected, used


def build_model_input(article: str, ranked: list[ScoredCandidate], ref_string: str,
                      budgets: TokenBudget) -> ModelInput:
    ref_cost = count_tokens(ref_string)
    if ref_cost > budgets.grounding_budget:
        raise BudgetError(
            f"reference string costs {ref_cost} tokens, over the grounding budget "
            f"of {budgets.grounding_budget}")
    doc_prefix = take_lead(article, budgets.doc_budget)
    doc_tokens = count_tokens(doc_prefix)
    selected, passage_tokens = _select_passages(ranked, budgets.grounding_budget - ref_cost)

    grounding_parts = [ref_string] + [sc.passage.text for sc in selected]
    for part in [doc_prefix] + grounding_parts:
        if SEARCH_MARKER in part:
            raise ValueError(f"input text already contains the separator literal {SEARCH_MARKER}")
    text = doc_prefix + "\n" + SEARCH_MARKER + "\n" + PASSAGE_DELIMITER.join(grounding_parts)
    # the marker tokenizes to a single token right after the document prefix
    marker_offset = doc_tokens
    return ModelInput(
        text=text,
        search_marker_offset=marker_offset,
        global_attention_offsets=(0, marker_offset) if marker_offset != 0 else (0,),
        doc_tokens_used=doc_tokens,
        grounding_tokens_used=ref_cost + passage_tokens,
        passages_used=tuple(sc.passage.passage_id for sc in selected),
        passage_sources=tuple(sc.passage.source for sc in selected),
        ref_string=ref_string,
    )


def build_zero_shot_prompt(article: str, ranked: list[ScoredCandidate],
                           budgets: TokenBudget) -> PromptPair:
    doc_prefix = take_lead(article, budgets.doc_budget)
    selected, _ = _select_passages(ranked, budgets.grounding_budget)
    search_results = PASSAGE_DELIMITER.join(sc.passage.text for sc in selected)
    user = ZERO_SHOT_USER_TEMPLATE.format(document=doc_prefix, search_results=search_results)
    return PromptPair(system=ZERO_SHOT_SYSTEM_PROMPT, user=user)


def emit_attention_metadata(model_input: ModelInput) -> dict:
    """Serializable attention metadata for downstream model consumers."""
    return {
        "search_marker_offset": model_input.search_marker_offset,
        "global_attention_offsets": list(model_input.global_attention_offsets),
    }
