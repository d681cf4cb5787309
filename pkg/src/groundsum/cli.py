"""Command-line orchestration: index building, grounding runs, evaluation,
and table-shaped reporting.

Commands: `build-index`, `ground`, `eval`, `report`, each taking `--config`.
Exit codes: 0 success, 1 usage/config error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import assemble, metrics
from .bm25 import BM25Params, Index, build_index, load_index, save_index
from .corpus import (CorpusError, DatasetDocument, BiblioRecord, format_reference_string,
                     load_dataset, load_definitions, load_passages)
from .grounding import (CandidatePool, CorpusKind, GroundingConfig, Provenance,
                        link_definitions, remove_self, retrieve_candidates)
from .rerank import RemoteScorerError, ScorerSpec, rank_pool
from .textproc import TokenBudget, take_lead

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

MODE_FINETUNE = "finetune-input"
MODE_ZERO_SHOT = "zero-shot-prompt"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusSpec:
    name: str
    kind: CorpusKind
    path: Path


@dataclass(frozen=True)
class RunConfig:
    dataset_path: Path
    corpora: tuple[CorpusSpec, ...]
    index_dir: Path
    budgets: TokenBudget
    scorer: ScorerSpec
    mode: str
    bm25: BM25Params
    lead_budget: int = 1024
    per_sentence_k: int = 1
    sentences_per_chunk: int = 6
    workers: int = 4
    familiar_words_path: Path | None = None

    def grounding_config(self) -> GroundingConfig:
        return GroundingConfig(
            corpora=tuple((c.name, c.kind) for c in self.corpora),
            lead_budget=self.lead_budget,
            per_sentence_k=self.per_sentence_k,
        )


def load_config(path: str | Path, mode_override: str | None = None,
                scorer_override: str | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    base = Path(path).resolve().parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    mode = mode_override or raw.get("mode", MODE_FINETUNE)
    if mode not in (MODE_FINETUNE, MODE_ZERO_SHOT):
        raise ConfigError(f"unknown mode {mode!r}")

    corpora = []
    for entry in raw.get("corpora", []):
        try:
            corpora.append(CorpusSpec(
                name=str(entry["name"]),
                kind=CorpusKind(entry.get("kind", "searchable")),
                path=resolve(entry["path"]),
            ))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad corpus entry {entry!r}: {exc}") from exc

    budgets_raw = raw.get("budgets", {}) or {}
    # zero-shot mode defaults the document slot to 2,048 tokens unless the
    # config pins it explicitly
    doc_default = assemble.ZERO_SHOT_DOC_BUDGET if mode == MODE_ZERO_SHOT else 8192
    budgets = TokenBudget(
        lead_budget=int(budgets_raw.get("lead", 1024)),
        doc_budget=int(budgets_raw.get("doc", doc_default)),
        grounding_budget=int(budgets_raw.get("grounding", 8192)),
    )

    scorer_raw = raw.get("scorer", {}) or {}
    scorer_kind = scorer_override or scorer_raw.get("kind", "lexical")
    try:
        scorer = ScorerSpec(kind=scorer_kind, endpoint=scorer_raw.get("endpoint"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    bm25_raw = raw.get("bm25", {}) or {}
    try:
        bm25 = BM25Params(k1=float(bm25_raw.get("k1", 0.9)), b=float(bm25_raw.get("b", 0.4)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    familiar = raw.get("familiar_words")
    return RunConfig(
        dataset_path=resolve(raw.get("dataset", "dataset.jsonl")),
        corpora=tuple(corpora),
        index_dir=resolve(raw.get("index_dir", "indexes")),
        budgets=budgets,
        scorer=scorer,
        mode=mode,
        bm25=bm25,
        lead_budget=budgets.lead_budget,
        per_sentence_k=int(raw.get("per_sentence_k", 1)),
        sentences_per_chunk=int(raw.get("sentences_per_chunk", 6)),
        workers=int(raw.get("workers", 4)),
        familiar_words_path=resolve(familiar) if familiar else None,
    )


# ---------------------------------------------------------------- build-index

def cmd_build_index(config: RunConfig) -> None:
    config.index_dir.mkdir(parents=True, exist_ok=True)
    for spec in config.corpora:
        if spec.kind != CorpusKind.SEARCHABLE:
            continue  # definitional corpora are lookup tables, not indexes
        passages = load_passages(spec.path, source=spec.name)
        index = build_index(passages, config.bm25)
        save_index(index, config.index_dir / spec.name)
        logger.info("indexed %s: %d passages", spec.name, index.doc_count)


# --------------------------------------------------------------------- ground

@dataclass
class GroundedRecord:
    record: dict
    provenance: dict


def _load_indexes(config: RunConfig) -> dict[str, Index]:
    indexes = {}
    for spec in config.corpora:
        if spec.kind == CorpusKind.SEARCHABLE:
            path = config.index_dir / spec.name
            if not path.exists():
                raise CorpusError(f"index for corpus {spec.name!r} not found at {path}; "
                                  f"run build-index first")
            indexes[spec.name] = load_index(path)
    return indexes


def _load_definition_stores(config: RunConfig) -> dict[str, list]:
    return {spec.name: load_definitions(spec.path)
            for spec in config.corpora if spec.kind == CorpusKind.DEFINITIONAL}


def ground_document(doc: DatasetDocument, indexes: dict[str, Index],
                    definition_stores: dict[str, list], config: RunConfig) -> GroundedRecord:
    gconfig = config.grounding_config()
    pool = retrieve_candidates(doc.doc_id, doc.article, indexes, gconfig)
    for name in gconfig.definitional():
        for passage in link_definitions(doc.article, definition_stores[name], gconfig, source=name):
            pool.add(passage, Provenance(source=name, matched_term=passage.title))
    retrieved = [{"source": c.source, "id": c.passage_id} for c in pool.candidates]

    pool, dropped = remove_self(pool, doc.doc_id, doc.abstract)
    query = take_lead(doc.article, config.lead_budget)
    ranked = rank_pool(pool, query, config.scorer)

    ref_string = format_reference_string(BiblioRecord(
        doc_id=doc.doc_id, title=doc.title,
        first_author_surname=doc.first_author_surname, year=doc.year))

    if config.mode == MODE_ZERO_SHOT:
        selected, _ = assemble._select_passages(ranked, config.budgets.grounding_budget)
        prompt = assemble.build_zero_shot_prompt(doc.article, ranked, config.budgets)
        record = {
            "id": doc.doc_id,
            "system": prompt.system,
            "user": prompt.user,
            "passages_used": [sc.passage.passage_id for sc in selected],
            "passage_sources": [sc.passage.source for sc in selected],
        }
        included = record["passages_used"]
    else:
        model_input = assemble.build_model_input(doc.article, ranked, ref_string, config.budgets)
        record = {
            "id": doc.doc_id,
            "input_text": model_input.text,
            "search_marker_offset": model_input.search_marker_offset,
            "global_attention_offsets": list(model_input.global_attention_offsets),
            "passages_used": list(model_input.passages_used),
            "passage_sources": list(model_input.passage_sources),
            "ref_string": model_input.ref_string,
        }
        included = record["passages_used"]

    provenance = {
        "id": doc.doc_id,
        "retrieved": retrieved,
        "duplicates_suppressed": pool.duplicates_suppressed,
        "self_removed": [{"source": p.source, "id": p.passage_id} for p in dropped],
        "included": included,
    }
    return GroundedRecord(record=record, provenance=provenance)


def cmd_ground(config: RunConfig, out_path: str | Path) -> None:
    docs = load_dataset(config.dataset_path)
    indexes = _load_indexes(config)
    definition_stores = _load_definition_stores(config)

    def work(doc):
        try:
            return ground_document(doc, indexes, definition_stores, config)
        except Exception as exc:
            raise CorpusError(f"grounding failed for record {doc.doc_id!r}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(work, docs))  # map preserves input order

    out_path = Path(out_path)
    prov_path = out_path.with_suffix(out_path.suffix + ".provenance.jsonl")
    with open(out_path, "w", encoding="utf-8") as fh:
        for res in results:
            fh.write(json.dumps(res.record, ensure_ascii=False) + "\n")
    with open(prov_path, "w", encoding="utf-8") as fh:
        for res in results:
            fh.write(json.dumps(res.provenance, ensure_ascii=False) + "\n")
    logger.info("wrote %d records to %s", len(results), out_path)


# ----------------------------------------------------------------------- eval

_METRIC_NAMES = ("rouge1", "rouge2", "rougeL", "fkgl", "dcrs")


def _read_summaries(path: str | Path) -> dict[str, dict]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if "id" not in obj:
                raise CorpusError(f"{path}:{lineno}: record missing 'id'")
            text = obj.get("summary", obj.get("reference_summary"))
            if text is None:
                raise CorpusError(f"{path}:{lineno}: record {obj['id']!r} has no "
                                  f"'summary' or 'reference_summary'")
            out[str(obj["id"])] = {"summary": str(text), "subset": obj.get("subset")}
    return out


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.pstdev(values) if len(values) > 1 else 0.0
    return mean, std


def cmd_eval(generated_path: str | Path, references_path: str | Path,
             familiar: metrics.FamiliarWordList) -> dict:
    generated = _read_summaries(generated_path)
    references = _read_summaries(references_path)
    missing = sorted(set(references) - set(generated))
    extra = sorted(set(generated) - set(references))
    if missing or extra:
        raise CorpusError(f"id mismatch between generated and references: "
                          f"missing {missing}, unmatched {extra}")

    rows = []
    for doc_id in references:
        scores = metrics.score_summary(generated[doc_id]["summary"],
                                       references[doc_id]["summary"], familiar)
        row = {"id": doc_id, "subset": references[doc_id]["subset"]}
        row.update({name: getattr(scores, name) for name in _METRIC_NAMES})
        rows.append(row)

    aggregates = {}
    for name in _METRIC_NAMES:
        mean, std = _mean_std([r[name] for r in rows])
        aggregates[name] = {"mean": mean, "std": std}

    report = {"rows": rows, "aggregates": aggregates}

    # if records carry subsets, also report per-subset and macro averages
    subsets = sorted({r["subset"] for r in rows if r["subset"]})
    if subsets:
        by_subset = {}
        for subset in subsets:
            sub_rows = [r for r in rows if r["subset"] == subset]
            by_subset[subset] = {name: _mean_std([r[name] for r in sub_rows])[0]
                                 for name in _METRIC_NAMES}
        report["by_subset"] = by_subset
        report["macro_aggregates"] = {
            name: statistics.fmean(by_subset[s][name] for s in subsets)
            for name in _METRIC_NAMES}
    return report


# --------------------------------------------------------------------- report

def usage_stats(grounded_path: str | Path) -> dict[str, dict[str, float]]:
    """Per-corpus mean/std of passages included per document."""
    per_doc: list[dict[str, int]] = []
    sources: set[str] = set()
    with open(grounded_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            counts: dict[str, int] = {}
            for source in obj.get("passage_sources", []):
                counts[source] = counts.get(source, 0) + 1
            sources.update(counts)
            per_doc.append(counts)
    stats = {}
    for source in sorted(sources):
        values = [float(counts.get(source, 0)) for counts in per_doc]
        mean, std = _mean_std(values)
        stats[source] = {"mean": mean, "std": std}
    return stats


def format_report(report: dict, usage: dict[str, dict[str, float]] | None,
                  label: str = "run") -> str:
    lines = []
    header = f"{'':<16}" + "".join(f"{m:>10}" for m in ("DCRS", "FKGL", "rouge1", "rouge2", "rougeL"))
    lines.append(header)
    agg = report["aggregates"]
    row = (f"{label:<16}" + f"{agg['dcrs']['mean']:>10.2f}" + f"{agg['fkgl']['mean']:>10.2f}"
           + "".join(f"{agg[m]['mean'] * 100:>10.2f}" for m in ("rouge1", "rouge2", "rougeL")))
    lines.append(row)
    if "macro_aggregates" in report:
        macro = report["macro_aggregates"]
        lines.append(f"{label + ' (macro)':<16}" + f"{macro['dcrs']:>10.2f}"
                     + f"{macro['fkgl']:>10.2f}"
                     + "".join(f"{macro[m] * 100:>10.2f}" for m in ("rouge1", "rouge2", "rougeL")))
    if usage:
        lines.append("")
        lines.append(f"{'Source':<16}{'Mean':>10}{'STD':>10}")
        for source, stat in usage.items():
            lines.append(f"{source:<16}{stat['mean']:>10.2f}{stat['std']:>10.2f}")
    return "\n".join(lines)


def cmd_report(report_path: str | Path, grounded_path: str | Path | None,
               out_path: str | Path | None, label: str = "run") -> str:
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    usage = usage_stats(grounded_path) if grounded_path else None
    text = format_report(report, usage, label=label)
    if out_path:
        machine = dict(report)
        if usage is not None:
            machine["usage"] = usage
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(machine, fh, ensure_ascii=False, indent=2)
    return text


# ----------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundsum",
        description="Grounding pipeline and evaluation harness for lay summarization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("build-index", help="build BM25 indexes for searchable corpora")
    p_index.add_argument("--config", required=True)

    p_ground = sub.add_parser("ground", help="run retrieval, re-ranking, and input assembly")
    p_ground.add_argument("--config", required=True)
    p_ground.add_argument("--mode", choices=[MODE_FINETUNE, MODE_ZERO_SHOT])
    p_ground.add_argument("--scorer", choices=["lexical", "remote"])
    p_ground.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="score generated summaries against references")
    p_eval.add_argument("--generated", required=True)
    p_eval.add_argument("--references", required=True)
    p_eval.add_argument("--familiar-words", help="familiar-word list (defaults to bundled list)")
    p_eval.add_argument("--out", required=True, help="machine-readable report (JSON)")

    p_report = sub.add_parser("report", help="format evaluation and usage tables")
    p_report.add_argument("--report", required=True, help="JSON report from eval")
    p_report.add_argument("--grounded", help="grounded-input file for usage statistics")
    p_report.add_argument("--out", help="machine-readable combined report (JSON)")
    p_report.add_argument("--label", default="run")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    try:
        if args.command == "build-index":
            cmd_build_index(load_config(args.config))
        elif args.command == "ground":
            config = load_config(args.config, mode_override=args.mode,
                                 scorer_override=args.scorer)
            cmd_ground(config, args.out)
        elif args.command == "eval":
            familiar = (metrics.load_familiar_words(args.familiar_words)
                        if args.familiar_words else metrics.default_familiar_words())
            report = cmd_eval(args.generated, args.references, familiar)
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(report, fh, ensure_ascii=False, indent=2)
            print(format_report(report, usage=None))
        elif args.command == "report":
            print(cmd_report(args.report, args.grounded, args.out, label=args.label))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, RemoteScorerError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
