import json
import random

import pytest
import yaml

from groundsum import corpus

WORDS = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "theta", "lambda",
    "sigma", "omega", "protein", "gene", "cell", "enzyme", "receptor",
    "pathway", "signal", "membrane", "nucleus", "tissue", "antibody",
    "genome", "mutation", "binding", "kinase", "ligand", "vector", "plasmid",
    "neuron", "synapse", "cortex", "hormone", "glucose", "lipid", "peptide",
    "ribosome", "chromosome", "transcription", "translation", "replication",
]


def make_sentence(rng: random.Random, n_words: int | None = None) -> str:
    n = n_words or rng.randint(5, 9)
    words = [rng.choice(WORDS) for _ in range(n)]
    return words[0].capitalize() + " " + " ".join(words[1:]) + "."


def make_text(rng: random.Random, n_sentences: int) -> str:
    return " ".join(make_sentence(rng) for _ in range(n_sentences))


def build_synthetic_world(root, n_docs: int = 20, seed: int = 7):
    """Dataset + three grounding corpora (wiki, abstracts, definitions) on disk."""
    rng = random.Random(seed)
    root.mkdir(parents=True, exist_ok=True)

    docs = []
    for i in range(n_docs):
        article = make_text(rng, 10)
        abstract = " ".join(article.split(". ")[:3])
        if not abstract.endswith("."):
            abstract += "."
        docs.append({
            "id": f"doc{i:02d}",
            "title": f"Study of {rng.choice(WORDS)} {rng.choice(WORDS)}",
            "first_author_surname": rng.choice(["Parks", "Li", "Okafor", "Mendez", "Sato"]),
            "year": rng.randint(1990, 2023),
            "article": article,
            "abstract": abstract,
            "reference_summary": make_text(rng, 4),
        })
    dataset_path = root / "dataset.jsonl"
    with open(dataset_path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(d) + "\n")

    # wiki: chunked long documents
    wiki = []
    for w in range(8):
        wiki.extend(corpus.chunk_document(f"wiki{w}", f"Wiki {w}", make_text(rng, 13),
                                          sentences_per_chunk=6, source="wiki"))
    corpus.write_passages(root / "wiki.jsonl", wiki)

    # abstracts: every dataset document's own abstract plus unrelated ones
    abstracts = [corpus.Passage(passage_id=f"abs-{d['id']}", source="abstracts",
                                title=d["title"], text=d["abstract"],
                                origin_doc_id=d["id"]) for d in docs]
    abstracts += [corpus.Passage(passage_id=f"abs-x{j}", source="abstracts", title="",
                                 text=make_text(rng, 3)) for j in range(10)]
    corpus.write_passages(root / "abstracts.jsonl", abstracts)

    with open(root / "definitions.jsonl", "w", encoding="utf-8") as fh:
        for term in ["protein", "gene", "kinase", "membrane receptor", "signal pathway"]:
            fh.write(json.dumps({"term": term,
                                 "definition": f"{term.capitalize()} is defined here for test purposes."}) + "\n")

    config = {
        "dataset": "dataset.jsonl",
        "index_dir": "indexes",
        "corpora": [
            {"name": "wiki", "kind": "searchable", "path": "wiki.jsonl"},
            {"name": "abstracts", "kind": "searchable", "path": "abstracts.jsonl"},
            {"name": "definitions", "kind": "definitional", "path": "definitions.jsonl"},
        ],
        "budgets": {"lead": 64, "doc": 128, "grounding": 96},
        "scorer": {"kind": "lexical"},
        "mode": "finetune-input",
        "bm25": {"k1": 0.9, "b": 0.4},
        "workers": 4,
    }
    config_path = root / "config.yaml"
    with open(config_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config, fh)
    return {"config": config_path, "dataset": dataset_path, "docs": docs}


@pytest.fixture
def synthetic_world(tmp_path):
    return build_synthetic_world(tmp_path / "world")
