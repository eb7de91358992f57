"""Synthetic benchmark suite: normalized databases with a joinable gold chain
and a high-scoring but unjoinable decoy set, mirroring the failure mode where
a base retriever top-ranks tables that cannot be joined."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Column, Table, TableCorpus
from .decompose import escape_field, render_tags
from .evaluate import EvalDataset, EvalQuery
from .relevance import CandidatePool

CONCEPTS = [
    "client", "account", "loan", "card", "order", "product", "supplier",
    "shipment", "student", "course", "teacher", "school", "patient", "visit",
    "doctor", "movie", "actor", "review", "flight", "airport", "booking",
    "station", "trip", "vendor", "invoice", "payment", "region", "store",
    "employee", "project",
]
ATTRIBUTES = [
    "name", "status", "category", "amount", "balance", "grade", "rating",
    "duration", "capacity", "city", "country", "level", "type", "year", "size",
]
LINK_WORDS = ["assignment", "enrollment", "register", "ledger", "bridge",
              "mapping", "history", "log"]
DECOY_WORDS = ["overview", "summary", "report", "digest", "archive", "snapshot"]
VALUE_WORDS = ["alpha", "beta", "gamma", "delta", "east", "west", "north",
               "south", "prime", "basic", "extended", "local", "remote"]


@dataclass
class SyntheticSuite:
    corpus: TableCorpus
    queries: list[EvalQuery]
    base_scores: dict[str, list[tuple[str, float]]]
    decompositions: dict[str, str]  # query text -> raw tag string
    decoys: dict[str, frozenset[str]] = field(default_factory=dict)
    chains: dict[str, tuple[str, str, str]] = field(default_factory=dict)


def _entity_table(name: str, concept: str, attribute: str, ids: list[str],
                  rng: random.Random) -> Table:
    return Table(name=name, columns=[
        Column(header=f"{concept}_id", declared_type="integer", values=tuple(ids)),
        Column(header=attribute, declared_type="text",
               values=tuple(rng.choice(VALUE_WORDS) for _ in ids)),
    ])


def _link_table(name: str, concept_a: str, ids_a: list[str], concept_c: str,
                ids_c: list[str], rng: random.Random) -> Table:
    rows = max(len(ids_a), len(ids_c)) + 3
    left = [rng.choice(ids_a) for _ in range(rows)]
    left[1] = left[0]  # the referencing side must repeat values
    right = [rng.choice(ids_c) for _ in range(rows)]
    return Table(name=name, columns=[
        Column(header=f"{concept_a}_id", declared_type="integer", values=tuple(left)),
        Column(header=f"{concept_c}_id", declared_type="integer", values=tuple(right)),
        Column(header="recorded_year", declared_type="integer",
               values=tuple(str(rng.randint(2001, 2020)) for _ in range(rows))),
    ])


def _decoy_table(name: str, words: list[str]) -> Table:
    # Zero rows keep every decoy column at uniqueness 0, so decoy-decoy
    # compatibility is exactly zero and the decoy set can never be connected.
    return Table(name=name, columns=[
        Column(header=w, declared_type="text", values=()) for w in words
    ])


def _filler_table(name: str, concept: str, rng: random.Random) -> Table:
    rows = rng.randint(3, 6)
    return Table(name=name, columns=[
        Column(header=f"{concept}_code", declared_type="text",
               values=tuple(f"{concept[:2]}{rng.randint(100, 999)}" for _ in range(rows))),
        Column(header=rng.choice(ATTRIBUTES), declared_type="text",
               values=tuple(rng.choice(VALUE_WORDS) for _ in range(rows))),
    ])


def generate_suite(databases: int = 50, seed: int = 7) -> SyntheticSuite:
    rng = random.Random(seed)
    tables: list[Table] = []
    queries: list[EvalQuery] = []
    base_scores: dict[str, list[tuple[str, float]]] = {}
    decompositions: dict[str, str] = {}
    decoys: dict[str, frozenset[str]] = {}
    chains: dict[str, tuple[str, str, str]] = {}

    for d in range(databases):
        prefix = f"db{d:03d}_"
        concept_a, concept_c, filler_1, filler_2, filler_3 = rng.sample(CONCEPTS, 5)
        attr_a, attr_c = rng.sample(ATTRIBUTES, 2)
        link_word = rng.choice(LINK_WORDS)

        ids_a = [str(i) for i in range(1, rng.randint(5, 9))]
        ids_c = [str(i) for i in range(1, rng.randint(4, 8))]
        name_a = f"{prefix}{concept_a}"
        name_b = f"{prefix}{concept_a}_{link_word}"
        name_c = f"{prefix}{concept_c}"
        table_a = _entity_table(name_a, concept_a, attr_a, ids_a, rng)
        table_b = _link_table(name_b, concept_a, ids_a, concept_c, ids_c, rng)
        table_c = _entity_table(name_c, concept_c, attr_c, ids_c, rng)

        decoy_word_1, decoy_word_2 = rng.sample(DECOY_WORDS, 2)
        name_d1 = f"{prefix}{concept_a}_{decoy_word_1}"
        name_d2 = f"{prefix}{concept_c}_{decoy_word_2}"
        decoy_1 = _decoy_table(name_d1, [f"{concept_a} {attr_a}", decoy_word_1])
        decoy_2 = _decoy_table(name_d2, [f"{concept_c} {attr_c}", decoy_word_2])

        fillers = [
            _filler_table(f"{prefix}{filler}", filler, rng)
            for filler in (filler_1, filler_2, filler_3)
        ]
        tables.extend([table_a, table_b, table_c, decoy_1, decoy_2, *fillers])

        qid = f"q{d:03d}"
        text = (f"Which {concept_a} entries with their {attr_a} are linked to "
                f"{concept_c} entries with their {attr_c}?")
        gold = frozenset({name_a, name_b, name_c})
        queries.append(EvalQuery(qid=qid, text=text, gold=gold))
        decompositions[text] = render_tags(
            (f"{concept_a}:{attr_a}", f"{concept_c}:{attr_c}"))
        decoys[qid] = frozenset({name_d1, name_d2})
        chains[qid] = (name_a, name_b, name_c)

        scores = [
            (name_d1, round(rng.uniform(0.90, 0.97), 6)),
            (name_d2, round(rng.uniform(0.86, 0.90), 6)),
            (name_a, round(rng.uniform(0.55, 0.80), 6)),
            (name_b, round(rng.uniform(0.55, 0.80), 6)),
            (name_c, round(rng.uniform(0.55, 0.80), 6)),
        ]
        scores.extend((f.name, round(rng.uniform(0.10, 0.40), 6)) for f in fillers)
        base_scores[qid] = scores

    corpus = TableCorpus.from_tables(tables)
    return SyntheticSuite(corpus=corpus, queries=queries, base_scores=base_scores,
                          decompositions=decompositions, decoys=decoys, chains=chains)


def suite_dataset(suite: SyntheticSuite) -> EvalDataset:
    return EvalDataset(queries=suite.queries, corpus=suite.corpus)


def suite_pools(suite: SyntheticSuite, pool_size: int = 20) -> dict[str, CandidatePool]:
    pools = {}
    lookup = {q.qid: q for q in suite.queries}
    for qid, scored in suite.base_scores.items():
        pools[qid] = CandidatePool.build(
            lookup[qid].text,
            [(suite.corpus.get(name), score) for name, score in scored],
            pool_size)
    return pools


def corpus_to_json(corpus: TableCorpus) -> str:
    payload = [
        {
            "name": table.name,
            "columns": [{"header": c.header, "type": c.declared_type}
                        for c in table.columns],
            "rows": [list(row) for row in table.rows],
        }
        for table in corpus
    ]
    return json.dumps(payload, indent=1, sort_keys=True)


def write_suite(suite: SyntheticSuite, directory) -> dict[str, Path]:
    """Write corpus, dataset, base scores and the decomposition cache to disk."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": directory / "corpus.json",
        "dataset": directory / "dataset.tsv",
        "base_scores": directory / "base_scores.tsv",
        "decomp_cache": directory / "decomp_cache.tsv",
    }
    paths["corpus"].write_text(corpus_to_json(suite.corpus), encoding="utf-8")

    dataset_lines = [
        f"{q.qid}\t{q.text}\t" + ";".join(sorted(q.gold)) for q in suite.queries
    ]
    paths["dataset"].write_text("\n".join(dataset_lines) + "\n", encoding="utf-8")

    score_lines = [
        f"{qid}\t{name}\t{score}"
        for qid in sorted(suite.base_scores)
        for name, score in suite.base_scores[qid]
    ]
    paths["base_scores"].write_text("\n".join(score_lines) + "\n", encoding="utf-8")

    cache_lines = [
        f"{escape_field(text)}\t{escape_field(tags)}"
        for text, tags in sorted(suite.decompositions.items())
    ]
    paths["decomp_cache"].write_text("\n".join(cache_lines) + "\n", encoding="utf-8")
    return paths
