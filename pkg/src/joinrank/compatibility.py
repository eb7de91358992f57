"""Join compatibility between columns: instance overlap, schema similarity and
key/foreign-key likelihood, combined per column pair."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ColumnProfile, GoldConstraintSet, Table, TableCorpus
from .embedding import EmbeddingProvider, cosine
from .errors import ParseError
from .relevance import CandidatePool

DEFAULT_SEGMENT_WEIGHTS = (0.5, 0.25, 0.25)  # header, table name, other columns

# Pair of (table, column-index) refs with the lexicographically smaller ref first.
PairKey = tuple[tuple[str, int], tuple[str, int]]


def pair_key(a: tuple[str, int], b: tuple[str, int]) -> PairKey:
    return (a, b) if a <= b else (b, a)


def instance_jaccard(a: ColumnProfile, b: ColumnProfile) -> float:
    """Exact-match overlap of the distinct normalized value sets; both empty -> 0."""
    union = a.distinct_values | b.distinct_values
    if not union:
        return 0.0
    return len(a.distinct_values & b.distinct_values) / len(union)


def schema_similarity(provider: EmbeddingProvider, a: tuple[str, str, str],
                      b: tuple[str, str, str],
                      weights: tuple[float, float, float] = DEFAULT_SEGMENT_WEIGHTS) -> float:
    """Weighted per-segment cosine over (header, table name, other columns).

    An empty segment on either side contributes zero for that segment.
    """
    if any(w < 0 for w in weights):
        raise ValueError("segment weights must be non-negative")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("segment weights must sum to 1")
    total = 0.0
    for weight, seg_a, seg_b in zip(weights, a, b):
        if weight == 0.0 or not seg_a.strip() or not seg_b.strip():
            continue
        total += weight * cosine(provider.embed(seg_a), provider.embed(seg_b))
    return total


_NUMERIC = {"integer", "real"}


def _types_incompatible(a: str, b: str) -> bool:
    # Only hard mismatches (numeric vs date) zero the instance overlap; text and
    # unknown stay wildcards because normalization may hide real compatibility.
    class_a = "numeric" if a in _NUMERIC else a
    class_b = "numeric" if b in _NUMERIC else b
    return {class_a, class_b} == {"numeric", "date"}


def compatibility_score(provider: EmbeddingProvider, a: ColumnProfile, b: ColumnProfile,
                        weights: tuple[float, float, float] = DEFAULT_SEGMENT_WEIGHTS) -> float:
    """(schema similarity + instance overlap) scaled by the key/foreign-key factor.

    The factor is max of the two uniqueness ratios: a legal join needs at least
    one side to look like a primary key. Clamped below at zero.
    """
    overlap = 0.0 if _types_incompatible(a.declared_type, b.declared_type) \
        else instance_jaccard(a, b)
    schema = schema_similarity(provider, a.segments, b.segments, weights)
    return max(0.0, (schema + overlap) * max(a.uniqueness, b.uniqueness))


@dataclass
class CompatibilityGraph:
    """Per-pool column-pair compatibility; symmetric, stored once per unordered pair."""

    table_names: tuple[str, ...]
    scores: dict[PairKey, float]
    best_pairs: dict[tuple[str, str], tuple[int, int, float]] = field(default_factory=dict)

    def score(self, a: tuple[str, int], b: tuple[str, int]) -> float:
        return self.scores.get(pair_key(a, b), 0.0)

    def best_pair(self, name_a: str, name_b: str) -> tuple[int, int, float] | None:
        """Highest-scoring column pair between two tables as (col_a, col_b, score)."""
        if name_a > name_b:
            found = self.best_pairs.get((name_b, name_a))
            return (found[1], found[0], found[2]) if found else None
        return self.best_pairs.get((name_a, name_b))


def compute_best_pairs(scores: dict[PairKey, float]) -> dict[tuple[str, str], tuple[int, int, float]]:
    best: dict[tuple[str, str], tuple[int, int, float]] = {}
    for ((name_a, col_a), (name_b, col_b)), value in sorted(scores.items()):
        key = (name_a, name_b)
        current = best.get(key)
        # Ties resolved toward lower column indices; iteration order is canonical.
        if current is None or value > current[2]:
            best[key] = (col_a, col_b, value)
    return best


def build_compatibility_graph(pool: CandidatePool,
                              profiles: dict[tuple[str, int], ColumnProfile],
                              provider: EmbeddingProvider,
                              gold: GoldConstraintSet | None = None,
                              weights: tuple[float, float, float] = DEFAULT_SEGMENT_WEIGHTS,
                              cache: dict[PairKey, float] | None = None) -> CompatibilityGraph:
    """Score every cross-table column pair in the pool; gold pairs override to 1."""
    names = tuple(sorted(table.name for table in pool.tables))
    tables = {table.name: table for table in pool.tables}
    scores: dict[PairKey, float] = {}
    for i, name_a in enumerate(names):
        for name_b in names[i + 1 :]:
            for col_a in range(len(tables[name_a].columns)):
                for col_b in range(len(tables[name_b].columns)):
                    key = pair_key((name_a, col_a), (name_b, col_b))
                    if gold is not None and gold.covers(*key):
                        scores[key] = 1.0
                        continue
                    if cache is not None and key in cache:
                        scores[key] = cache[key]
                        continue
                    value = compatibility_score(
                        provider, profiles[key[0]], profiles[key[1]], weights)
                    scores[key] = value
                    if cache is not None:
                        cache[key] = value
    return CompatibilityGraph(table_names=names, scores=scores,
                              best_pairs=compute_best_pairs(scores))


def _column_hash(table: Table, column_index: int) -> str:
    col = table.columns[column_index]
    digest = hashlib.sha256()
    digest.update(table.name.encode("utf-8") + b"\x1e")
    digest.update(col.header.encode("utf-8") + b"\x1f")
    for value in col.values:
        digest.update(value.encode("utf-8") + b"\x1f")
    return digest.hexdigest()


def save_score_cache(path, corpus: TableCorpus, scores: dict[PairKey, float]) -> None:
    """Persist pair scores keyed by column content hashes, tied to the corpus hash."""
    hashes = {
        (table.name, k): _column_hash(table, k)
        for table in corpus for k in range(len(table.columns))
    }
    lines = [f"corpus={corpus.content_hash()}"]
    for (ref_a, ref_b), value in sorted(scores.items()):
        lines.append(f"{hashes[ref_a]} {hashes[ref_b]} {repr(float(value))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_score_cache(path, corpus: TableCorpus) -> dict[PairKey, float]:
    """Reload a pair-score cache; a corpus hash mismatch yields an empty cache."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("corpus="):
        raise ParseError("score cache must start with 'corpus=<hash>'",
                         source=str(path), line=1)
    if lines[0].split("=", 1)[1] != corpus.content_hash():
        return {}
    by_hash: dict[str, tuple[str, int]] = {}
    for table in corpus:
        for k in range(len(table.columns)):
            by_hash[_column_hash(table, k)] = (table.name, k)
    cache: dict[PairKey, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError("expected 'hash hash score'", source=str(path), line=lineno)
        ref_a, ref_b = by_hash.get(fields[0]), by_hash.get(fields[1])
        if ref_a is None or ref_b is None:
            continue
        cache[pair_key(ref_a, ref_b)] = float(fields[2])
    return cache
