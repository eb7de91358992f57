"""Run configuration: one INI document with every default stated explicitly."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .decompose import DecompositionCache, DecompositionClient
from .embedding import (DeterministicFallbackProvider, EmbeddingProvider,
                        PrecomputedStoreProvider, RemoteServiceProvider)


@dataclass
class RunConfig:
    # [corpus]
    row_limit: int = 3
    type_threshold: float = 0.95
    # [pool]
    pool_size: int = 20
    coarse_source: str = "auto"  # auto | pass-through | cosine
    ks: tuple[int, ...] = (2, 5, 10)
    # [mip]
    alpha: float = 1.0
    time_limit_seconds: float = 10.0
    edge_epsilon: float = 0.0
    engine: str = "auto"  # auto | structure | bnb
    fallback_policy: str = "top-coarse"  # top-coarse | error
    workers: int = 1
    # [weights]
    header_weight: float = 0.5
    table_name_weight: float = 0.25
    other_columns_weight: float = 0.25
    coarse_term: float = 1.0
    fine_term: float = 1.0
    compatibility_term: float = 1.0
    rescale_terms: bool = False
    # [providers]
    embedding_provider: str = "deterministic-fallback"
    embedding_dimension: int = 64
    embedding_seed: int = 13
    embedding_store: str = ""
    embedding_url: str = ""
    embedding_batch_size: int = 32
    decomposition_client: str = "none"  # none | cache-only | remote-llm
    decomposition_cache: str = ""
    llm_model: str = "gpt-3.5-turbo"
    llm_temperature: float = 0.0

    @property
    def segment_weights(self) -> tuple[float, float, float]:
        return (self.header_weight, self.table_name_weight, self.other_columns_weight)

    @property
    def term_weights(self) -> tuple[float, float, float]:
        return (self.coarse_term, self.fine_term, self.compatibility_term)


_SECTIONS = {
    "corpus": ("row_limit", "type_threshold"),
    "pool": ("pool_size", "coarse_source", "ks"),
    "mip": ("alpha", "time_limit_seconds", "edge_epsilon", "engine",
            "fallback_policy", "workers"),
    "weights": ("header_weight", "table_name_weight", "other_columns_weight",
                "coarse_term", "fine_term", "compatibility_term", "rescale_terms"),
    "providers": ("embedding_provider", "embedding_dimension", "embedding_seed",
                  "embedding_store", "embedding_url", "embedding_batch_size",
                  "decomposition_client", "decomposition_cache", "llm_model",
                  "llm_temperature"),
}


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def config_text(config: RunConfig | None = None) -> str:
    config = config or RunConfig()
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_format_value(getattr(config, key))}")
        lines.append("")
    return "\n".join(lines)


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(config_text(config), encoding="utf-8")


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    with Path(path).open(encoding="utf-8") as handle:
        parser.read_file(handle)
    config = RunConfig()
    types = {f.name: f.type for f in fields(RunConfig)}
    for section, keys in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key in keys:
            if not parser.has_option(section, key):
                continue
            raw = parser.get(section, key)
            if key == "ks":
                value = tuple(int(v.strip()) for v in raw.split(",") if v.strip())
            elif types[key] == "int":
                value = int(raw)
            elif types[key] == "float":
                value = float(raw)
            elif types[key] == "bool":
                value = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                value = raw
            setattr(config, key, value)
    return config


def make_embedding_provider(config: RunConfig) -> EmbeddingProvider:
    kind = config.embedding_provider
    if kind == "deterministic-fallback":
        return DeterministicFallbackProvider(config.embedding_dimension,
                                             config.embedding_seed)
    if kind == "precomputed-store":
        if not config.embedding_store:
            raise ValueError("precomputed-store provider needs embedding_store")
        return PrecomputedStoreProvider(config.embedding_store)
    if kind == "remote-service":
        return RemoteServiceProvider(config.embedding_dimension,
                                     base_url=config.embedding_url or None,
                                     batch_size=config.embedding_batch_size)
    raise ValueError(f"unknown embedding provider {kind!r}")


def make_decomposition_source(config: RunConfig):
    """Returns (client or None, cache or None) per the configured mode."""
    cache = DecompositionCache(config.decomposition_cache) \
        if config.decomposition_cache else None
    kind = config.decomposition_client
    if kind == "none":
        return None, cache
    if kind in ("cache-only", "remote-llm"):
        client = DecompositionClient(kind=kind, model=config.llm_model,
                                     temperature=config.llm_temperature)
        return client, cache
    raise ValueError(f"unknown decomposition client {kind!r}")
