"""Dense text encodings behind a provider abstraction, plus cosine similarity."""

from __future__ import annotations

import hashlib
import os
import threading
import time
from pathlib import Path

import numpy as np
import requests

from .errors import MissingEmbeddingError, ParseError, TransportError

REMOTE_URL_ENV = "JOINRANK_EMBED_URL"
REMOTE_TOKEN_ENV = "JOINRANK_EMBED_TOKEN"


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Standard cosine similarity; rejects mismatched dimensions and zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine is undefined for zero vectors")
    return float(np.dot(a, b) / (norm_a * norm_b))


class EmbeddingProvider:
    """Caching base class: one text always resolves to one vector per instance."""

    kind = "abstract"

    def __init__(self, dimension: int):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = int(dimension)
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        key = text_hash(text)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        vector = np.asarray(self._resolve(text), dtype=np.float32)
        if vector.shape != (self.dimension,):
            raise ValueError(f"provider returned shape {vector.shape}, "
                             f"expected ({self.dimension},)")
        vector.setflags(write=False)
        with self._lock:
            self._cache.setdefault(key, vector)
        return self._cache[key]

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]

    def _resolve(self, text: str) -> np.ndarray:
        raise NotImplementedError


class DeterministicFallbackProvider(EmbeddingProvider):
    """Hashed character trigram encoder.

    Exists so the full pipeline runs offline and deterministically; it makes no
    claim to the quality of a trained encoder.
    """

    kind = "deterministic-fallback"

    def __init__(self, dimension: int = 64, seed: int = 13):
        super().__init__(dimension)
        self.seed = int(seed)
        self._salt = self.seed.to_bytes(8, "big", signed=False)

    def _resolve(self, text: str) -> np.ndarray:
        padded = "  " + " ".join(text.split()).casefold() + "  "
        acc = np.zeros(self.dimension, dtype=np.float64)
        for i in range(len(padded) - 2):
            gram = padded[i : i + 3]
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8,
                                     salt=self._salt).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if digest[0] & 1 else -1.0
            acc[value % self.dimension] += sign
        norm = float(np.linalg.norm(acc))
        if norm == 0.0:
            fallback_index = int(hashlib.blake2b(text.encode("utf-8"), digest_size=8,
                                                 salt=self._salt).hexdigest(), 16)
            acc[fallback_index % self.dimension] = 1.0
            norm = 1.0
        return (acc / norm).astype(np.float32)


class PrecomputedStoreProvider(EmbeddingProvider):
    """Serves vectors from a store file written by an external encoder."""

    kind = "precomputed-store"

    def __init__(self, path):
        self.path = Path(path)
        store, dimension = self._read_store(self.path)
        super().__init__(dimension)
        self._store = store

    @staticmethod
    def _read_store(path: Path) -> tuple[dict[str, np.ndarray], int]:
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("dimension="):
            raise ParseError("store must start with a 'dimension=<d>' header",
                             source=str(path), line=1)
        dimension = int(lines[0].split("=", 1)[1])
        store: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dimension + 1:
                raise ParseError(f"expected hash plus {dimension} values",
                                 source=str(path), line=lineno)
            store[fields[0]] = np.array([float(v) for v in fields[1:]], dtype=np.float32)
        return store, dimension

    def _resolve(self, text: str) -> np.ndarray:
        key = text_hash(text)
        if key not in self._store:
            raise MissingEmbeddingError(key)
        return self._store[key]


def write_store(path, dimension: int, vectors_by_text: dict[str, np.ndarray]) -> None:
    """Write a precomputed store file keyed by text hash."""
    lines = [f"dimension={dimension}"]
    for text in sorted(vectors_by_text):
        vector = np.asarray(vectors_by_text[text], dtype=np.float32)
        lines.append(text_hash(text) + " " + " ".join(repr(float(v)) for v in vector))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class RemoteServiceProvider(EmbeddingProvider):
    """Batched HTTP encoder: POST {"texts": [...]} -> {"vectors": [[...]]}."""

    kind = "remote-service"

    def __init__(self, dimension: int, base_url: str | None = None,
                 token_env: str = REMOTE_TOKEN_ENV, batch_size: int = 32,
                 max_retries: int = 3, timeout: float = 30.0):
        super().__init__(dimension)
        self.base_url = base_url or os.environ.get(REMOTE_URL_ENV, "")
        if not self.base_url:
            raise ValueError(f"remote provider needs a base URL (or {REMOTE_URL_ENV})")
        self.token_env = token_env
        self.batch_size = int(batch_size)
        self.max_retries = int(max_retries)
        self.timeout = timeout

    def _headers(self) -> dict[str, str]:
        token = os.environ.get(self.token_env, "")
        return {"Authorization": f"Bearer {token}"} if token else {}

    def _request(self, texts: list[str]) -> list[np.ndarray]:
        attempts = 0
        last_error = "no attempt made"
        while attempts < self.max_retries:
            attempts += 1
            try:
                response = requests.post(self.base_url, json={"texts": texts},
                                         headers=self._headers(), timeout=self.timeout)
                if response.status_code != 200:
                    last_error = f"HTTP {response.status_code}"
                else:
                    vectors = response.json()["vectors"]
                    if len(vectors) != len(texts):
                        raise TransportError("service returned wrong vector count", attempts)
                    return [np.asarray(v, dtype=np.float32) for v in vectors]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = str(exc) or type(exc).__name__
            time.sleep(0.05 * attempts)
        raise TransportError(f"embedding service failed: {last_error}", attempts)

    def _resolve(self, text: str) -> np.ndarray:
        return self._request([text])[0]

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        missing = []
        for text in texts:
            if not text.strip():
                raise ValueError("cannot embed empty text")
            if text_hash(text) not in self._cache and text not in missing:
                missing.append(text)
        for start in range(0, len(missing), self.batch_size):
            batch = missing[start : start + self.batch_size]
            for text, vector in zip(batch, self._request(batch)):
                if vector.shape != (self.dimension,):
                    raise ValueError("service returned a vector of the wrong dimension")
                vector.setflags(write=False)
                with self._lock:
                    self._cache.setdefault(text_hash(text), vector)
        return [self._cache[text_hash(t)] for t in texts]
