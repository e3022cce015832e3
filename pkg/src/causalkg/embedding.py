"""Text embedders and a cosine nearest-neighbour index over reference concepts."""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np


class Embedder(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class HashEmbedder:
    """Deterministic offline embedder: signed feature hashing of character
    trigrams and word tokens. Similar spellings land close together, which is
    all the retrieval stage needs in tests and offline runs."""

    def __init__(self, dim: int = 256):
        self.dim = dim

    def _features(self, text: str) -> list[str]:
        t = re.sub(r"\s+", " ", text.casefold()).strip()
        padded = f"  {t}  "
        feats = [padded[i : i + 3] for i in range(len(padded) - 2)]
        feats += ["w:" + w for w in t.split()]
        return feats

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for f in self._features(text):
                h = int.from_bytes(hashlib.blake2b(f.encode("utf-8"), digest_size=8).digest(), "little")
                out[row, h % self.dim] += 1.0 if (h >> 63) & 1 else -1.0
        return out


class SentenceTransformerEmbedder:
    """Wrapper around a sentence-transformers model (imported lazily)."""

    def __init__(self, model_name: str = "intfloat/e5-base-v2", prefix: str = "query: "):
        from sentence_transformers import SentenceTransformer

        self.model = SentenceTransformer(model_name)
        self.prefix = prefix
        self.dim = int(self.model.get_sentence_embedding_dimension())

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self.model.encode([self.prefix + t for t in texts]), dtype=np.float64)


def _normalize(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return m / norms


class EmbeddingIndex:
    """Unit-normalised vectors for every reference concept, searched by cosine.

    Names are held in sorted order and ranking uses a stable sort, so equal
    scores are broken lexicographically.
    """

    def __init__(self, names: Sequence[str], embedder: Embedder):
        self.names = sorted(set(names))
        self.embedder = embedder
        self.vectors = _normalize(embedder.embed(self.names)) if self.names else np.zeros((0, embedder.dim))

    def __len__(self) -> int:
        return len(self.names)

    def search_many(self, queries: Sequence[str], k: int) -> list[list[tuple[str, float]]]:
        if not queries:
            return []
        q = _normalize(self.embedder.embed(list(queries)))
        scores = q @ self.vectors.T
        k = min(k, len(self.names))
        out = []
        for row in scores:
            order = np.argsort(-row, kind="stable")[:k]
            out.append([(self.names[i], float(row[i])) for i in order])
        return out

    def search(self, query: str, k: int) -> list[tuple[str, float]]:
        return self.search_many([query], k)[0]
