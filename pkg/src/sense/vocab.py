"""Word vocabulary, frequency subsampling and unigram noise tables."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .graph import NodeDocs


@dataclass(frozen=True)
class Vocab:
    """Global word table. Ids are dense and ordered by descending count."""

    tokens: tuple[str, ...]
    counts: np.ndarray
    keep_prob: np.ndarray

    def __post_init__(self):
        if len(self.tokens) != len(self.counts) or len(self.tokens) != len(self.keep_prob):
            raise ValueError("tokens, counts and keep_prob must align")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if np.any(self.keep_prob < 0) or np.any(self.keep_prob > 1):
            raise ValueError("keep_prob must lie in [0, 1]")

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self):
        return len(self.tokens)

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    @property
    def token_to_id(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}


def subsample_keep_prob(counts: np.ndarray, t: float) -> np.ndarray:
    freq = counts / counts.sum()
    return np.minimum(1.0, (np.sqrt(freq / t) + 1.0) * t / freq)


def build_vocab(docs: NodeDocs, min_count: int = 5, subsample_t: float = 1e-4) -> Vocab:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if subsample_t <= 0:
        raise ValueError("subsample_t must be > 0")
    counter = Counter(tok for doc in docs.docs for tok in doc)
    kept = sorted(
        ((tok, c) for tok, c in counter.items() if c >= min_count),
        key=lambda item: (-item[1], item[0]),
    )
    if not kept:
        raise ValueError(f"vocabulary is empty after pruning words seen < {min_count} times")
    tokens = tuple(tok for tok, _ in kept)
    counts = np.array([c for _, c in kept], dtype=np.int64)
    return Vocab(tokens, counts, subsample_keep_prob(counts, subsample_t))


@dataclass(frozen=True)
class EncodedDocs:
    seqs: tuple[np.ndarray, ...]

    @property
    def word_counts(self) -> np.ndarray:
        """Per-node number of in-vocabulary words (w_v)."""
        return np.array([len(s) for s in self.seqs], dtype=np.int64)

    def __len__(self):
        return len(self.seqs)


def encode_docs(docs: NodeDocs, vocab: Vocab) -> EncodedDocs:
    lookup = vocab.token_to_id
    return EncodedDocs(
        tuple(
            np.array([lookup[t] for t in doc if t in lookup], dtype=np.int64)
            for doc in docs.docs
        )
    )


def decode_docs(encoded: EncodedDocs, vocab: Vocab) -> NodeDocs:
    return NodeDocs(tuple(tuple(vocab.tokens[i] for i in seq) for seq in encoded.seqs))


class AliasTable:
    """Walker/Vose alias table: O(1) draws from a fixed discrete law."""

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and non-negative")
        total = weights.sum()
        if total <= 0:
            raise ValueError("weights are all zero")
        self.probs = weights / total
        n = weights.size
        scaled = self.probs * n
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            lo = small.pop()
            hi = large.pop()
            prob[lo] = scaled[lo]
            alias[lo] = hi
            scaled[hi] = scaled[hi] + scaled[lo] - 1.0
            (small if scaled[hi] < 1.0 else large).append(hi)
        # leftovers are 1 up to rounding
        self.accept = prob
        self.alias = alias

    def __len__(self):
        return self.probs.size

    def lookup(self, u):
        """Map uniforms in [0, 1) to outcomes; one uniform per draw."""
        u = np.asarray(u, dtype=np.float64)
        n = self.probs.size
        scaled = u * n
        column = np.minimum(scaled.astype(np.int64), n - 1)
        frac = scaled - column
        return np.where(frac < self.accept[column], column, self.alias[column])

    def sample(self, rng: np.random.Generator, size=None):
        return self.lookup(rng.random(size))


def noise_distribution(counts, power: float = 0.75) -> AliasTable:
    """Noise law with P(i) proportional to counts[i]**power.

    Zero counts get zero mass for any power, including 0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size == 0:
        raise ValueError("counts must be non-empty")
    if power < 0:
        raise ValueError("power must be >= 0")
    if not np.any(counts > 0):
        raise ValueError("counts are all zero")
    weights = np.zeros_like(counts)
    seen = counts > 0
    weights[seen] = counts[seen] ** power
    return AliasTable(weights)
