"""Training-pair generation: biased random walks over the graph and sliding
windows over node documents."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .graph import Graph
from .vocab import EncodedDocs, Vocab


class PairKind(enum.IntEnum):
    TEXT = _kernels.TEXT
    GRAPH = _kernels.GRAPH


class Mode(enum.Enum):
    JOINT = "joint"
    GRAPH_ONLY = "graph-only"
    TEXT_ONLY = "text-only"


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    p: float = 1.0
    q: float = 1.0
    node_window: int = 10
    text_window: int = 5

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.node_window < 1 or self.text_window < 1:
            raise ValueError("window sizes must be >= 1")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be > 0")


@dataclass(frozen=True)
class TrainingPair:
    """One SGD sample.

    TEXT pairs carry a center word and predict a context word; GRAPH pairs
    carry no word and predict a context node.
    """

    kind: PairKind
    input_node: int
    target: int
    input_word: int | None = None

    def __post_init__(self):
        if self.kind is PairKind.TEXT and self.input_word is None:
            raise ValueError("TEXT pairs need an input word")
        if self.kind is PairKind.GRAPH and self.input_word is not None:
            raise ValueError("GRAPH pairs take no input word")

    @property
    def target_space(self) -> str:
        return "word" if self.kind is PairKind.TEXT else "node"


@dataclass
class PairBatch:
    """Column-oriented pair stream. ``input_word`` is -1 where absent."""

    kind: np.ndarray
    input_word: np.ndarray
    input_node: np.ndarray
    target: np.ndarray

    @classmethod
    def empty(cls) -> "PairBatch":
        z = np.zeros(0, dtype=np.int64)
        return cls(z.astype(np.int8), z, z, z)

    @classmethod
    def concat(cls, batches: Sequence["PairBatch"]) -> "PairBatch":
        if not batches:
            return cls.empty()
        return cls(*(np.concatenate([getattr(b, f) for b in batches])
                     for f in ("kind", "input_word", "input_node", "target")))

    def __len__(self):
        return self.kind.size

    def take(self, idx) -> "PairBatch":
        return PairBatch(self.kind[idx], self.input_word[idx], self.input_node[idx], self.target[idx])

    def __iter__(self) -> Iterator[TrainingPair]:
        for k, w, v, t in zip(self.kind, self.input_word, self.input_node, self.target):
            kind = PairKind(int(k))
            yield TrainingPair(kind, int(v), int(t), int(w) if w >= 0 else None)


def generate_walks(graph: Graph, starts, cfg: WalkConfig, rng: np.random.Generator):
    """Run one walk per entry of ``starts``.

    Returns an (len(starts), walk_length) array padded with -1 after a sink,
    and the per-walk lengths.
    """
    starts = np.asarray(starts, dtype=np.int64)
    indptr, indices = graph.csr
    uniforms = rng.random((starts.size, cfg.walk_length - 1))
    out = np.empty((starts.size, cfg.walk_length), dtype=np.int64)
    lengths = np.empty(starts.size, dtype=np.int64)
    _kernels.walk_kernel(indptr, indices, starts, uniforms, 1.0 / cfg.p, 1.0 / cfg.q, out, lengths)
    return out, lengths


def random_walk(graph: Graph, start: int, cfg: WalkConfig, rng: np.random.Generator) -> list[int]:
    walks, lengths = generate_walks(graph, [start], cfg, rng)
    return walks[0, : lengths[0]].tolist()


def node_pairs(walk: Sequence[int], node_window: int) -> list[tuple[int, int]]:
    pairs = []
    for i, center in enumerate(walk):
        lo = max(0, i - node_window)
        for j in range(lo, min(len(walk), i + node_window + 1)):
            if j != i:
                pairs.append((center, walk[j]))
    return pairs


def _windowed(seq: np.ndarray, group: np.ndarray, window: int):
    """All (center, context) index pairs within ``window`` that share a group.

    ``seq`` is a flat concatenation of sequences and ``group`` labels which
    sequence each slot belongs to.
    """
    centers, contexts = [], []
    for off in range(1, window + 1):
        if off >= seq.size:
            break
        same = group[:-off] == group[off:]
        a = seq[:-off][same]
        b = seq[off:][same]
        centers += [a, b]
        contexts += [b, a]
    if not centers:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    return np.concatenate(centers), np.concatenate(contexts)


def walk_pair_batch(walks: np.ndarray, lengths: np.ndarray, node_window: int) -> PairBatch:
    mask = np.arange(walks.shape[1])[None, :] < lengths[:, None]
    flat = walks[mask]
    group = np.repeat(np.arange(walks.shape[0]), lengths)
    center, context = _windowed(flat, group, node_window)
    kind = np.full(center.size, PairKind.GRAPH, dtype=np.int8)
    return PairBatch(kind, np.full(center.size, -1, dtype=np.int64), center, context)


def word_pairs(doc, node: int, text_window: int, vocab: Vocab, rng: np.random.Generator) -> list[TrainingPair]:
    """Subsample ``doc`` with the vocab keep probabilities, then window it."""
    doc = np.asarray(doc, dtype=np.int64)
    kept = doc[rng.random(doc.size) < vocab.keep_prob[doc]]
    return [
        TrainingPair(PairKind.TEXT, node, int(ctx), input_word=int(center))
        for center, ctx in node_pairs(kept.tolist(), text_window)
    ]


def text_pair_batch(docs: EncodedDocs, text_window: int, vocab: Vocab, rng: np.random.Generator) -> PairBatch:
    """Vectorized ``word_pairs`` over every document.

    Consumes the random stream exactly as calling ``word_pairs`` on each
    document in node order would.
    """
    lengths = np.array([s.size for s in docs.seqs], dtype=np.int64)
    if lengths.sum() == 0:
        return PairBatch.empty()
    flat = np.concatenate(docs.seqs)
    owner = np.repeat(np.arange(len(docs.seqs)), lengths)
    keep = rng.random(flat.size) < vocab.keep_prob[flat]
    flat, owner = flat[keep], owner[keep]
    center_pos, context_pos = _windowed(np.arange(flat.size), owner, text_window)
    kind = np.full(center_pos.size, PairKind.TEXT, dtype=np.int8)
    return PairBatch(kind, flat[center_pos], owner[center_pos], flat[context_pos])


@dataclass
class Epoch:
    pairs: PairBatch
    node_visits: np.ndarray


def build_epoch(
    graph: Graph,
    docs: EncodedDocs | None,
    vocab: Vocab | None,
    cfg: WalkConfig,
    rng: np.random.Generator,
    mode: Mode = Mode.JOINT,
) -> Epoch:
    """Fresh walks and text windows for one pass, in seeded shuffled order.

    ``node_visits`` counts node occurrences in the generated walks and feeds
    the node noise distribution.
    """
    n = graph.node_count
    batches = []
    visits = np.zeros(n, dtype=np.int64)
    if mode is not Mode.TEXT_ONLY:
        starts = np.tile(np.arange(n, dtype=np.int64), cfg.walks_per_node)
        walks, lengths = generate_walks(graph, starts, cfg, rng)
        batches.append(walk_pair_batch(walks, lengths, cfg.node_window))
        visits = np.bincount(walks[walks >= 0], minlength=n)
    if mode is not Mode.GRAPH_ONLY and docs is not None:
        if vocab is None:
            raise ValueError("text pairs need a vocabulary")
        batches.append(text_pair_batch(docs, cfg.text_window, vocab, rng))
    pairs = PairBatch.concat(batches)
    return Epoch(pairs.take(rng.permutation(len(pairs))), visits)
