"""Conjoined skip-gram over (word, node) inputs with word and node targets.

The hidden layer is the word row plus the node row (ADD) or their
concatenation (CONCAT). Word targets live at indices [0, w) of the output
table and node targets at [w, w + n). Training uses negative sampling with
separate rates for graph pairs (beta1) and text pairs (beta2).
"""
from __future__ import annotations

import enum
import logging
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, softmax

from . import _kernels
from .graph import Graph, NodeDocs
from .sampler import Mode, PairKind, TrainingPair, WalkConfig, build_epoch
from .vocab import Vocab, encode_docs, noise_distribution

log = logging.getLogger(__name__)

LOSS_BLOCK = 10_000
MIN_RATE_FACTOR = 1e-4


class Variant(enum.Enum):
    ADD = "add"
    CONCAT = "concat"


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 128
    epochs: int = 5
    negatives: int = 5
    beta1: float = 0.025
    beta2: float = 0.0125
    seed: int = 0
    lr_decay: bool = True
    variant: Variant = Variant.ADD
    noise_power: float = 0.75
    threads: int = 1

    def __post_init__(self):
        if not self.beta1 > self.beta2 > 0:
            raise ValueError(
                f"learning rates must satisfy beta1 > beta2 > 0 (graph rate above text rate), "
                f"got beta1={self.beta1}, beta2={self.beta2}"
            )
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.dim < 1 or self.epochs < 1 or self.threads < 1:
            raise ValueError("dim, epochs and threads must be >= 1")


@dataclass
class SenseModel:
    variant: Variant
    word_in: np.ndarray
    node_in: np.ndarray
    out: np.ndarray

    def __post_init__(self):
        d = self.node_in.shape[1]
        if self.word_in.shape[1] != d:
            raise ValueError("word and node input rows must share a dimension")
        expected = d if self.variant is Variant.ADD else 2 * d
        if self.out.shape != (self.w + self.n, expected):
            raise ValueError(
                f"output table must be {(self.w + self.n, expected)}, got {self.out.shape}"
            )

    @property
    def w(self) -> int:
        return self.word_in.shape[0]

    @property
    def n(self) -> int:
        return self.node_in.shape[0]

    @property
    def d(self) -> int:
        return self.node_in.shape[1]

    def target_index(self, pair_kind: PairKind, target: int) -> int:
        return target if pair_kind is PairKind.TEXT else self.w + target

    def copy(self) -> "SenseModel":
        return SenseModel(self.variant, self.word_in.copy(), self.node_in.copy(), self.out.copy())


def init_model(w: int, n: int, d: int, variant: Variant = Variant.ADD, seed: int = 0) -> SenseModel:
    """Inputs uniform on [-0.5/d, 0.5/d], output table zero.

    ``w`` may be 0 for graph-only training without any text.
    """
    if w < 0 or n < 1 or d < 1:
        raise ValueError("need w >= 0, n >= 1, d >= 1")
    rng = np.random.default_rng(seed)
    bound = 0.5 / d
    word_in = rng.uniform(-bound, bound, (w, d))
    node_in = rng.uniform(-bound, bound, (n, d))
    width = d if variant is Variant.ADD else 2 * d
    return SenseModel(variant, word_in, node_in, np.zeros((w + n, width)))


def hidden(model: SenseModel, input_word: int | None, input_node: int) -> np.ndarray:
    node_row = model.node_in[input_node]
    word_row = model.word_in[input_word] if input_word is not None else np.zeros(model.d)
    if model.variant is Variant.ADD:
        return word_row + node_row
    return np.concatenate([word_row, node_row])


def full_output_probs(model: SenseModel, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Separate softmaxes over word targets and node targets."""
    if h.shape != (model.out.shape[1],):
        raise ValueError(f"hidden vector must have shape ({model.out.shape[1]},)")
    logits = model.out @ h
    h1 = softmax(logits[: model.w]) if model.w else np.zeros(0)
    return h1, softmax(logits[model.w :])


@dataclass
class PairGradients:
    """Sparse gradients of one pair's loss."""

    hidden: np.ndarray
    node_row: tuple[int, np.ndarray]
    word_row: tuple[int, np.ndarray] | None
    out_rows: dict[int, np.ndarray] = field(default_factory=dict)


def pair_loss_and_grads(model: SenseModel, pair: TrainingPair, negatives) -> tuple[float, PairGradients]:
    """Negative-sampling loss -log s(u_t.h) - sum log s(-u_j.h) and its gradients.

    ``negatives`` are ids in the pair's own target space (words for TEXT,
    nodes for GRAPH).
    """
    h = hidden(model, pair.input_word, pair.input_node)
    if h.shape[0] != model.out.shape[1]:
        raise ValueError("hidden and output dimensions disagree")
    negatives = [int(j) for j in negatives]
    if pair.target in negatives:
        raise ValueError("negatives must not contain the true target")
    rows = [model.target_index(pair.kind, pair.target)] + [
        model.target_index(pair.kind, j) for j in negatives
    ]
    u = model.out[rows]
    z = u @ h
    sign = np.ones(len(rows))
    sign[0] = -1.0
    loss = float(np.sum(np.logaddexp(0.0, sign * z)))
    g = expit(z)
    g[0] -= 1.0
    grad_h = g @ u
    out_rows: dict[int, np.ndarray] = {}
    for r, gr in zip(rows, g):
        out_rows[r] = out_rows.get(r, 0.0) + gr * h
    d = model.d
    if model.variant is Variant.ADD:
        node_grad, word_grad = grad_h, grad_h
    else:
        word_grad, node_grad = grad_h[:d], grad_h[d:]
    word_row = (pair.input_word, word_grad.copy()) if pair.input_word is not None else None
    return loss, PairGradients(grad_h, (pair.input_node, node_grad.copy()), word_row, out_rows)


def rate_factor(progress: float, lr_decay: bool = True) -> float:
    return max(MIN_RATE_FACTOR, 1.0 - progress) if lr_decay else 1.0


def sgd_step(model: SenseModel, pair: TrainingPair, negatives, config: TrainConfig,
             progress: float = 0.0) -> float:
    """Apply one SGD update in place; returns the pre-update loss."""
    loss, grads = pair_loss_and_grads(model, pair, negatives)
    base = config.beta1 if pair.kind is PairKind.GRAPH else config.beta2
    rate = base * rate_factor(progress, config.lr_decay)
    for r, gr in grads.out_rows.items():
        model.out[r] -= rate * gr
    if grads.word_row is not None:
        model.word_in[grads.word_row[0]] -= rate * grads.word_row[1]
    model.node_in[grads.node_row[0]] -= rate * grads.node_row[1]
    return loss


def draw_negatives(kinds, targets, k: int, word_noise, node_noise, rng, max_rounds: int = 20):
    """(len(kinds), k) negative ids in each pair's target space.

    Draws that hit the true target are redrawn; after ``max_rounds`` the
    remaining collisions become -1 and are skipped by the trainer.
    """
    negs = np.full((kinds.size, k), -1, dtype=np.int64)
    for kind, noise in ((PairKind.TEXT, word_noise), (PairKind.GRAPH, node_noise)):
        sel = np.flatnonzero(kinds == kind)
        if sel.size == 0:
            continue
        block = noise.sample(rng, (sel.size, k))
        tgt = targets[sel][:, None]
        for _ in range(max_rounds):
            hit = block == tgt
            if not hit.any():
                break
            block[hit] = noise.sample(rng, int(hit.sum()))
        block[block == tgt] = -1
        negs[sel] = block
    return negs


@dataclass
class TrainResult:
    model: SenseModel
    block_losses: list[list[float]]
    epoch_losses: list[float]
    pairs_per_epoch: list[int]


def _run_kernel(model, pairs, negs, config, pos_offset, total, block_sums):
    _kernels.sgd_kernel(
        model.word_in, model.node_in, model.out,
        pairs.kind, pairs.input_word, pairs.input_node, pairs.target, negs,
        model.w, model.variant is Variant.CONCAT,
        config.beta1, config.beta2, config.lr_decay,
        pos_offset, total, MIN_RATE_FACTOR,
        block_sums, LOSS_BLOCK,
    )


def sgd_pass(model: SenseModel, pairs, negs: np.ndarray, config: TrainConfig,
             pos_offset: int = 0, total: float | None = None) -> np.ndarray:
    """Run the compiled trainer over ``pairs`` in order; returns summed loss
    per block of LOSS_BLOCK pairs.

    ``pos_offset`` and ``total`` place the pass within the whole run for the
    linear rate decay.
    """
    if total is None:
        total = float(max(len(pairs), 1))
    n_blocks = -(-len(pairs) // LOSS_BLOCK)
    if config.threads == 1:
        sums = np.zeros(n_blocks)
        _run_kernel(model, pairs, negs, config, pos_offset, total, sums)
        return sums
    # lock-free: workers share the tables and race on updates
    per = -(-n_blocks // config.threads) * LOSS_BLOCK
    parts = []
    workers = []
    for start in range(0, len(pairs), per):
        stop = min(start + per, len(pairs))
        sums = np.zeros(-(-(stop - start) // LOSS_BLOCK))
        parts.append(sums)
        chunk = pairs.take(slice(start, stop))
        t = threading.Thread(
            target=_run_kernel,
            args=(model, chunk, negs[start:stop], config, pos_offset + start, total, sums),
        )
        workers.append(t)
        t.start()
    for t in workers:
        t.join()
    return np.concatenate(parts)


def train(
    graph: Graph,
    docs: NodeDocs | None,
    vocab: Vocab | None,
    walk_cfg: WalkConfig,
    train_cfg: TrainConfig,
    mode: Mode = Mode.JOINT,
) -> TrainResult:
    if mode is not Mode.GRAPH_ONLY and (docs is None or vocab is None):
        raise ValueError(f"mode {mode.value} needs node texts and a vocabulary")
    if train_cfg.threads > 1:
        warnings.warn("threads > 1: lock-free training is not reproducible", RuntimeWarning, stacklevel=2)
    encoded = encode_docs(docs, vocab) if (docs is not None and vocab is not None) else None
    w = vocab.size if vocab is not None else 0
    model = init_model(w, graph.node_count, train_cfg.dim, train_cfg.variant, train_cfg.seed)
    rng = np.random.default_rng(train_cfg.seed)
    word_noise = noise_distribution(vocab.counts, train_cfg.noise_power) if vocab is not None else None

    block_losses, epoch_losses, sizes = [], [], []
    pos = 0
    total = None
    for epoch in range(train_cfg.epochs):
        ep = build_epoch(graph, encoded, vocab, walk_cfg, rng, mode)
        pairs = ep.pairs
        if len(pairs) == 0:
            raise ValueError(f"epoch {epoch} produced no training pairs")
        if total is None:
            # later epochs differ slightly in size; the decay clamps at the floor
            total = float(len(pairs) * train_cfg.epochs)
        node_noise = noise_distribution(ep.node_visits, train_cfg.noise_power) if ep.node_visits.any() else None
        negs = draw_negatives(pairs.kind, pairs.target, train_cfg.negatives, word_noise, node_noise, rng)
        sums = sgd_pass(model, pairs, negs, train_cfg, pos, total)
        pos += len(pairs)
        sizes.append(len(pairs))
        counts = np.full(sums.size, LOSS_BLOCK, dtype=np.float64)
        counts[-1] = len(pairs) - LOSS_BLOCK * (sums.size - 1)
        block_losses.append((sums / counts).tolist())
        epoch_losses.append(float(sums.sum() / len(pairs)))
        log.info("epoch %d: %d pairs, mean loss %.4f", epoch + 1, len(pairs), epoch_losses[-1])
    return TrainResult(model, block_losses, epoch_losses, sizes)


def node_embeddings(model: SenseModel, normalize: bool = False) -> np.ndarray:
    emb = model.node_in.copy()
    if normalize:
        norms = np.linalg.norm(emb, axis=1)
        zero = norms == 0
        if zero.any():
            log.warning("%d node rows are zero and stay zero: %s", zero.sum(), np.flatnonzero(zero)[:10].tolist())
        emb[~zero] /= norms[~zero, None]
    return emb
