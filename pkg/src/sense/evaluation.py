"""Evaluation protocols: one-vs-rest node classification, link prediction
with absolute-difference pair features, and sequence decoding sweeps."""
from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .codec import EmbeddingTable, encode_rows, position_scores, random_unit_vectors
from .graph import Graph, LabelSet
from .sampler import WalkConfig, generate_walks

log = logging.getLogger(__name__)

L2_GRID = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.6
    valid: float = 0.2
    test: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train, self.valid, self.test)
        if not all(0 < f < 1 for f in fracs):
            raise ValueError("split fractions must lie in (0, 1)")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {sum(fracs)}, expected 1")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SplitSpec":
        """Parse ``"60,20,20"`` (percentages or fractions)."""
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"split needs three numbers, got {text!r}")
        total = sum(parts)
        return cls(*(p / total for p in parts), seed=seed)

    def split(self, n_samples: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        perm = np.random.default_rng(self.seed).permutation(n_samples)
        n_train = int(round(self.train * n_samples))
        n_valid = int(round(self.valid * n_samples))
        return perm[:n_train], perm[n_train:n_train + n_valid], perm[n_train + n_valid:]


@dataclass
class LinearBinary:
    """Logistic regression on standardized features."""

    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray

    def margin(self, X: np.ndarray) -> np.ndarray:
        return ((X - self.mean) / self.scale) @ self.weights + self.bias


def _standardizer(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def fit_logistic(X: np.ndarray, y: np.ndarray, l2: float, mean=None, scale=None) -> LinearBinary:
    """Minimize mean log-loss + l2/2 |w|^2 (bias unpenalized) with L-BFGS."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if mean is None:
        mean, scale = _standardizer(X)
    Z = (X - mean) / scale
    n, p = Z.shape
    if y.min() == y.max():
        # one class only: constant decision
        return LinearBinary(np.zeros(p), 10.0 if y[0] > 0 else -10.0, mean, scale)
    sign = 2.0 * y - 1.0

    def objective(theta):
        w, b = theta[:p], theta[p]
        z = sign * (Z @ w + b)
        loss = np.logaddexp(0.0, -z).mean() + 0.5 * l2 * w @ w
        coef = -sign * expit(-z) / n
        grad = np.empty(p + 1)
        grad[:p] = Z.T @ coef + l2 * w
        grad[p] = coef.sum()
        return loss, grad

    res = minimize(objective, np.zeros(p + 1), jac=True, method="L-BFGS-B",
                   options={"maxiter": 500})
    return LinearBinary(res.x[:p], float(res.x[p]), mean, scale)


@dataclass
class OneVsRest:
    labels: tuple[str, ...]
    models: list[LinearBinary]

    def margins(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([m.margin(X) for m in self.models])

    def predict(self, X: np.ndarray) -> list[frozenset[str]]:
        """Labels with positive margin, or the single best label if none is."""
        M = self.margins(X)
        out = []
        for row in M:
            picked = np.flatnonzero(row > 0)
            if picked.size == 0:
                picked = [int(np.argmax(row))]
            out.append(frozenset(self.labels[j] for j in picked))
        return out


def fit_one_vs_rest(X, Y: np.ndarray, labels: Sequence[str], l2: float) -> OneVsRest:
    mean, scale = _standardizer(X)
    return OneVsRest(tuple(labels), [fit_logistic(X, Y[:, j], l2, mean, scale) for j in range(Y.shape[1])])


def set_error(predicted: Sequence[frozenset], truth: Sequence[frozenset]) -> float:
    """Fraction of samples whose predicted label set differs from the truth."""
    if not truth:
        return float("nan")
    return float(np.mean([p != t for p, t in zip(predicted, truth)]))


@dataclass
class ClassificationReport:
    classifier: OneVsRest
    l2: float
    errors: dict[str, float]
    excluded_labels: list[str] = field(default_factory=list)
    valid_errors: dict[float, float] = field(default_factory=dict)


def train_ovr_classifier(features: np.ndarray, labels: LabelSet, split: SplitSpec,
                         l2_grid: Sequence[float] = L2_GRID) -> ClassificationReport:
    """One binary logistic model per label; L2 strength chosen on validation.

    Samples are the nodes with at least one label; a node counts as correct
    only if its predicted label set equals its true set.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != len(labels.labels):
        raise ValueError("need one feature row per node")
    nodes = np.array([i for i, ls in enumerate(labels.labels) if ls], dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("no labeled nodes")
    tr, va, te = (nodes[s] for s in split.split(nodes.size))
    Y = labels.indicator()
    keep = []
    excluded = []
    for j, label in enumerate(labels.label_universe):
        if Y[tr, j].sum() >= 2:
            keep.append(j)
        else:
            excluded.append(label)
    if excluded:
        log.warning("labels with < 2 training positives excluded: %s", excluded)
    if not keep:
        raise ValueError("no label has 2 or more training positives")
    names = [labels.label_universe[j] for j in keep]
    X = features
    truth = [labels.labels[i] for i in range(len(labels.labels))]

    def err(model, idx):
        return set_error(model.predict(X[idx]), [truth[i] for i in idx])

    valid_errors = {}
    best = None
    for l2 in l2_grid:
        model = fit_one_vs_rest(X[tr], Y[tr][:, keep], names, l2)
        valid_errors[l2] = err(model, va) if va.size else 0.0
        if best is None or valid_errors[l2] < valid_errors[best[0]]:
            best = (l2, model)
    l2, model = best
    errors = {"train": err(model, tr), "valid": err(model, va), "test": err(model, te)}
    return ClassificationReport(model, l2, errors, excluded, valid_errors)


@dataclass
class LinkPredictionReport:
    errors: dict[str, float]
    l2: float
    positives: np.ndarray
    negatives: np.ndarray
    residual: Graph


def holdout_links(graph: Graph, holdout_frac: float, rng: np.random.Generator):
    """Pick links to remove so every node keeps at least one link.

    Links are unordered; both arcs of a removed link go away. Returns the
    removed (min, max) pairs and the residual graph on the same node ids.
    """
    if not 0 < holdout_frac < 1:
        raise ValueError("holdout fraction must be in (0, 1); 0 leaves no positive samples")
    links = graph.links()
    links = [lk for lk in links if lk[0] != lk[1]]
    want = int(round(holdout_frac * len(links)))
    if want < 1:
        raise ValueError(f"holdout fraction {holdout_frac} removes no links out of {len(links)}")
    degree = np.zeros(graph.node_count, dtype=np.int64)
    for a, b in links:
        degree[a] += 1
        degree[b] += 1
    removed = []
    for i in rng.permutation(len(links)):
        a, b = links[i]
        if degree[a] > 1 and degree[b] > 1:
            degree[a] -= 1
            degree[b] -= 1
            removed.append((a, b))
            if len(removed) == want:
                break
    if len(removed) < want:
        raise ValueError(f"only {len(removed)} of {want} links can be removed without isolating a node")
    gone = set(removed)
    arcs = tuple((s, t) for s, t in graph.arcs if (min(s, t), max(s, t)) not in gone)
    return np.array(removed, dtype=np.int64), Graph(graph.node_ids, arcs)


def sample_non_links(graph: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform distinct node pairs with no arc in either direction."""
    n = graph.node_count
    linked = set(graph.links())
    possible = n * (n - 1) // 2 - sum(1 for a, b in linked if a != b)
    if count > possible:
        raise ValueError(f"graph has only {possible} unlinked pairs, need {count}")
    chosen: dict[tuple[int, int], None] = {}
    while len(chosen) < count:
        a, b = rng.integers(0, n, size=2)
        if a == b:
            continue
        key = (int(min(a, b)), int(max(a, b)))
        if key not in linked:
            chosen[key] = None
    return np.array(list(chosen), dtype=np.int64)


def pair_features(emb: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return np.abs(emb[pairs[:, 0]] - emb[pairs[:, 1]])


def link_prediction(graph: Graph, embed_fn: Callable[[Graph], np.ndarray], holdout_frac: float,
                    split: SplitSpec, seed: int = 0,
                    l2_grid: Sequence[float] = L2_GRID) -> LinkPredictionReport:
    """Hold out links, embed the residual graph, classify held-out links
    against sampled non-links."""
    rng = np.random.default_rng(seed)
    positives, residual = holdout_links(graph, holdout_frac, rng)
    negatives = sample_non_links(graph, len(positives), rng)
    emb = np.asarray(embed_fn(residual), dtype=np.float64)
    if emb.shape[0] != graph.node_count:
        raise ValueError("embedding function must return one row per node")
    pairs = np.vstack([positives, negatives])
    X = pair_features(emb, pairs)
    y = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))])
    tr, va, te = split.split(len(y))

    def err(model, idx):
        return float(np.mean((model.margin(X[idx]) > 0) != (y[idx] > 0)))

    best = None
    for l2 in l2_grid:
        model = fit_logistic(X[tr], y[tr], l2)
        e = err(model, va)
        if best is None or e < best[0]:
            best = (e, l2, model)
    _, l2, model = best
    errors = {"train": err(model, tr), "valid": err(model, va), "test": err(model, te)}
    return LinkPredictionReport(errors, l2, positives, negatives, residual)


class SequenceSource(enum.Enum):
    RANDOM_NODES = "random-nodes"
    RANDOM_WALK = "random-walk"


@dataclass(frozen=True)
class DecodeExperiment:
    mode: SequenceSource
    dims: tuple[int, ...]
    lengths: tuple[int, ...]
    trials: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    dim: int
    length: int
    accuracy: float
    trials: int


def _walk_prefixes(graph: Graph, length: int, trials: int, rng: np.random.Generator,
                   max_rounds: int = 100) -> np.ndarray:
    cfg = WalkConfig(walks_per_node=1, walk_length=max(length, 2))
    found = []
    need = trials
    for _ in range(max_rounds):
        starts = rng.integers(0, graph.node_count, size=need)
        walks, lengths = generate_walks(graph, starts, cfg, rng)
        found.append(walks[lengths >= length, :length])
        need -= int((lengths >= length).sum())
        if need <= 0:
            return np.vstack(found)[:trials]
    raise ValueError(f"could not find {trials} walks of length {length}; graph has too many sinks")


def recovery_rate(rows: np.ndarray, seqs: np.ndarray) -> float:
    """Fraction of sequences whose every position decodes correctly."""
    S = encode_rows(rows, seqs)
    ok = np.ones(seqs.shape[0], dtype=bool)
    for k in range(1, seqs.shape[1] + 1):
        best = np.argmax(position_scores(S, k, rows), axis=1)
        ok &= best == seqs[:, k - 1]
    return float(ok.mean())


def decoding_sweep(exp: DecodeExperiment, n_nodes: int | None = None,
                   tables: Mapping[int, EmbeddingTable] | None = None,
                   graph: Graph | None = None) -> list[SweepRow]:
    """Exact-recovery rate per (dim, length) cell.

    RANDOM_NODES draws fresh random unit rows per dim and picks positions
    uniformly (repeats allowed). RANDOM_WALK uses ``tables[dim]`` and walk
    prefixes on ``graph``. Each cell has its own seed derived from
    (seed, dim, length). Cells with length > dim are skipped.
    """
    rows_out = []
    for dim in exp.dims:
        if exp.mode is SequenceSource.RANDOM_NODES:
            if n_nodes is None:
                raise ValueError("random-node sweeps need n_nodes")
            rows = random_unit_vectors(n_nodes, dim, np.random.default_rng([exp.seed, dim]))
        else:
            if tables is None or graph is None or dim not in tables:
                raise ValueError(f"random-walk sweeps need a graph and a table of dimension {dim}")
            rows = tables[dim].rows
            if tables[dim].d != dim:
                raise ValueError(f"table registered for dim {dim} has dimension {tables[dim].d}")
        for length in exp.lengths:
            if length > dim:
                log.info("skipping cell dim=%d length=%d: length exceeds dimension", dim, length)
                continue
            rng = np.random.default_rng([exp.seed, dim, length])
            if exp.mode is SequenceSource.RANDOM_NODES:
                seqs = rng.integers(0, rows.shape[0], size=(exp.trials, length))
            else:
                seqs = _walk_prefixes(graph, length, exp.trials, rng)
            rows_out.append(SweepRow(dim, length, recovery_rate(rows, seqs), exp.trials))
    return rows_out


def write_sweep_csv(path: str | Path, rows: Sequence[SweepRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dim", "length", "accuracy", "trials"])
        for r in rows:
            writer.writerow([r.dim, r.length, f"{r.accuracy:.6f}", r.trials])


def write_error_csv(path: str | Path, errors: Mapping[str, float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["split", "error"])
        for split, e in errors.items():
            writer.writerow([split, f"{e:.6f}"])
