"""Node sequence vectors: positional binding by cyclic shift.

A sequence v_1 .. v_q of unit node vectors is stored as
``sum_i shift(v_i, i - 1)`` where ``shift(v, m)`` rotates coordinates m
places toward higher indices (``[v_d, v_1, ..., v_{d-1}]`` for m = 1).
Position k decodes as the node maximizing ``S . shift(v, k - 1)``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

NORM_TOL = 1e-6


def cyclic_shift(v: np.ndarray, m: int) -> np.ndarray:
    v = np.asarray(v)
    d = v.shape[-1]
    if d < 1:
        raise ValueError("cannot shift an empty vector")
    if m < 0:
        raise ValueError("shift amount must be non-negative")
    return np.roll(v, m % d, axis=-1)


class ZeroRowError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    """n unit-norm rows with external ids."""

    ids: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[0] != len(self.ids):
            raise ValueError("rows must be an n x d matrix aligned with ids")
        norms = np.linalg.norm(self.rows, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise ValueError(f"row for node {self.ids[bad[0]]!r} has norm {norms[bad[0]]:.6g}, expected 1")

    @classmethod
    def from_matrix(cls, ids: Sequence[str], matrix, normalize: bool = True) -> "EmbeddingTable":
        matrix = np.array(matrix, dtype=np.float64)
        if normalize:
            norms = np.linalg.norm(matrix, axis=1)
            zero = np.flatnonzero(norms == 0)
            if zero.size:
                names = ", ".join(repr(ids[i]) for i in zero[:5])
                raise ZeroRowError(f"zero embedding rows cannot be normalized: {names}")
            matrix /= norms[:, None]
        return cls(tuple(ids), matrix)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @cached_property
    def index(self) -> dict[str, int]:
        return {node: i for i, node in enumerate(self.ids)}

    def lookup(self, node: str) -> int:
        try:
            return self.index[node]
        except KeyError:
            raise KeyError(f"unknown node id {node!r}") from None


@dataclass(frozen=True)
class SequenceVector:
    values: np.ndarray
    length: int = field(default=1)

    def __post_init__(self):
        d = self.values.shape[-1]
        if not 1 <= self.length <= d:
            raise ValueError(f"sequence length {self.length} must be in [1, {d}]")
        if self.length > d / 8:
            warnings.warn(
                f"sequence length {self.length} exceeds d/8 = {d / 8:g}; decoding accuracy degrades",
                stacklevel=3,
            )

    @property
    def d(self) -> int:
        return self.values.shape[-1]


def encode_rows(rows: np.ndarray, seq) -> np.ndarray:
    """Sum of shifted rows; ``seq`` may be (q,) or a batch (b, q) of indices."""
    seq = np.asarray(seq, dtype=np.int64)
    picked = rows[seq]  # (..., q, d)
    out = np.zeros(picked.shape[:-2] + picked.shape[-1:])
    for i in range(seq.shape[-1]):
        out += np.roll(picked[..., i, :], i, axis=-1)
    return out


def encode(node_ids: Sequence[str], table: EmbeddingTable) -> SequenceVector:
    q = len(node_ids)
    if q < 1:
        raise ValueError("cannot encode an empty sequence")
    if q > table.d:
        raise ValueError(f"sequence length {q} exceeds dimension {table.d}; shifts would wrap around")
    idx = [table.lookup(node) for node in node_ids]
    return SequenceVector(encode_rows(table.rows, idx), q)


def score(seq: SequenceVector, node: str, k: int, table: EmbeddingTable) -> float:
    _check_position(seq, k)
    return float(seq.values @ cyclic_shift(table.rows[table.lookup(node)], k - 1))


def _check_position(seq: SequenceVector, k: int) -> None:
    if not 1 <= k <= seq.length:
        raise ValueError(f"position {k} outside [1, {seq.length}]")


def position_scores(values: np.ndarray, k: int, rows: np.ndarray) -> np.ndarray:
    """Scores of every row at position k; ``values`` may be batched."""
    # S . shift(v, k-1) == shift(S, -(k-1)) . v
    return np.roll(values, -(k - 1), axis=-1) @ rows.T


def decode_position(seq: SequenceVector, k: int, table: EmbeddingTable) -> tuple[str, float]:
    _check_position(seq, k)
    scores = position_scores(seq.values, k, table.rows)
    best = int(np.argmax(scores))  # first maximum, so ties go to the lowest index
    return table.ids[best], float(scores[best])


def decode(seq: SequenceVector, table: EmbeddingTable, *, stop_below: float | None = None) -> list[str]:
    """Decode every stored position.

    With ``stop_below`` set, the stored length is ignored and decoding stops
    at the first position whose best score falls under the threshold. That
    rule is a heuristic for vectors of unknown length.
    """
    if seq.d != table.d:
        raise ValueError(f"sequence dimension {seq.d} does not match table dimension {table.d}")
    if stop_below is None:
        return [decode_position(seq, k, table)[0] for k in range(1, seq.length + 1)]
    out = []
    for k in range(1, table.d + 1):
        scores = position_scores(seq.values, k, table.rows)
        best = int(np.argmax(scores))
        if scores[best] < stop_below:
            break
        out.append(table.ids[best])
    return out


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_unit_vectors(1, d, rng)[0]


def random_unit_vectors(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform on the unit sphere in R^d (normalized Gaussians)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    x = rng.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    while np.any(norms == 0):  # measure zero, but keep the contract
        bad = norms[:, 0] == 0
        x[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / norms


_CHUNK = 10_000


def _chunks(samples: int):
    for start in range(0, samples, _CHUNK):
        yield min(_CHUNK, samples - start)


def independent_dot_samples(N: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    out = []
    for size in _chunks(samples):
        x = random_unit_vectors(size, N, rng)
        y = random_unit_vectors(size, N, rng)
        out.append(np.einsum("ij,ij->i", x, y))
    return np.concatenate(out)


def independent_dot_stats(N: int, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Mean and variance of x.y for independent uniform unit vectors in R^N."""
    dots = independent_dot_samples(N, samples, rng)
    return float(dots.mean()), float(dots.var())


def _orthogonal_unit(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.standard_normal(x.shape)
    u -= np.einsum("ij,ij->i", u, x)[:, None] * x
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def shifted_dot_samples(N: int, c: float, m: int, samples: int, rng: np.random.Generator,
                        construction: str = "isotropic") -> np.ndarray:
    """Samples of x . shift(y, m) conditioned on x . y = c.

    ``isotropic``: x uniform on the sphere, y = c x + sqrt(1 - c^2) u with u
    uniform on the unit sphere of x's orthogonal complement, so both vectors
    are uniform and only their angle is fixed.

    ``fixed-axis``: y = e_1 and x uniform subject to x_1 = c, so the
    statistic is x_{1+m}.
    """
    if abs(c) > 1:
        raise ValueError("|c| must be <= 1")
    if N < 2:
        raise ValueError("N must be >= 2")
    if m % N == 0:
        raise ValueError(f"shift {m} is a multiple of N={N}; the shifted vector equals the original")
    s = np.sqrt(max(0.0, 1.0 - c * c))
    out = []
    for size in _chunks(samples):
        if construction == "isotropic":
            x = random_unit_vectors(size, N, rng)
            y = c * x + s * _orthogonal_unit(x, rng)
            out.append(np.einsum("ij,ij->i", x, np.roll(y, m % N, axis=1)))
        elif construction == "fixed-axis":
            rest = random_unit_vectors(size, N - 1, rng)
            out.append(s * rest[:, (m % N) - 1])
        else:
            raise ValueError(f"unknown construction {construction!r}")
    return np.concatenate(out)


def shifted_dot_stats(N: int, c: float, m: int, samples: int, rng: np.random.Generator,
                      construction: str = "isotropic") -> tuple[float, float]:
    dots = shifted_dot_samples(N, c, m, samples, rng, construction)
    return float(dots.mean()), float(dots.var())


def fixed_axis_variance(N: int, c: float) -> float:
    """Var[x . shift(y, m) | x . y = c] when y is a coordinate axis: (1-c^2)/(N-1)."""
    return (1.0 - c * c) / (N - 1)


def isotropic_variance(N: int, c: float, m: int) -> float:
    """Exact Var[x . shift(y, m) | x . y = c] for uniformly random unit x, y.

    With r = E[(x . shift(x, m))^2] = (1 + [2m = 0 mod N]) / (N + 2), the
    variance is c^2 r + (1 - c^2)(1 - r)/(N - 1). It equals the fixed-axis
    value only at c = 0, up to the O(1/N^2) term.
    """
    if m % N == 0:
        raise ValueError("shift must not be a multiple of N")
    r = (2.0 if (2 * m) % N == 0 else 1.0) / (N + 2)
    return c * c * r + (1.0 - c * c) * (1.0 - r) / (N - 1)
