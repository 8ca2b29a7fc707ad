"""Text formats for embedding tables and sequence vectors.

Embedding file: header ``n d``, then ``node_id v1 ... vd`` per line.
Sequence vector file: header ``q d``, then one line of d floats. Position k
of the sequence is stored rotated k-1 places toward higher indices.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import InputFormatError

FLOAT_FMT = "%.9g"


def _fmt_row(values) -> str:
    return " ".join(FLOAT_FMT % x for x in values)


def write_embeddings(path: str | Path, ids: Sequence[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix rows must match ids")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for node, row in zip(ids, matrix):
            if any(c.isspace() for c in node):
                raise ValueError(f"id {node!r} contains whitespace")
            fh.write(f"{node} {_fmt_row(row)}\n")


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise InputFormatError(f"{path}:1: expected header 'n d'")
        n, d = int(header[0]), int(header[1])
        ids, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != d + 1:
                raise InputFormatError(f"{path}:{lineno}: expected id and {d} values, got {len(parts) - 1}")
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(ids) != n:
        raise InputFormatError(f"{path}: header declares {n} rows, found {len(ids)}")
    return ids, np.array(rows, dtype=np.float64).reshape(n, d)


def write_sequence_vector(path: str | Path, values: np.ndarray, length: int) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{length} {values.size}\n{_fmt_row(values)}\n")


def read_sequence_vector(path: str | Path) -> tuple[np.ndarray, int]:
    path = Path(path)
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) != 2:
        raise InputFormatError(f"{path}: expected a 'q d' header and one value line")
    header = lines[0].split()
    if len(header) != 2:
        raise InputFormatError(f"{path}:1: expected header 'q d'")
    q, d = int(header[0]), int(header[1])
    values = np.array([float(x) for x in lines[1].split()])
    if values.size != d:
        raise InputFormatError(f"{path}:2: header declares {d} values, found {values.size}")
    return values, q
