"""Graph, node text and label loading.

Node ids are opaque strings. Dense indices are assigned in order of first
appearance in the edge list, so ingestion is deterministic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[^\W_]+")


class InputFormatError(ValueError):
    """Raised for malformed or inconsistent input files."""


@dataclass(frozen=True)
class Graph:
    """Directed graph over dense node indices.

    ``arcs`` holds every (src, dst) pair once, in insertion order; adjacency
    views are derived from it. Undirected input is stored as both arcs.
    """

    node_ids: tuple[str, ...]
    arcs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.node_ids)
        if n == 0:
            raise ValueError("graph has no nodes")
        if len(set(self.node_ids)) != n:
            raise ValueError("node ids are not unique")
        seen = set()
        for src, dst in self.arcs:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"arc ({src}, {dst}) out of range for {n} nodes")
            if (src, dst) in seen:
                raise ValueError(f"duplicate arc ({src}, {dst})")
            seen.add((src, dst))

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str]],
        directed: bool = True,
        node_ids: Sequence[str] = (),
    ) -> "Graph":
        """Build from (src, dst) id pairs, collapsing duplicate arcs.

        ``node_ids`` pre-registers nodes (in that order) so isolated nodes can
        exist; everything else gets an index on first appearance.
        """
        index: dict[str, int] = {}
        for node in node_ids:
            index.setdefault(node, len(index))
        arcs: dict[tuple[int, int], None] = {}
        for src, dst in edges:
            s = index.setdefault(src, len(index))
            t = index.setdefault(dst, len(index))
            arcs[(s, t)] = None
            if not directed:
                arcs[(t, s)] = None
        return cls(tuple(index), tuple(arcs))

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    @cached_property
    def index(self) -> dict[str, int]:
        return {node: i for i, node in enumerate(self.node_ids)}

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for src, dst in self.arcs:
            out[src].append(dst)
        return tuple(tuple(nbrs) for nbrs in out)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) with each row's neighbors sorted ascending."""
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(nbrs) for nbrs in self.out_neighbors])
        indices = np.concatenate(
            [np.sort(np.asarray(nbrs, dtype=np.int64)) for nbrs in self.out_neighbors]
            or [np.zeros(0, dtype=np.int64)]
        ).astype(np.int64)
        return indptr, indices

    def out_degree(self) -> np.ndarray:
        return np.diff(self.csr[0])

    def is_symmetric(self) -> bool:
        arcs = set(self.arcs)
        return all((t, s) in arcs for s, t in arcs)

    def links(self) -> list[tuple[int, int]]:
        """Unordered node pairs joined by an arc in either direction, as (min, max)."""
        pairs = dict.fromkeys((min(s, t), max(s, t)) for s, t in self.arcs)
        return list(pairs)

    def edge_lines(self) -> list[str]:
        return [f"{self.node_ids[s]}\t{self.node_ids[t]}" for s, t in self.arcs]


@dataclass(frozen=True)
class NodeDocs:
    docs: tuple[tuple[str, ...], ...]
    char_limit: int | None = None

    def __len__(self):
        return len(self.docs)


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[frozenset[str], ...]
    label_universe: tuple[str, ...] = field(default=())

    def __post_init__(self):
        universe = set(self.label_universe)
        for node_labels in self.labels:
            missing = node_labels - universe
            if missing:
                raise ValueError(f"labels {sorted(missing)} missing from label universe")

    def indicator(self) -> np.ndarray:
        """n x L 0/1 matrix, columns ordered as ``label_universe``."""
        col = {label: j for j, label in enumerate(self.label_universe)}
        out = np.zeros((len(self.labels), len(self.label_universe)), dtype=np.int8)
        for i, node_labels in enumerate(self.labels):
            for label in node_labels:
                out[i, col[label]] = 1
        return out


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def _tsv_rows(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            yield lineno, line


def load_edge_list(path: str | Path, directed: bool = True) -> Graph:
    path = Path(path)
    edges = []
    for lineno, line in _tsv_rows(path):
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise InputFormatError(f"{path}:{lineno}: expected 'src<TAB>dst', got {line!r}")
        edges.append((fields[0], fields[1]))
    if not edges:
        raise InputFormatError(f"{path}: edge list is empty")
    return Graph.from_edges(edges, directed=directed)


def write_edge_list(graph: Graph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in graph.edge_lines():
            fh.write(line + "\n")


def _node_index(graph: Graph, node: str, path: Path, lineno: int) -> int:
    try:
        return graph.index[node]
    except KeyError:
        raise InputFormatError(f"{path}:{lineno}: unknown node id {node!r}") from None


def load_node_texts(path: str | Path, graph: Graph, char_limit: int | None = None) -> NodeDocs:
    """Read ``node_id<TAB>text`` lines; truncation happens before tokenizing."""
    path = Path(path)
    docs: list[tuple[str, ...]] = [()] * graph.node_count
    seen: set[int] = set()
    for lineno, line in _tsv_rows(path):
        node, sep, text = line.partition("\t")
        if not sep:
            raise InputFormatError(f"{path}:{lineno}: expected 'node_id<TAB>text'")
        i = _node_index(graph, node, path, lineno)
        if i in seen:
            raise InputFormatError(f"{path}:{lineno}: duplicate text for node {node!r}")
        seen.add(i)
        if char_limit is not None:
            text = text[:char_limit]
        docs[i] = tuple(tokenize(text))
    return NodeDocs(tuple(docs), char_limit)


def load_labels(path: str | Path, graph: Graph) -> LabelSet:
    path = Path(path)
    labels: list[frozenset[str]] = [frozenset()] * graph.node_count
    for lineno, line in _tsv_rows(path):
        node, _, rest = line.partition("\t")
        i = _node_index(graph, node, path, lineno)
        node_labels = frozenset(x.strip() for x in rest.split(",") if x.strip())
        labels[i] = labels[i] | node_labels
    universe = tuple(sorted(set().union(*labels)))
    return LabelSet(tuple(labels), universe)
