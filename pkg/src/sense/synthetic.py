"""Seeded synthetic datasets for desk-scale experiments and tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, LabelSet, NodeDocs


def planted_partition(sizes, p_in: float, p_out: float, seed: int = 0) -> tuple[Graph, np.ndarray]:
    """Undirected planted-partition graph; returns it with per-node community.

    Nodes are named ``n0, n1, ...`` and every node is registered even if it
    draws no edges.
    """
    rng = np.random.default_rng(seed)
    community = np.repeat(np.arange(len(sizes)), sizes)
    n = community.size
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(community[iu] == community[ju], p_in, p_out)
    hit = rng.random(iu.size) < prob
    ids = [f"n{i}" for i in range(n)]
    edges = [(ids[a], ids[b]) for a, b in zip(iu[hit], ju[hit])]
    return Graph.from_edges(edges, directed=False, node_ids=ids), community


def near_regular_graph(n: int, degree: int, seed: int = 0) -> Graph:
    """Union of ``degree`` random perfect matchings; duplicate links collapse.

    Every node has degree close to ``degree``, so uniformly sampled links
    touch every node about equally often.
    """
    if n % 2:
        raise ValueError("n must be even")
    rng = np.random.default_rng(seed)
    ids = [f"r{i}" for i in range(n)]
    edges = []
    for _ in range(degree):
        perm = rng.permutation(n)
        edges += [(ids[a], ids[b]) for a, b in perm.reshape(-1, 2)]
    return Graph.from_edges(edges, directed=False, node_ids=ids)


@dataclass
class JointFixture:
    graph: Graph
    docs: NodeDocs
    labels: LabelSet
    community: np.ndarray


def community_text_fixture(sizes=(50, 50), p_in: float = 0.1, p_out: float = 0.01,
                           words_per_community: int = 40, shared_words: int = 20,
                           doc_length: int = 30, shared_frac: float = 0.3,
                           seed: int = 0) -> JointFixture:
    """Planted-partition graph whose nodes describe themselves with
    community-specific words plus a shared background vocabulary.

    Labels are the community names ``c0, c1, ...``.
    """
    graph, community = planted_partition(sizes, p_in, p_out, seed)
    rng = np.random.default_rng([seed, 1])
    shared = [f"common{j}" for j in range(shared_words)]
    docs = []
    for c in community:
        own = [f"topic{c}w{j}" for j in range(words_per_community)]
        from_shared = rng.random(doc_length) < shared_frac
        words = [
            shared[rng.integers(shared_words)] if s else own[rng.integers(words_per_community)]
            for s in from_shared
        ]
        docs.append(tuple(words))
    labels = tuple(frozenset({f"c{c}"}) for c in community)
    universe = tuple(sorted({f"c{c}" for c in community}))
    return JointFixture(graph, NodeDocs(tuple(docs)), LabelSet(labels, universe), community)
