"""Thresholded partial-correlation graph and the trees used to chain phi ratios.

An edge joins ``i`` and ``j`` when the product ``B[i, j] * B[j, i]`` (the squared
partial correlation when B is exact) exceeds a threshold ``t``. Its weight is
``exp(-B[i, j] * B[j, i])``, so strongly correlated pairs are cheap to traverse.
Ties are always broken by node index to keep results reproducible.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NEAR_ZERO = 1e-12


class DivisionByNearZero(ArithmeticError):
    """A tree edge has a near-zero regression coefficient in the ratio denominator."""


def default_threshold(n: int) -> float:
    """min(0.01, n ** -0.5)."""
    return min(0.01, n**-0.5)


@dataclass(frozen=True)
class PartialCorrGraph:
    """Undirected weighted graph; ``weights[i, j] == 0`` means no edge."""

    weights: np.ndarray
    threshold: float = float("nan")

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.weights, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.weights[i])

    def degree(self) -> np.ndarray:
        return np.count_nonzero(self.weights, axis=1)

    @classmethod
    def from_weights(cls, W, threshold: float = float("nan")) -> "PartialCorrGraph":
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("weight matrix must be square")
        if np.any(W != W.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(W < 0):
            raise ValueError("weights must be non-negative")
        W = W.copy()
        np.fill_diagonal(W, 0.0)
        return cls(W, threshold)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "threshold": self.threshold,
            "edges": [{"i": i, "j": j, "weight": w} for i, j, w in self.edges],
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


def build_graph(B, t: float) -> PartialCorrGraph:
    """Graph with ``W_ij = exp(-B_ij B_ji)`` wherever ``B_ij B_ji > t``."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    if not 0.0 < t < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    prod = B * B.T
    W = np.where(prod > t, np.exp(-prod), 0.0)
    np.fill_diagonal(W, 0.0)
    return PartialCorrGraph(W, float(t))


def connected_components(g: PartialCorrGraph) -> list[list[int]]:
    """Components as sorted node lists, ordered by their smallest member."""
    p = g.p
    seen = np.zeros(p, dtype=bool)
    comps = []
    for start in range(p):
        if seen[start]:
            continue
        seen[start] = True
        stack, comp = [start], []
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in g.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        comps.append(sorted(comp))
    return comps


@dataclass
class RootedTree:
    """Spanning tree of one component. ``parent[root] == -1``."""

    root: int
    nodes: list[int]
    parent: dict[int, int]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(
            (min(u, v), max(u, v)) for u, v in self.parent.items() if v >= 0
        )

    def weight(self, g: PartialCorrGraph) -> float:
        return float(sum(g.weights[u, v] for u, v in self.edges))

    def order(self) -> list[int]:
        """Nodes in breadth-first order from the root (parents before children)."""
        children: dict[int, list[int]] = {u: [] for u in self.nodes}
        for u, v in self.parent.items():
            if v >= 0:
                children[v].append(u)
        out, queue = [], [self.root]
        while queue:
            u = queue.pop(0)
            out.append(u)
            queue.extend(sorted(children[u]))
        return out


def _max_degree_root(g: PartialCorrGraph, nodes: list[int]) -> int:
    deg = g.degree()
    return min(nodes, key=lambda u: (-deg[u], u))


def _root_tree(nodes, adj, root) -> RootedTree:
    parent = {root: -1}
    queue = [root]
    while queue:
        u = queue.pop(0)
        for v in sorted(adj[u]):
            if v not in parent:
                parent[v] = u
                queue.append(v)
    return RootedTree(root=root, nodes=sorted(nodes), parent=parent)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def minimum_spanning_forest(g: PartialCorrGraph) -> list[RootedTree]:
    """Kruskal forest, one tree per component, rooted at its max-degree node."""
    uf = _UnionFind(g.p)
    adj: dict[int, list[int]] = {u: [] for u in range(g.p)}
    for i, j, _ in sorted(g.edges, key=lambda e: (e[2], e[0], e[1])):
        if uf.union(i, j):
            adj[i].append(j)
            adj[j].append(i)
    return [
        _root_tree(comp, adj, _max_degree_root(g, comp))
        for comp in connected_components(g)
    ]


def shortest_path_distances(g: PartialCorrGraph, root: int):
    """Dijkstra from ``root``. Returns (dist, parent) dicts over root's component."""
    if not 0 <= root < g.p:
        raise IndexError(f"root {root} out of range for p={g.p}")
    dist = {root: 0.0}
    parent = {root: -1}
    done = set()
    heap = [(0.0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v in g.neighbors(u):
            v = int(v)
            if v in done:
                continue
            nd = d + g.weights[u, v]
            if v not in dist or nd < dist[v] or (nd == dist[v] and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, parent


def shortest_path_tree(g: PartialCorrGraph, root: int) -> RootedTree:
    _, parent = shortest_path_distances(g, root)
    return RootedTree(root=root, nodes=sorted(parent), parent=parent)


def shortest_path_forest(g: PartialCorrGraph, best_root: bool = False) -> list[RootedTree]:
    """One shortest-path tree per component.

    The root is the max-degree node, or with ``best_root`` the root whose tree
    has the smallest total weight.
    """
    trees = []
    for comp in connected_components(g):
        if best_root:
            candidates = [shortest_path_tree(g, r) for r in comp]
            trees.append(min(candidates, key=lambda t: (t.weight(g), t.root)))
        else:
            trees.append(shortest_path_tree(g, _max_degree_root(g, comp)))
    return trees


def spanning_forest(g: PartialCorrGraph, mode: str = "mst") -> list[RootedTree]:
    mode = mode.lower()
    if mode == "mst":
        return minimum_spanning_forest(g)
    if mode == "spt":
        return shortest_path_forest(g)
    if mode in ("spt-best-root", "best-root"):
        return shortest_path_forest(g, best_root=True)
    raise ValueError(f"unknown tree mode {mode!r}")


def delta_factors(tree: RootedTree, B) -> dict[int, float]:
    """Ratios ``delta[i] = phi_i / phi_root`` implied by B along the tree paths.

    Symmetry of the precision matrix gives ``B[u, v] phi_u = B[v, u] phi_v`` on
    every edge, so walking from a parent ``u`` to a child ``v`` multiplies by
    ``B[u, v] / B[v, u]``.
    """
    B = np.asarray(B, dtype=float)
    delta = {tree.root: 1.0}
    for v in tree.order():
        u = tree.parent[v]
        if u < 0:
            continue
        den = B[v, u]
        if abs(den) < NEAR_ZERO:
            raise DivisionByNearZero(f"|B[{v}, {u}]| = {abs(den):.3g} on a tree edge")
        delta[v] = delta[u] * B[u, v] / den
    return delta


def parent_array(trees: list[RootedTree], p: int) -> list[int]:
    """Forest as a parent array (-1 marks roots)."""
    out = [-1] * p
    for tree in trees:
        for u, v in tree.parent.items():
            out[u] = v
    return out

