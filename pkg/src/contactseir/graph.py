"""Mutable undirected contact graph with tagged, reversible edge removal."""

from __future__ import annotations

import logging
import math
from collections import deque
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

log = logging.getLogger(__name__)

Edge = tuple[int, int]


def canonical(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class GraphError(ValueError):
    """Raised on invalid graph mutations (bad tags, double removal, ...)."""


class ContactGraph:
    """Simple undirected graph on nodes ``0..n-1``.

    Edges removed by an intervention are parked in ``removed_ledger`` under
    the intervention's tag, so they can later be restored exactly. Every edge
    lives either in the adjacency sets or in exactly one ledger entry.

    Attributes:
        n: Number of nodes.
        contact_sampling_rate: Probability that an active edge is used for a
            contact on a given day (1.0 means every edge, every day).
        original_ids: Optional label for each node, e.g. ingested user ids or
            pre-reindexing node ids.
    """

    def __init__(self, n: int, contact_sampling_rate: float = 1.0):
        if n < 0:
            raise GraphError(f"node count must be non-negative, got {n}")
        if not 0.0 < contact_sampling_rate <= 1.0:
            raise GraphError(
                f"contact_sampling_rate must be in (0, 1], got {contact_sampling_rate}")
        self.n = n
        self.contact_sampling_rate = float(contact_sampling_rate)
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.removed_ledger: dict[str, list[Edge]] = {}
        self.original_ids: list | None = None
        self._parked: dict[Edge, str] = {}
        self._nbr_cache: list[np.ndarray | None] = [None] * n

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], **kwargs) -> ContactGraph:
        g = cls(n, **kwargs)
        for u, v in edges:
            g.add_edge(int(u), int(v))
        return g

    def copy(self) -> ContactGraph:
        g = ContactGraph.__new__(ContactGraph)
        g.n = self.n
        g.contact_sampling_rate = self.contact_sampling_rate
        g.adj = [set(s) for s in self.adj]
        g.removed_ledger = {t: list(es) for t, es in self.removed_ledger.items()}
        g.original_ids = None if self.original_ids is None else list(self.original_ids)
        g._parked = dict(self._parked)
        # cached arrays are never mutated in place, so sharing them is safe
        g._nbr_cache = list(self._nbr_cache)
        return g

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self.n:
            raise IndexError(f"node {u} out of range [0, {self.n})")

    def add_edge(self, u: int, v: int) -> None:
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise GraphError(f"self-loop ({u}, {u}) not allowed")
        if canonical(u, v) in self._parked:
            raise GraphError(
                f"edge {canonical(u, v)} is parked under tag "
                f"{self._parked[canonical(u, v)]!r}; restore it instead")
        if v in self.adj[u]:
            return
        self.adj[u].add(v)
        self.adj[v].add(u)
        self._nbr_cache[u] = None
        self._nbr_cache[v] = None

    # -- queries ----------------------------------------------------------

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self.adj), dtype=np.int64, count=self.n)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def num_edges(self) -> int:
        return sum(len(s) for s in self.adj) // 2

    def edges(self) -> list[Edge]:
        """Active edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return sorted((u, v) for u in range(self.n) for v in self.adj[u] if u < v)

    def edge_set(self) -> set[Edge]:
        return {(u, v) for u in range(self.n) for v in self.adj[u] if u < v}

    def ledgered_edges(self) -> set[Edge]:
        return set(self._parked)

    def neighbors(self, u: int) -> np.ndarray:
        """Sorted neighbor ids of ``u`` as an int64 array (cached until mutated)."""
        arr = self._nbr_cache[u]
        if arr is None:
            arr = np.fromiter(sorted(self.adj[u]), dtype=np.int64, count=len(self.adj[u]))
            self._nbr_cache[u] = arr
        return arr

    def to_csr(self) -> sparse.csr_matrix:
        rows = np.repeat(np.arange(self.n), self.degrees())
        cols = np.concatenate([self.neighbors(u) for u in range(self.n)]) if self.n else np.array([], dtype=np.int64)
        data = np.ones(len(rows), dtype=np.int8)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    # -- reversible removal -----------------------------------------------

    def remove_edges(self, edges: Iterable[Sequence[int]], tag: str) -> list[Edge]:
        """Remove active edges and park them under ``tag``.

        Removing an edge that is already parked (under any tag) or absent
        raises ``GraphError``; this catches an intervention being applied
        twice. The whole batch is validated before anything is mutated.
        Calls with an existing tag append to that tag's entry.
        """
        batch: list[Edge] = []
        seen: set[Edge] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            self._check_node(u)
            self._check_node(v)
            e = canonical(u, v)
            if e in self._parked:
                raise GraphError(f"edge {e} already removed under tag {self._parked[e]!r}")
            if e in seen or v not in self.adj[u]:
                raise GraphError(f"edge {e} is not active")
            seen.add(e)
            batch.append(e)
        for u, v in batch:
            self.adj[u].discard(v)
            self.adj[v].discard(u)
            self._nbr_cache[u] = None
            self._nbr_cache[v] = None
            self._parked[(u, v)] = tag
        self.removed_ledger.setdefault(tag, []).extend(batch)
        return batch

    def isolate(self, u: int, tag: str) -> list[Edge]:
        """Remove every active edge incident to ``u`` under ``tag``."""
        return self.remove_edges([(u, v) for v in sorted(self.adj[u])], tag)

    def restore_edges(self, tag: str) -> list[Edge]:
        if tag not in self.removed_ledger:
            raise GraphError(f"unknown removal tag {tag!r}")
        edges = self.removed_ledger.pop(tag)
        for u, v in edges:
            del self._parked[(u, v)]
            self.adj[u].add(v)
            self.adj[v].add(u)
            self._nbr_cache[u] = None
            self._nbr_cache[v] = None
        return edges

    # -- structure ----------------------------------------------------------

    def components(self) -> np.ndarray:
        """Connected-component label for each node (active edges only)."""
        _, labels = csgraph.connected_components(self.to_csr(), directed=False)
        return labels

    def subgraph(self, nodes: Sequence[int]) -> ContactGraph:
        """Induced subgraph on ``nodes`` (in the given order), re-indexed densely.

        Parked edges are dropped; ``original_ids`` maps back to this graph's
        labels.
        """
        index = {int(u): i for i, u in enumerate(nodes)}
        sub = ContactGraph(len(index), contact_sampling_rate=self.contact_sampling_rate)
        for u, i in index.items():
            nbrs = sub.adj[i]
            for v in self.adj[u]:
                j = index.get(v)
                if j is not None:
                    nbrs.add(j)
        base = self.original_ids
        sub.original_ids = [base[u] if base is not None else u for u in index]
        return sub


def giant_component(g: ContactGraph) -> ContactGraph:
    """Largest connected component, nodes re-indexed in ascending original order.

    Ties between equally large components go to the one holding the smallest
    node id.
    """
    if g.n == 0:
        raise GraphError("giant component of an empty graph")
    labels = g.components()
    sizes = np.bincount(labels)
    min_id = np.full(len(sizes), g.n, dtype=np.int64)
    np.minimum.at(min_id, labels, np.arange(g.n))
    # lexsort: last key is primary
    best = np.lexsort((min_id, -sizes))[0]
    return g.subgraph(np.flatnonzero(labels == best))


def top_degree_nodes(g: ContactGraph, fraction: float) -> list[int]:
    """The ``ceil(fraction * n)`` highest-degree nodes, ties to smaller id."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    count = min(g.n, math.ceil(fraction * g.n - 1e-9))
    deg = g.degrees()
    order = np.lexsort((np.arange(g.n), -deg))
    return [int(u) for u in order[:count]]


def bfs_distances(g: ContactGraph, source: int) -> np.ndarray:
    """Hop distances from ``source``; -1 for unreachable nodes."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in g.adj[u]:
            if dist[v] < 0:
                dist[v] = du
                queue.append(v)
    return dist


def average_shortest_path(g: ContactGraph, samples: int = 64, seed: int = 0) -> float:
    """Mean hop distance between reachable pairs, estimated from BFS sources.

    Sources are drawn uniformly without replacement; with ``samples >= n``
    the result is exact.
    """
    if g.n < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    k = min(samples, g.n)
    sources = np.sort(rng.choice(g.n, size=k, replace=False))
    dist = csgraph.shortest_path(g.to_csr(), unweighted=True, directed=False, indices=sources)
    finite = dist[np.isfinite(dist) & (dist > 0)]
    return float(finite.mean()) if finite.size else 0.0


# -- edge-list files ----------------------------------------------------------

def read_edgelist(path: str | Path, n: int | None = None) -> ContactGraph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` are ignored. Self-loops and duplicate edges are
    dropped and counted in a single warning. The node count is ``n`` if given,
    otherwise one past the largest id seen.
    """
    edges: set[Edge] = set()
    loops = dups = 0
    max_id = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected two node ids, got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
            max_id = max(max_id, u, v)
            if u == v:
                loops += 1
                continue
            e = canonical(u, v)
            if e in edges:
                dups += 1
                continue
            edges.add(e)
    if loops or dups:
        log.warning("%s: dropped %d self-loops and %d duplicate edges", path, loops, dups)
    size = max_id + 1 if n is None else n
    return ContactGraph.from_edges(size, sorted(edges))


def write_edgelist(g: ContactGraph, path: str | Path, header: str | None = None) -> None:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append(f"# nodes {g.n} edges {g.num_edges()}")
    lines.extend(f"{u} {v}" for u, v in g.edges())
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
