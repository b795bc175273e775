"""d-regular graph representation and the combinatorial predicates used by
the local geometry checks: balls, excess, boundary edges, and the
typical-geometry event (all moderate-radius neighborhoods nearly trees).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphFormatError(ValueError):
    """Malformed edge-list text."""


class RegularGraph:
    """Immutable simple d-regular graph on vertices 0..n-1.

    Adjacency lists are sorted tuples; membership tests go through a set of
    canonical (min, max) pairs.  Switchings construct a modified copy so
    that the original graph stays alive.
    """

    __slots__ = ("n", "d", "_adj", "_edge_set")

    def __init__(self, n: int, d: int, adj):
        if d < 3 or d > n - 1:
            raise ValueError(f"need 3 <= d <= n-1, got d={d}, n={n}")
        if (n * d) % 2 != 0:
            raise ValueError(f"n*d must be even, got n={n}, d={d}")
        adj = tuple(tuple(sorted(neigh)) for neigh in adj)
        if len(adj) != n:
            raise ValueError("adjacency list length must equal n")
        edge_set = set()
        for u, neigh in enumerate(adj):
            if len(neigh) != d or len(set(neigh)) != d:
                raise ValueError(f"vertex {u} does not have exactly {d} distinct neighbors")
            for v in neigh:
                if v == u:
                    raise ValueError(f"self-loop at vertex {u}")
                if not 0 <= v < n:
                    raise ValueError(f"neighbor {v} out of range")
                edge_set.add((u, v) if u < v else (v, u))
        for u, v in edge_set:
            if u not in adj[v] or v not in adj[u]:
                raise ValueError("adjacency is not symmetric")
        self.n = n
        self.d = d
        self._adj = adj
        self._edge_set = frozenset(edge_set)

    @classmethod
    def from_edges(cls, n: int, d: int, edges) -> "RegularGraph":
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, d, adj)

    def neighbors(self, v: int):
        return self._adj[v]

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_set

    def edges(self):
        """Sorted list of undirected edges (u, v) with u < v."""
        return sorted(self._edge_set)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v in self._edge_set:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def with_switched_edges(self, remove, add) -> "RegularGraph":
        """Copy of the graph with ``remove`` edges deleted and ``add``
        edges inserted; validates simplicity and regularity."""
        edge_set = set(self._edge_set)
        for u, v in remove:
            key = (u, v) if u < v else (v, u)
            if key not in edge_set:
                raise ValueError(f"cannot remove missing edge {key}")
            edge_set.remove(key)
        for u, v in add:
            key = (u, v) if u < v else (v, u)
            if key in edge_set:
                raise ValueError(f"cannot add duplicate edge {key}")
            if u == v:
                raise ValueError(f"cannot add self-loop at {u}")
            edge_set.add(key)
        return RegularGraph.from_edges(self.n, self.d, edge_set)

    def __eq__(self, other):
        return (isinstance(other, RegularGraph) and self.n == other.n
                and self.d == other.d and self._edge_set == other._edge_set)

    def __hash__(self):
        return hash((self.n, self.d, self._edge_set))

    def __repr__(self):
        return f"RegularGraph(n={self.n}, d={self.d})"

    # -- serialization: "N d" header then one "u v" edge per line, 0-based --

    def to_text(self) -> str:
        lines = [f"{self.n} {self.d}"]
        lines += [f"{u} {v}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RegularGraph":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise GraphFormatError("empty graph text")
        try:
            n, d = (int(tok) for tok in lines[0].split())
            edges = [tuple(int(tok) for tok in ln.split()) for ln in lines[1:]]
        except ValueError as exc:
            raise GraphFormatError(f"bad edge-list line: {exc}") from exc
        if any(len(e) != 2 for e in edges):
            raise GraphFormatError("each edge line must contain exactly two vertices")
        return cls.from_edges(n, d, edges)

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "RegularGraph":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class Ball:
    """BFS ball: all vertices within ``radius`` of ``centers`` together
    with the induced edges and the distance of each vertex to the
    centers."""

    centers: tuple
    radius: int
    vertices: tuple
    edges: tuple
    dist: dict = field(compare=False, repr=False)

    def vertex_set(self):
        return frozenset(self.vertices)


def ball(g: RegularGraph, centers, r: int, excluded=()) -> Ball:
    """Radius-r ball around a vertex set, by capped BFS.

    ``excluded`` vertices are treated as deleted (BFS neither visits nor
    crosses them), which gives balls of the vertex-removed graph.
    """
    centers = tuple(sorted(set(int(c) for c in centers)))
    if not centers:
        raise ValueError("need at least one center")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    excluded = set(excluded)
    for c in centers:
        if c in excluded:
            raise ValueError(f"center {c} is excluded")
    dist = {c: 0 for c in centers}
    queue = deque(centers)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du == r:
            continue
        for v in g.neighbors(u):
            if v not in dist and v not in excluded:
                dist[v] = du + 1
                queue.append(v)
    vertices = tuple(sorted(dist))
    vset = set(vertices)
    edges = []
    for u in vertices:
        for v in g.neighbors(u):
            if u < v and v in vset and v not in excluded:
                edges.append((u, v))
    return Ball(centers=centers, radius=r, vertices=vertices, edges=tuple(edges), dist=dist)


def excess(b: Ball) -> int:
    """Maximum number of independent cycles over the connected components
    of the ball's induced subgraph (0 iff the ball is a forest)."""
    index = {v: i for i, v in enumerate(b.vertices)}
    parent = list(range(len(b.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comp_edges = [0] * len(b.vertices)
    for u, v in b.edges:
        ru, rv = find(index[u]), find(index[v])
        if ru != rv:
            parent[ru] = rv
            comp_edges[rv] += comp_edges[ru] + 1
            comp_edges[ru] = 0
        else:
            comp_edges[ru] += 1
    comp_sizes = {}
    for i in range(len(b.vertices)):
        comp_sizes[find(i)] = comp_sizes.get(find(i), 0) + 1
    best = 0
    for root, size in comp_sizes.items():
        best = max(best, comp_edges[root] - size + 1)
    return best


def is_tree(b: Ball) -> bool:
    """True iff the ball's induced subgraph is a single tree."""
    return len(b.edges) == len(b.vertices) - 1 and excess(b) == 0


@dataclass(frozen=True)
class Parameters:
    """Geometry/scale knobs shared by the local predicates.

    ``radius`` is the tree-neighborhood radius; by default it is computed
    as floor((frak_c/4) * log_{d-1} n) and clamped from below so that
    ell <= radius always holds (the asymptotic formula is far below ell at
    desk scale).  Pass ``radius`` explicitly to override.
    """

    n: int
    d: int
    frak_c: float = 0.5
    frak_g: float = 0.1
    ell: int = 2
    radius: int = 0

    def __post_init__(self):
        if not 0.0 < self.frak_c < 1.0:
            raise ValueError("frak_c must lie in (0, 1)")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.radius == 0:
            computed = math.floor((self.frak_c / 4.0) * math.log(self.n) / math.log(self.d - 1))
            object.__setattr__(self, "radius", max(1, self.ell, computed))
        if self.radius < 1 or self.ell > self.radius:
            raise ValueError(f"need 1 <= ell <= radius, got ell={self.ell}, radius={self.radius}")

    @property
    def bad_vertex_budget(self) -> float:
        return self.n**self.frak_c

    @property
    def eta_min(self) -> float:
        """Lower bound of the admissible spectral domain, n^(-1+frak_g)."""
        return self.n ** (-1.0 + self.frak_g)

    def isolation_radius(self) -> int:
        return max(2, self.radius // 4)


@dataclass(frozen=True)
class OmegaBarReport:
    bad_vertex_count: int
    max_excess: int
    threshold: float
    passed: bool


def omega_bar_check(g: RegularGraph, params: Parameters) -> OmegaBarReport:
    """Check the typical-geometry event: at most n^frak_c vertices lack a
    tree neighborhood of the configured radius, and every such
    neighborhood has at most one independent cycle."""
    bad = 0
    worst = 0
    for v in range(g.n):
        b = ball(g, (v,), params.radius)
        e = excess(b)
        if e > 0:
            bad += 1
        worst = max(worst, e)
    return OmegaBarReport(
        bad_vertex_count=bad,
        max_excess=worst,
        threshold=params.bad_vertex_budget,
        passed=(bad <= params.bad_vertex_budget and worst <= 1),
    )


def boundary_edges(g: RegularGraph, t: Ball):
    """Oriented edges (inside, outside) with exactly one endpoint in the
    ball, sorted for determinism.  When the ball of radius ell+1 around the
    center is a tree the count is d*(d-1)**ell."""
    inside = t.vertex_set()
    out = []
    for l in t.vertices:
        for a in g.neighbors(l):
            if a not in inside:
                out.append((l, a))
    out.sort()
    return out


def distance_capped(g: RegularGraph, sources, targets, cap: int, excluded=()) -> int:
    """Smallest distance from ``sources`` to ``targets`` not exceeding
    ``cap``; returns cap+1 if every target is farther than that.  BFS stays
    inside the graph with ``excluded`` vertices removed."""
    targets = set(targets)
    excluded = set(excluded)
    sources = [s for s in set(sources) if s not in excluded]
    if any(s in targets for s in sources):
        return 0
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du == cap:
            continue
        for v in g.neighbors(u):
            if v in excluded or v in dist:
                continue
            if v in targets:
                return du + 1
            dist[v] = du + 1
            queue.append(v)
    return cap + 1
