"""Local resampling: switch the boundary edges of a radius-ell ball with
uniformly sampled far-away edges.

A proposal draws one candidate edge per boundary edge of the ball; an
index is admissible when the candidate's neighborhood (in the graph with
the ball removed) is a tree and all candidate triples are pairwise
isolated.  Admissible indices are switched simultaneously; the rest stay
in place, which is what makes (G, switched(G)) an exchangeable pair.

The module also carries the low-rank algebra of a switch: the rank-four
perturbation descriptors, the factorization of the adjacency difference,
the local-forest combination matrix F, and the resolvent-difference
expansion in powers of (G - L) F.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .graphs import Ball, Parameters, RegularGraph, ball, boundary_edges, distance_capped
from .kernels import stieltjes_semicircle, weighted_tree_operator
from .resolvent import NormalizedAdjacency, ResolventCache, eigenvalues
from .samplers import SamplerConfig, sample, stream

log = logging.getLogger(__name__)


class SwitchingPreconditionError(RuntimeError):
    """Local geometry too tangled for the forest-based operators."""


@dataclass(frozen=True)
class ResamplingData:
    """One resampling proposal around a center vertex.

    ``boundary[k]`` is the oriented boundary edge (l, a) with l inside the
    ball, ``sampled[k]`` the candidate oriented edge (b, c) drawn from the
    graph with the ball removed, and ``admissible[k]`` the indicator that
    switching index k is performed.
    """

    center: int
    ell: int
    ball: Ball
    boundary: tuple
    sampled: tuple
    admissible: tuple
    isolation_radius: int

    @property
    def mu(self) -> int:
        return len(self.boundary)

    @property
    def admissible_indices(self) -> tuple:
        return tuple(k for k, ok in enumerate(self.admissible) if ok)

    def switch_quadruples(self):
        """(l, a, b, c) for each admissible index."""
        return [
            (self.boundary[k][0], self.boundary[k][1], self.sampled[k][0], self.sampled[k][1])
            for k in self.admissible_indices
        ]


def propose(g: RegularGraph, o: int, params: Parameters, rng,
            isolation_radius: int | None = None) -> ResamplingData:
    """Draw resampling data around vertex o.

    Candidates are independent uniform oriented edges of the graph with
    the radius-ell ball removed; repetitions are allowed.  Admissibility
    of index k requires (1) the isolation-radius ball around
    {a_k, b_k, c_k} in the removed graph, plus the edge {a_k, b_k}, to be
    a tree, and (2) every other triple to be farther than the isolation
    radius.
    """
    t = ball(g, (o,), params.ell)
    bnd = tuple(boundary_edges(g, t))
    inside = t.vertex_set()
    pool = [(u, v) for u, v in _directed_pairs(g) if u not in inside and v not in inside]
    if not pool:
        raise ValueError("graph with the ball removed has no edges")
    riso = params.isolation_radius() if isolation_radius is None else int(isolation_radius)
    idx = rng.integers(0, len(pool), size=len(bnd))
    sampled = tuple(pool[int(k)] for k in idx)
    admissible = _admissibility(g, inside, bnd, sampled, riso)
    return ResamplingData(
        center=o,
        ell=params.ell,
        ball=t,
        boundary=bnd,
        sampled=sampled,
        admissible=tuple(admissible),
        isolation_radius=riso,
    )


def _directed_pairs(g: RegularGraph):
    for u, v in g.edges():
        yield (u, v)
        yield (v, u)


def _admissibility(g, inside, bnd, sampled, riso):
    mu = len(bnd)
    triples = [
        (bnd[k][1], sampled[k][0], sampled[k][1]) for k in range(mu)
    ]
    ok = []
    for k in range(mu):
        a, b, c = triples[k]
        ok.append(
            _tree_condition(g, inside, a, b, c, riso)
            and _isolated(g, inside, triples, k, riso)
        )
    return ok

def _tree_condition(g, inside, a, b, c, riso):
    nb = ball(g, {a, b, c}, riso, excluded=inside)
    extra = 0 if g.has_edge(a, b) else 1
    # tree <=> connected and acyclic; components all touch a center, and
    # adding {a, b} merges a's component into b's, so count edges only
    return len(nb.edges) + extra == len(nb.vertices) - 1


def _isolated(g, inside, triples, k, riso):
    mine = set(triples[k])
    others = set()
    for j, t in enumerate(triples):
        if j == k:
            continue
        if mine.intersection(t):
            return False  # shared vertex: distance zero
        others.update(t)
    if not others:
        return True
    return distance_capped(g, mine, others, riso, excluded=inside) > riso


def apply(g: RegularGraph, s: ResamplingData) -> RegularGraph:
    """Perform the admissible switchings; inadmissible indices are left in
    place.  Defensive checks re-verify each switch and skip (with a
    warning) instead of corrupting the graph."""
    remove, add = [], []
    planned_add = set()
    for l, a, b, c in s.switch_quadruples():
        quad = {l, a, b, c}
        new1 = (min(l, c), max(l, c))
        new2 = (min(a, b), max(a, b))
        if (len(quad) != 4 or not g.has_edge(l, a) or not g.has_edge(b, c)
                or g.has_edge(*new1) or g.has_edge(*new2)
                or new1 in planned_add or new2 in planned_add):
            log.warning(
                "skipping conflicting switch (l=%d, a=%d, b=%d, c=%d); "
                "isolation radius too small for this graph", l, a, b, c)
            continue
        remove += [(l, a), (b, c)]
        add += [new1, new2]
        planned_add.update((new1, new2))
    if not remove:
        return g
    return g.with_switched_edges(remove, add)


def reverse_data(s: ResamplingData, switched: RegularGraph) -> ResamplingData:
    """Resampling data that undoes the switch: boundary edge (l, c) with
    candidate (b, a) for each admissible index, unchanged otherwise.  The
    admissibility flags are carried over."""
    boundary, sampled = [], []
    for k in range(s.mu):
        l, a = s.boundary[k]
        b, c = s.sampled[k]
        if s.admissible[k]:
            boundary.append((l, c))
            sampled.append((b, a))
        else:
            boundary.append((l, a))
            sampled.append((b, c))
    t = ball(switched, (s.center,), s.ell)
    return ResamplingData(
        center=s.center,
        ell=s.ell,
        ball=t,
        boundary=tuple(boundary),
        sampled=tuple(sampled),
        admissible=s.admissible,
        isolation_radius=s.isolation_radius,
    )


# ---------------------------------------------------------------------------
# Graph statistics for the exchangeability test
# ---------------------------------------------------------------------------


def second_eigenvalue(g: RegularGraph) -> float:
    lam = eigenvalues(NormalizedAdjacency(g))
    return float(lam[1])


def triangle_count(g: RegularGraph) -> float:
    count = 0
    for u, v in g.edges():
        nu = set(g.neighbors(u))
        count += sum(1 for w in g.neighbors(v) if w in nu)
    return count / 3.0


def edge_indicator(x: int, y: int):
    def stat(g: RegularGraph) -> float:
        return 1.0 if g.has_edge(x, y) else 0.0

    return stat


def exchangeability_test(cfg: SamplerConfig, params: Parameters, statistic,
                         samples: int, center: int = 0) -> dict:
    """Draw (G, switched(G)) pairs and test that the statistic has the
    same law on both coordinates.

    Returns the two-sample Kolmogorov-Smirnov p-value, a signed-rank
    p-value for symmetry of the paired differences, and the sample means.
    """
    xs, ys = [], []
    for m in range(samples):
        g = sample(cfg, stream(cfg.seed, m, 0))
        s = propose(g, center, params, stream(cfg.seed, m, 1))
        gt = apply(g, s)
        xs.append(statistic(g))
        ys.append(statistic(gt))
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    if np.all(xs == xs[0]) and np.all(ys == ys[0]) and xs[0] == ys[0]:
        ks_p = 1.0
    else:
        ks_p = float(scipy.stats.ks_2samp(xs, ys, method="asymp").pvalue)
    diffs = xs - ys
    if np.all(diffs == 0.0):
        paired_p = 1.0
    else:
        paired_p = float(scipy.stats.wilcoxon(diffs, zero_method="zsplit").pvalue)
    return {
        "samples": samples,
        "ks_pvalue": ks_p,
        "paired_pvalue": paired_p,
        "mean_original": float(xs.mean()),
        "mean_switched": float(ys.mean()),
        "std_original": float(xs.std()),
    }


# ---------------------------------------------------------------------------
# Low-rank algebra of a switch
# ---------------------------------------------------------------------------


def perturbation_descriptors(s: ResamplingData):
    """Rank-four symmetric descriptors, one per admissible switch: the
    entry pattern (+1 on {l,a} and {b,c}, -1 on {l,c} and {a,b}) over
    sqrt(d-1).  The switched-minus-original adjacency difference equals
    minus their sum."""
    return s.switch_quadruples()


def _xi_matrix(quad, pos, d) -> np.ndarray:
    l, a, b, c = quad
    m = np.zeros((len(pos), len(pos)), dtype=np.complex128)
    w = 1.0 / np.sqrt(d - 1.0)
    for (u, v, sign) in ((l, a, +1), (b, c, +1), (l, c, -1), (a, b, -1)):
        m[pos[u], pos[v]] += sign * w
        m[pos[v], pos[u]] += sign * w
    return m


def _local_forest(g: RegularGraph, s: ResamplingData, switched: bool):
    """Vertex list and edge list of the ball-plus-data forest.

    Edges are the induced ball edges plus, per index, either the original
    pair {l,a}, {b,c} or (for switched admissible indices) {l,c}, {a,b}.
    """
    verts = set(s.ball.vertices)
    for k in range(s.mu):
        verts.add(s.boundary[k][1])
        verts.update(s.sampled[k])
    verts = sorted(verts)
    edges = set((u, v) if u < v else (v, u) for u, v in s.ball.edges)
    for k in range(s.mu):
        l, a = s.boundary[k]
        b, c = s.sampled[k]
        if switched and s.admissible[k]:
            pairs = ((l, c), (a, b))
        else:
            pairs = ((l, a), (b, c))
        for u, v in pairs:
            edges.add((u, v) if u < v else (v, u))
    return verts, sorted(edges)


@dataclass
class SwitchOperator:
    """Algebraic data of one applied resampling: support vertices, the
    low-rank factorization U V^T of the adjacency difference, the
    combination matrix F (sum of descriptors plus their second-order
    chain through the switched local operator), and the residual of the
    closed-form identity F = -U (I + V^T L U)^{-1} V^T."""

    support: tuple
    quadruples: tuple
    u_factor: np.ndarray
    v_factor: np.ndarray
    f_matrix: np.ndarray
    f_woodbury: np.ndarray
    identity_residual: float
    forest_vertices: tuple
    local_original: np.ndarray
    local_switched: np.ndarray


def check_forest_preconditions(g: RegularGraph, s: ResamplingData,
                               require_full_admissibility: bool = False) -> None:
    """Raise unless the local geometry supports the forest operators: the
    radius-(ell+1) ball around the center must be a tree, and optionally
    every index must be admissible."""
    wide = ball(g, (s.center,), s.ell + 1)
    if len(wide.edges) != len(wide.vertices) - 1:
        raise SwitchingPreconditionError("ball of radius ell+1 around the center is not a tree")
    if require_full_admissibility and len(s.admissible_indices) != s.mu:
        raise SwitchingPreconditionError("not every switching index is admissible")


def woodbury_f(g: RegularGraph, s: ResamplingData, p) -> SwitchOperator:
    """Build the combination matrix F of an applied resampling and verify
    its closed form.

    F is assembled from the descriptors and the switched local operator
    (boundary weight m_sc(z)); the closed form -U (I + V^T L U)^{-1} V^T
    uses the unswitched local operator.  Their maximum entry difference is
    reported in ``identity_residual``.
    """
    check_forest_preconditions(g, s)
    msc = stieltjes_semicircle(p)
    quads = tuple(s.switch_quadruples())

    verts, edges_orig = _local_forest(g, s, switched=False)
    _, edges_switch = _local_forest(g, s, switched=True)
    pos = {v: i for i, v in enumerate(verts)}
    nf = len(verts)
    relabeled_orig = [(pos[u], pos[v]) for u, v in edges_orig]
    relabeled_switch = [(pos[u], pos[v]) for u, v in edges_switch]
    op_orig = weighted_tree_operator(nf, relabeled_orig, p, g.d, msc)
    op_switch = weighted_tree_operator(nf, relabeled_switch, p, g.d, msc)
    l_orig = op_orig.matrix
    l_switch = op_switch.matrix

    if quads:
        support = sorted({v for quad in quads for v in quad})
    else:
        support = []
    xi_total = np.zeros((nf, nf), dtype=np.complex128)
    xis = []
    for quad in quads:
        xi = _xi_matrix(quad, pos, g.d)
        xis.append(xi)
        xi_total += xi

    f_direct = xi_total.copy()
    for xa in xis:
        for xb in xis:
            f_direct += xa @ l_switch @ xb

    u_cols, v_cols = [], []
    w = 1.0 / np.sqrt(g.d - 1.0)
    for l, a, b, c in quads:
        u1 = np.zeros(nf)
        u1[pos[l]] = 1.0
        u1[pos[b]] = -1.0
        u2 = np.zeros(nf)
        u2[pos[a]] = 1.0
        u2[pos[c]] = -1.0
        # U V^T must equal the switched-minus-original difference, i.e.
        # minus the descriptor sum
        u_cols += [u1, u2]
        v_cols += [-w * u2, -w * u1]
    if u_cols:
        u_factor = np.column_stack(u_cols)
        v_factor = np.column_stack(v_cols)
        core = np.eye(u_factor.shape[1], dtype=np.complex128) + v_factor.T @ l_orig @ u_factor
        f_wood = -(u_factor @ np.linalg.solve(core, v_factor.T))
    else:
        u_factor = np.zeros((nf, 0))
        v_factor = np.zeros((nf, 0))
        f_wood = np.zeros((nf, nf), dtype=np.complex128)

    residual = float(np.max(np.abs(f_direct - f_wood))) if nf else 0.0
    return SwitchOperator(
        support=tuple(support),
        quadruples=quads,
        u_factor=u_factor,
        v_factor=v_factor,
        f_matrix=f_direct,
        f_woodbury=f_wood,
        identity_residual=residual,
        forest_vertices=tuple(verts),
        local_original=l_orig,
        local_switched=l_switch,
    )


def resolvent_update_expansion(cache_g: ResolventCache, cache_gt: ResolventCache,
                               sw: SwitchOperator, order: int,
                               sample_entries: int = 50, rng=None) -> dict:
    """Compare partial sums of the resolvent-difference expansion
    sum_k G F ((G - L) F)^k G against the directly computed difference on
    sampled entries.

    Returns the per-order maximum errors; emits a divergence warning when
    the errors grow with the order.
    """
    if cache_g.point.z != cache_gt.point.z:
        raise ValueError("both resolvents must be evaluated at the same z")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = cache_g.h.n
    verts = list(sw.forest_vertices)
    vpos = {v: i for i, v in enumerate(verts)}
    g_full = cache_g.matrix
    diff = cache_gt.matrix - g_full

    f_block = sw.f_matrix
    g_block = g_full[np.ix_(verts, verts)]
    g_circ = g_block - sw.local_original

    pairs = [(int(rng.integers(n)), int(rng.integers(n))) for _ in range(sample_entries)]
    rows = np.asarray([w for w, _ in pairs])
    cols = np.asarray([w for _, w in pairs])
    g_rows = g_full[rows][:, verts]
    g_cols = g_full[verts][:, cols]
    target = diff[rows, cols]

    errors = []
    term = f_block
    accum = term.copy()
    for k in range(order + 1):
        approx = np.einsum("ij,jk,ki->i", g_rows, accum, g_cols)
        errors.append(float(np.max(np.abs(approx - target))))
        term = term @ g_circ @ f_block
        accum = accum + term
    diverging = len(errors) >= 3 and errors[-1] > errors[0]
    if diverging:
        log.warning("expansion errors grow with the order; local neighborhoods "
                    "are likely not tree-like at this z")
    return {
        "orders": list(range(order + 1)),
        "errors": errors,
        "diverging": diverging,
        "entries": sample_entries,
    }
