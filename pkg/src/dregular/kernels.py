"""Closed-form spectral kernels for the d-regular ensemble.

Everything in this module is deterministic, pure math: the Stieltjes
transforms of the semicircle and Kesten-McKay laws, Green's functions of
infinite trees, weighted Green's-function extensions of finite graphs, and
the self-consistent maps obtained by truncating trees at a finite depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

COND_LIMIT = 1e12

# Below this size the weighted operator is inverted densely; above it we
# keep a sparse LU and solve columns on demand.
_DENSE_OPERATOR_LIMIT = 1200


class SingularOperatorError(ValueError):
    """Weighted operator is numerically singular (spectral parameter too
    close to a resonance of the finite graph)."""


@dataclass(frozen=True)
class SpectralPoint:
    """A spectral parameter in the upper half-plane.

    ``eta`` (the imaginary part) and ``kappa`` (distance of the real part
    to the nearest spectral edge +-2) are always derived from ``z``.
    """

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not np.isfinite(z.real) or not np.isfinite(z.imag):
            raise ValueError("spectral parameter must be finite")
        if z.imag <= 0.0:
            raise ValueError(f"spectral parameter must lie in the upper half-plane, got {z}")
        object.__setattr__(self, "z", z)

    @property
    def eta(self) -> float:
        return self.z.imag

    @property
    def kappa(self) -> float:
        return min(abs(self.z.real - 2.0), abs(self.z.real + 2.0))


def _as_z(p) -> complex:
    """Accept a SpectralPoint or a bare complex number with Im > 0."""
    z = complex(p.z) if isinstance(p, SpectralPoint) else complex(p)
    if z.imag <= 0.0:
        raise ValueError(f"spectral parameter must lie in the upper half-plane, got {z}")
    return z


def _check_degree(d: int) -> int:
    if int(d) != d or d < 3:
        raise ValueError(f"degree must be an integer >= 3, got {d}")
    return int(d)


def sqrt_shifted(p) -> complex:
    """The square root of z^2 - 4 on the branch compatible with Im m > 0.

    Chosen so that sqrt(z^2-4) ~ z at infinity, rather than by the library
    principal branch.
    """
    z = _as_z(p)
    s = np.sqrt(z * z - 4.0)
    # (-z + s)/2 must land in the upper half-plane
    if ((-z + s) / 2.0).imag <= 0.0:
        s = -s
    return complex(s)


def stieltjes_semicircle(p) -> complex:
    """Stieltjes transform of the semicircle law on [-2, 2].

    Returns the root m of m^2 + z m + 1 = 0 with Im m > 0.
    """
    z = _as_z(p)
    return complex((-z + sqrt_shifted(z)) / 2.0)


def stieltjes_kesten_mckay(p, d: int) -> complex:
    """Stieltjes transform of the Kesten-McKay law for degree d.

    Evaluated as 1 / (-z - d/(d-1) * m_sc(z)), which keeps the branch
    choice tied to the semicircle transform.
    """
    d = _check_degree(d)
    z = _as_z(p)
    msc = stieltjes_semicircle(z)
    return complex(1.0 / (-z - d / (d - 1.0) * msc))


def km_density(x, d: int):
    """Kesten-McKay density at x (vanishes outside [-2, 2]).

    Accepts scalars or numpy arrays.
    """
    d = _check_degree(d)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 2.0
    xs = np.where(inside, x, 0.0)
    val = (1.0 + 1.0 / (d - 1.0) - xs * xs / d) ** (-1.0) * np.sqrt(4.0 - xs * xs) / (2.0 * np.pi)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def edge_constant(d: int) -> float:
    """Square-root edge coefficient of the Kesten-McKay density."""
    d = _check_degree(d)
    return d * (d - 1.0) / (d - 2.0) ** 2


def tree_green_regular(dist: int, p, d: int) -> complex:
    """Green's-function entry of the infinite d-regular tree between two
    vertices at the given graph distance."""
    d = _check_degree(d)
    if dist < 0:
        raise ValueError("distance must be nonnegative")
    z = _as_z(p)
    msc = stieltjes_semicircle(z)
    md = stieltjes_kesten_mckay(z, d)
    return complex(md * (-msc / np.sqrt(d - 1.0)) ** dist)


def tree_green_ary(dist: int, anc: int, p, d: int) -> complex:
    """Green's-function entry of the infinite (d-1)-ary tree.

    ``anc`` is the distance from the common ancestor of the two vertices
    to the root.  For entries involving the root (anc = 0) this reduces to
    m_sc * (-m_sc/sqrt(d-1))**dist.
    """
    d = _check_degree(d)
    if dist < 0 or anc < 0:
        raise ValueError("distances must be nonnegative")
    z = _as_z(p)
    msc = stieltjes_semicircle(z)
    md = stieltjes_kesten_mckay(z, d)
    ratio = -msc / np.sqrt(d - 1.0)
    return complex(md * (1.0 - ratio ** (2 * anc + 2)) * ratio**dist)


# ---------------------------------------------------------------------------
# Weighted Green's-function extension of a finite graph
# ---------------------------------------------------------------------------


class WeightedTreeOperator:
    """Inverse of the weighted operator of a finite graph.

    The operator is -z*I + A/sqrt(d-1) - (d*I - D)*Delta/(d-1), where A and
    D are the adjacency and degree matrices of the graph.  Vertices in
    ``removed`` are deleted from the rows/columns while their neighbors
    keep the original degrees, so a removal disconnects components without
    altering boundary weights.
    """

    def __init__(self, n: int, edges, point, d: int, delta: complex,
                 removed=(), degrees=None):
        d = _check_degree(d)
        z = _as_z(point)
        delta = complex(delta)
        removed = frozenset(int(v) for v in removed)
        edges = [(int(u), int(v)) for u, v in edges]
        for u, v in edges:
            if u == v:
                raise ValueError("graph must be simple (self-loop found)")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge endpoint out of range")
        if degrees is None:
            deg = np.zeros(n, dtype=np.int64)
            for u, v in edges:
                deg[u] += 1
                deg[v] += 1
        else:
            deg = np.asarray(degrees, dtype=np.int64)
            if deg.shape != (n,):
                raise ValueError("degrees must have one entry per vertex")
        if deg.max(initial=0) > d:
            raise ValueError(f"graph has a vertex of degree > d = {d}")

        kept = [v for v in range(n) if v not in removed]
        if not kept:
            raise ValueError("all vertices removed")
        pos = {v: i for i, v in enumerate(kept)}
        nk = len(kept)

        rows, cols, vals = [], [], []
        w = 1.0 / np.sqrt(d - 1.0)
        for u, v in edges:
            if u in removed or v in removed:
                continue
            rows += [pos[u], pos[v]]
            cols += [pos[v], pos[u]]
            vals += [w, w]
        diag = -z - (d - deg[kept]) * delta / (d - 1.0)
        rows += list(range(nk))
        cols += list(range(nk))
        vals += list(diag)
        mat = sp.csc_matrix(
            (np.asarray(vals, dtype=np.complex128), (rows, cols)), shape=(nk, nk)
        )

        self.n = n
        self.d = d
        self.point = point if isinstance(point, SpectralPoint) else SpectralPoint(z)
        self.delta = delta
        self.removed = removed
        self.kept = kept
        self._pos = pos
        self._op = mat
        self._dense = None
        self._lu = None
        self._columns = {}

        if nk <= _DENSE_OPERATOR_LIMIT:
            dense = mat.toarray()
            cond = np.linalg.cond(dense, 1)
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise SingularOperatorError(
                    f"weighted operator condition number {cond:.3e} exceeds {COND_LIMIT:.0e}"
                )
            self._dense = np.linalg.inv(dense)
        else:
            try:
                self._lu = spla.splu(mat)
            except RuntimeError as exc:
                raise SingularOperatorError(f"sparse factorization failed: {exc}") from exc
            inv_op = spla.LinearOperator(
                (nk, nk),
                matvec=lambda x: self._lu.solve(x.astype(np.complex128)),
                rmatvec=lambda x: self._lu.solve(x.astype(np.complex128), trans="H"),
                dtype=np.complex128,
            )
            cond = spla.onenormest(inv_op) * abs(mat).sum(axis=0).max()
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise SingularOperatorError(
                    f"weighted operator condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}"
                )

    def _column(self, v: int) -> np.ndarray:
        j = self._pos[v]
        if self._dense is not None:
            return self._dense[:, j]
        col = self._columns.get(j)
        if col is None:
            e = np.zeros(len(self.kept), dtype=np.complex128)
            e[j] = 1.0
            col = self._lu.solve(e)
            self._columns[j] = col
        return col

    def entry(self, i: int, j: int) -> complex:
        """Green's-function entry between two original vertex labels."""
        if i in self.removed or j in self.removed:
            raise KeyError(f"vertex {i if i in self.removed else j} was removed")
        return complex(self._column(j)[self._pos[i]])

    def block(self, vertices) -> np.ndarray:
        """Dense sub-block of the inverse on the given vertex labels."""
        vertices = list(vertices)
        out = np.empty((len(vertices), len(vertices)), dtype=np.complex128)
        cols = {v: self._column(v) for v in set(vertices)}
        for b, v in enumerate(vertices):
            col = cols[v]
            for a, u in enumerate(vertices):
                out[a, b] = col[self._pos[u]]
        return out

    @property
    def matrix(self) -> np.ndarray:
        """Full dense inverse, indexed by the kept vertices."""
        if self._dense is None:
            eye = np.eye(len(self.kept), dtype=np.complex128)
            self._dense = self._lu.solve(eye)
        return self._dense


def weighted_tree_operator(n: int, edges, p, d: int, delta,
                           removed=(), degrees=None) -> WeightedTreeOperator:
    """Build the Green's-function extension of a finite graph.

    Args:
        n: number of vertices (labels 0..n-1).
        edges: iterable of undirected edges.
        p: spectral parameter (SpectralPoint or complex with Im > 0).
        d: ambient degree; the boundary weight per vertex is
           (d - deg) * delta / (d - 1).
        delta: complex boundary weight.
        removed: vertex labels whose rows/columns are deleted (degrees of
           the remaining vertices are kept from the full graph).
        degrees: optional explicit degree sequence overriding the one
           computed from ``edges``.
    """
    return WeightedTreeOperator(n, edges, p, d, delta, removed=removed, degrees=degrees)


# ---------------------------------------------------------------------------
# Truncated-tree self-consistent maps
# ---------------------------------------------------------------------------


def regular_tree_ball(d: int, ell: int):
    """Truncated d-regular tree of depth ell rooted at vertex 0.

    Returns (n, edges, depths).  The root has d children, every interior
    vertex has d-1 children.
    """
    d = _check_degree(d)
    if ell < 0:
        raise ValueError("depth must be nonnegative")
    return _grow_tree(d, ell, root_children=d)


def ary_tree_ball(d: int, ell: int):
    """Truncated (d-1)-ary tree of depth ell rooted at vertex 0."""
    d = _check_degree(d)
    if ell < 0:
        raise ValueError("depth must be nonnegative")
    return _grow_tree(d, ell, root_children=d - 1)


def _grow_tree(d: int, ell: int, root_children: int):
    edges = []
    depths = [0]
    frontier = [0]
    nxt = 1
    for depth in range(1, ell + 1):
        children = root_children if depth == 1 else d - 1
        new_frontier = []
        for parent in frontier:
            for _ in range(children):
                edges.append((parent, nxt))
                depths.append(depth)
                new_frontier.append(nxt)
                nxt += 1
        frontier = new_frontier
    return nxt, edges, depths


def _boundary_chain(z: complex, delta: complex, steps: int) -> complex:
    """Diagonal Green's entry at the top of a depth-``steps`` subtree whose
    leaves carry weight -delta.  Exact Schur recursion for trees."""
    g = 1.0 / (-z - delta)
    for _ in range(steps):
        g = 1.0 / (-z - g)
    return g


def y_ell(delta, p, ell: int, d: int, method: str = "recursion") -> complex:
    """Root Green's entry of the depth-ell truncated (d-1)-ary tree with
    boundary weight delta: the contraction map whose fixed point is the
    semicircle transform.
    """
    d = _check_degree(d)
    if ell < 1:
        raise ValueError("depth must be >= 1")
    z = _as_z(p)
    delta = complex(delta)
    if method == "recursion":
        # Root and interior vertices carry no weight; the d-1 children per
        # vertex cancel the 1/(d-1) edge weight, so the chain is scalar.
        return _boundary_chain(z, delta, ell)
    if method == "matrix":
        n, edges, _ = ary_tree_ball(d, ell)
        # View the root as a vertex of the d-regular tree whose parent has
        # been removed: append the parent and delete its row/column, which
        # leaves the root unweighted (full degree d) and puts weight -delta
        # exactly on the depth-ell boundary.
        edges = edges + [(0, n)]
        op = weighted_tree_operator(n + 1, edges, z, d, delta, removed=(n,))
        return op.entry(0, 0)
    raise ValueError(f"unknown method {method!r}")


def x_ell(delta, p, ell: int, d: int, method: str = "recursion") -> complex:
    """Root Green's entry of the depth-ell truncated d-regular tree with
    boundary weight delta; at delta = m_sc this equals the Kesten-McKay
    transform."""
    d = _check_degree(d)
    if ell < 1:
        raise ValueError("depth must be >= 1")
    z = _as_z(p)
    delta = complex(delta)
    if method == "recursion":
        g = _boundary_chain(z, delta, ell - 1)
        return 1.0 / (-z - d / (d - 1.0) * g)
    if method == "matrix":
        n, edges, _ = regular_tree_ball(d, ell)
        op = weighted_tree_operator(n, edges, z, d, delta)
        return op.entry(0, 0)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Taylor coefficients of the ary-tree map around the semicircle fixed
    point: y_ell(delta) - m_sc = linear*(delta-m_sc) + quadratic*(delta-m_sc)^2
    + O(ell^5 |delta-m_sc|^3)."""

    linear: complex
    quadratic: complex


def y_expansion_coeffs(p, ell: int, d: int) -> ExpansionCoefficients:
    d = _check_degree(d)
    if ell < 1:
        raise ValueError("depth must be >= 1")
    z = _as_z(p)
    msc = stieltjes_semicircle(z)
    md = stieltjes_kesten_mckay(z, d)
    m2 = msc ** (2 * ell + 2)
    linear = m2
    quadratic = m2 * md * ((1.0 - m2) / (d - 1.0)
                           + (d - 2.0) / (d - 1.0) * (1.0 - m2) / (1.0 - msc**2))
    return ExpansionCoefficients(linear=complex(linear), quadratic=complex(quadratic))
