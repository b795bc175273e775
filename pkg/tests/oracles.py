"""Independent oracles shared by the test modules.

Everything here is deliberately brute force: enumeration, quadratic
formulas, dense linear algebra from first principles.  The oracles never
call the code paths they are used to check.
"""

import itertools

import numpy as np


def semicircle_roots(z, pick_upper=True):
    """Solve m^2 + z*m + 1 = 0 by the quadratic formula and return the
    upper-half-plane root."""
    disc = np.sqrt(complex(z * z - 4.0))
    roots = [(-z + disc) / 2.0, (-z - disc) / 2.0]
    ups = [r for r in roots if r.imag > 0]
    assert len(ups) == 1
    return ups[0] if pick_upper else roots


def km_radical(z, d):
    """Explicit radical form of the Kesten-McKay transform, with the
    branch of sqrt(z^2-4) chosen to keep Im > 0."""
    s = np.sqrt(complex(z * z - 4.0))
    if ((-z + s) / 2.0).imag <= 0:
        s = -s
    return (d - 1.0) * (-(d - 2.0) * z + d * s) / (2.0 * (d * d - (d - 1.0) * z * z))


def enumerate_labeled_regular(n, d):
    """All labeled simple d-regular graphs on n vertices, as frozensets of
    edges, by brute force over edge subsets."""
    all_edges = list(itertools.combinations(range(n), 2))
    want = n * d // 2
    out = []
    for subset in itertools.combinations(range(len(all_edges)), want):
        deg = [0] * n
        for k in subset:
            u, v = all_edges[k]
            deg[u] += 1
            deg[v] += 1
        if all(x == d for x in deg):
            out.append(frozenset(all_edges[k] for k in subset))
    return out


def k4_resolvent(z):
    """Closed-form resolvent of the normalized K4 adjacency from its two
    eigenprojections."""
    j = np.ones((4, 4)) / 4.0
    p_perp = np.eye(4) - j
    lam_top = 3.0 / np.sqrt(2.0)
    lam_rest = -1.0 / np.sqrt(2.0)
    return j / (lam_top - z) + p_perp / (lam_rest - z)


def dense_tree_operator(n, edges, z, d, delta, degrees=None, removed=()):
    """Direct dense build of -z*I + A/sqrt(d-1) - (d*I - D)*delta/(d-1),
    inverted with numpy; removed rows/columns deleted, original degrees
    kept."""
    a = np.zeros((n, n), dtype=complex)
    for u, v in edges:
        a[u, v] += 1.0
        a[v, u] += 1.0
    if degrees is None:
        deg = a.sum(axis=1).real
    else:
        deg = np.asarray(degrees, dtype=float)
    m = -z * np.eye(n) + a / np.sqrt(d - 1.0) - np.diag((d - deg) * delta / (d - 1.0))
    keep = [v for v in range(n) if v not in set(removed)]
    return keep, np.linalg.inv(m[np.ix_(keep, keep)])
