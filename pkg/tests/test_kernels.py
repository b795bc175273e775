import numpy as np
import pytest
import scipy.integrate

from dregular import (
    SingularOperatorError,
    SpectralPoint,
    edge_constant,
    km_density,
    stieltjes_kesten_mckay,
    stieltjes_semicircle,
    tree_green_ary,
    tree_green_regular,
    weighted_tree_operator,
    x_ell,
    y_ell,
    y_expansion_coeffs,
)
from dregular.kernels import ary_tree_ball, regular_tree_ball

from oracles import dense_tree_operator, km_radical, semicircle_roots

Z_GRID = [2j, 1j, 0.5 + 0.3j, -1.7 + 0.05j, 2.0 + 0.05j, -2.0 + 0.8j, 3.1 + 1.2j,
          0.1 + 0.07j, 1.99 + 0.6j, -0.4 + 2.5j]


def test_spectral_point_invariants():
    p = SpectralPoint(1.5 + 0.25j)
    assert p.eta == 0.25
    assert p.kappa == pytest.approx(0.5)
    with pytest.raises(ValueError):
        SpectralPoint(1.0 - 0.1j)
    with pytest.raises(ValueError):
        SpectralPoint(2.0)


def test_semicircle_frozen_values():
    # quadratic-formula oracle, frozen
    assert stieltjes_semicircle(2j) == pytest.approx(1j * (np.sqrt(2) - 1), abs=1e-14)
    assert stieltjes_semicircle(1j) == pytest.approx(1j * (np.sqrt(5) - 1) / 2, abs=1e-14)
    # near the center of the spectrum the transform tends to i
    assert stieltjes_semicircle(1e-9j) == pytest.approx(1j, abs=1e-8)


def test_semicircle_solves_quadratic_on_grid():
    for z in Z_GRID:
        m = stieltjes_semicircle(z)
        assert abs(m * m + z * m + 1) < 1e-12
        assert m.imag > 0
        assert m == pytest.approx(semicircle_roots(z), abs=1e-12)


def test_kesten_mckay_matches_radical_formula():
    for d in (3, 4, 5, 7):
        for z in Z_GRID:
            m = stieltjes_kesten_mckay(z, d)
            assert m == pytest.approx(km_radical(z, d), abs=1e-12)
            assert m.imag > 0


def test_kesten_mckay_small_z_limit():
    assert stieltjes_kesten_mckay(1e-8j, 3) == pytest.approx((2 / 3) * 1j, abs=1e-6)


def test_kesten_mckay_large_d_approaches_semicircle():
    z = 0.7 + 0.4j
    msc = stieltjes_semicircle(z)
    prev = abs(stieltjes_kesten_mckay(z, 10) - msc)
    for d in (40, 160):
        cur = abs(stieltjes_kesten_mckay(z, d) - msc)
        assert cur < prev / 2  # O(1/d) decay
        prev = cur


def test_degree_validation():
    for fn in (lambda: stieltjes_kesten_mckay(1j, 2),
               lambda: edge_constant(2),
               lambda: km_density(0.0, 2)):
        with pytest.raises(ValueError):
            fn()


def test_km_density_values():
    assert km_density(2.0, 3) == 0.0
    assert km_density(-2.0, 3) == 0.0
    assert km_density(2.5, 3) == 0.0
    assert km_density(0.0, 3) == pytest.approx(2 / (3 * np.pi), abs=1e-12)


def test_km_density_integrates_to_one():
    for d in range(3, 11):
        total, err = scipy.integrate.quad(lambda x: km_density(x, d), -2.0, 2.0,
                                          limit=200)
        assert abs(total - 1.0) < 1e-8


def test_edge_constant_values():
    assert edge_constant(3) == pytest.approx(6.0)
    assert edge_constant(4) == pytest.approx(3.0)


def test_edge_constant_matches_density_limit():
    for d in (3, 4, 6):
        s = 1e-8
        ratio = km_density(2.0 - s, d) * np.pi / np.sqrt(s)
        assert abs(ratio - edge_constant(d)) / edge_constant(d) < 1e-3


def test_stieltjes_density_consistency():
    # Im m_d(x + i*eta)/pi approximates the density as eta -> 0
    for x in (-1.5, 0.0, 1.5):
        for d in (3, 5):
            val = stieltjes_kesten_mckay(x + 1e-6j, d).imag / np.pi
            assert abs(val - km_density(x, d)) < 1e-3


def test_branch_positivity_on_dense_grid():
    rng = np.random.default_rng(42)
    for _ in range(100):
        z = complex(rng.uniform(-4, 4), rng.uniform(1e-4, 3.0))
        assert stieltjes_semicircle(z).imag > 0
        assert stieltjes_kesten_mckay(z, 3).imag > 0


# ---------------------------------------------------------------------------
# tree Green's functions
# ---------------------------------------------------------------------------


def test_tree_green_regular_basic():
    z = 2j
    d = 3
    assert tree_green_regular(0, z, d) == pytest.approx(stieltjes_kesten_mckay(z, d))
    expect = stieltjes_kesten_mckay(z, d) * (-stieltjes_semicircle(z) / np.sqrt(2))
    assert tree_green_regular(1, z, d) == pytest.approx(expect, abs=1e-14)


def test_tree_green_ary_root_reduction():
    # anc = 0 entries reduce to m_sc * (-m_sc/sqrt(d-1))**dist
    for d in (3, 4):
        for z in (2j, 0.5 + 0.4j):
            msc = stieltjes_semicircle(z)
            for dist in range(4):
                expect = msc * (-msc / np.sqrt(d - 1)) ** dist
                assert tree_green_ary(dist, 0, z, d) == pytest.approx(expect, abs=1e-13)


@pytest.mark.parametrize("d", [3, 4])
def test_tree_green_regular_vs_truncated_operator(d):
    # depth-12 truncation with boundary weight m_sc approximates the
    # infinite tree at eta >= 0.5
    z = 0.3 + 0.5j
    depth = 12 if d == 3 else 9
    msc = stieltjes_semicircle(z)
    n, edges, depths = regular_tree_ball(d, depth)
    op = weighted_tree_operator(n, edges, z, d, msc)
    # walk down one branch: vertex at depth k along first-child path
    v, path = 0, [0]
    kids = {u: [] for u in range(n)}
    for (a, b) in edges:
        kids[a].append(b)
    for _ in range(6):
        v = min(kids[v])
        path.append(v)
    for k, v in enumerate(path):
        assert abs(op.entry(0, v) - tree_green_regular(k, z, d)) < 1e-8


def test_tree_green_ary_vs_truncated_operator():
    d, z = 3, 0.3 + 0.5j
    msc = stieltjes_semicircle(z)
    n, edges, _ = ary_tree_ball(d, 12)
    # parent-augmented minor realizes the ary-tree root convention
    op = weighted_tree_operator(n + 1, edges + [(0, n)], z, d, msc, removed=(n,))
    kids = {u: [] for u in range(n + 1)}
    for (a, b) in edges:
        kids[a].append(b)
    v, path = 0, [0]
    for _ in range(6):
        v = min(kids[v])
        path.append(v)
    for k, v in enumerate(path):
        assert abs(op.entry(0, v) - tree_green_ary(k, 0, z, d)) < 1e-8
    # two siblings at depth 1: dist 2, common ancestor is the root (anc 0)
    c1, c2 = kids[0][0], kids[0][1]
    assert abs(op.entry(c1, c2) - tree_green_ary(2, 0, z, d)) < 1e-8


# ---------------------------------------------------------------------------
# weighted operator
# ---------------------------------------------------------------------------


def test_weighted_operator_single_vertex():
    z = 1.1j
    delta = 0.3 + 0.2j
    op = weighted_tree_operator(1, [], z, 3, delta)
    assert op.entry(0, 0) == pytest.approx(1.0 / (-z - 1.5 * delta), abs=1e-14)


def test_weighted_operator_matches_dense_oracle():
    rng = np.random.default_rng(3)
    z, d, delta = 0.4 + 0.8j, 3, -0.9 + 0.35j
    n, edges, _ = regular_tree_ball(3, 3)
    # connect two leaves to leave the tree world (degrees stay <= d)
    edges2 = edges + [(10, 21)]
    op = weighted_tree_operator(n, edges2, z, d, delta)
    keep, oracle = dense_tree_operator(n, edges2, z, d, delta)
    for _ in range(20):
        i, j = int(rng.integers(n)), int(rng.integers(n))
        assert abs(op.entry(i, j) - oracle[i, j]) < 1e-11


def test_weighted_operator_removed_disconnects():
    d, z = 3, 2j
    msc = stieltjes_semicircle(z)
    n, edges, depths = regular_tree_ball(d, 3)
    kids = {u: [] for u in range(n)}
    for (a, b) in edges:
        kids[a].append(b)
    branch = kids[0][0]
    op = weighted_tree_operator(n, edges, z, d, msc, removed=(branch,))
    # hit every vertex of the removed child's component
    comp = set()
    stack = list(kids[branch])
    while stack:
        u = stack.pop()
        comp.add(u)
        stack.extend(kids[u])
    for j in comp:
        assert abs(op.entry(0, j)) == 0.0
    with pytest.raises(KeyError):
        op.entry(0, branch)


def test_weighted_operator_fixed_point_entry():
    # truncated ary-tree with parent removed reproduces m_sc at the root
    d, ell = 3, 4
    for z in (2j, 2 + 0.05j):
        msc = stieltjes_semicircle(z)
        n, edges, _ = ary_tree_ball(d, ell)
        op = weighted_tree_operator(n + 1, edges + [(0, n)], z, d, msc, removed=(n,))
        assert abs(op.entry(0, 0) - msc) < 1e-10


def test_singular_operator_error_type():
    # single-edge graph at d=3: diagonal -z - delta, offdiagonal 1/sqrt(2);
    # delta = -z + 1/sqrt(2) puts an eigenvalue exactly at zero
    z = 0.5j
    delta = -z + 1.0 / np.sqrt(2.0)
    with pytest.raises(SingularOperatorError):
        weighted_tree_operator(2, [(0, 1)], z, 3, delta)


# ---------------------------------------------------------------------------
# self-consistent maps
# ---------------------------------------------------------------------------


def _z_fixture_grid():
    return [2j, 1j, 0.7 + 0.3j, 2.0 + 0.05j, -1.5 + 0.05j, 0.05j + 1.2]


@pytest.mark.parametrize("d", [3, 4, 5])
def test_fixed_points_on_grid(d):
    for ell in range(1, 9):
        for z in _z_fixture_grid():
            msc = stieltjes_semicircle(z)
            md = stieltjes_kesten_mckay(z, d)
            assert abs(y_ell(msc, z, ell, d) - msc) < 1e-10
            assert abs(x_ell(msc, z, ell, d) - md) < 1e-10


@pytest.mark.parametrize("d,ell", [(3, 1), (3, 2), (3, 3), (3, 5), (4, 2), (4, 4), (5, 2)])
def test_dual_implementations_agree(d, ell):
    for z in (2j, 2 + 0.05j, 0.5 + 0.4j):
        msc = stieltjes_semicircle(z)
        for shift in (0.0, 0.004 - 0.002j, -0.01j):
            delta = msc + shift
            assert abs(y_ell(delta, z, ell, d) - y_ell(delta, z, ell, d, method="matrix")) < 1e-12
            assert abs(x_ell(delta, z, ell, d) - x_ell(delta, z, ell, d, method="matrix")) < 1e-12


def test_dual_implementations_large_depth_smoke():
    z = 2j
    d, ell = 5, 8
    delta = stieltjes_semicircle(z) + 0.002
    assert abs(y_ell(delta, z, ell, d) - y_ell(delta, z, ell, d, method="matrix")) < 1e-12


def test_first_derivative_matches_linear_coefficient():
    h = 1e-4
    for d in (3, 4):
        for ell in (1, 2, 4):
            for z in (2j, 2 + 0.05j):
                msc = stieltjes_semicircle(z)
                coef = y_expansion_coeffs(z, ell, d)
                fd = (y_ell(msc + h, z, ell, d) - y_ell(msc - h, z, ell, d)) / (2 * h)
                assert abs(fd - coef.linear) / abs(coef.linear) < 1e-4
                assert coef.linear == pytest.approx(msc ** (2 * ell + 2), abs=1e-14)


def test_second_derivative_matches_quadratic_coefficient():
    h = 1e-4
    for d in (3, 4):
        for ell in (1, 2, 4):
            for z in (2j, 2 + 0.05j):
                msc = stieltjes_semicircle(z)
                coef = y_expansion_coeffs(z, ell, d)
                fd = (y_ell(msc + h, z, ell, d) - 2 * y_ell(msc, z, ell, d)
                      + y_ell(msc - h, z, ell, d)) / h**2
                assert abs(fd - 2 * coef.quadratic) / abs(2 * coef.quadratic) < 1e-3


def test_x_first_derivative_matches_stated_coefficient():
    h = 1e-4
    for d in (3, 4):
        for ell in (1, 3):
            z = 2j
            msc = stieltjes_semicircle(z)
            md = stieltjes_kesten_mckay(z, d)
            expect = d / (d - 1) * md**2 * msc ** (2 * ell)
            fd = (x_ell(msc + h, z, ell, d) - x_ell(msc - h, z, ell, d)) / (2 * h)
            assert abs(fd - expect) / abs(expect) < 1e-4


def test_cubic_remainder_slope():
    d, ell, z = 3, 2, 2j
    msc = stieltjes_semicircle(z)
    coef = y_expansion_coeffs(z, ell, d)
    direction = np.exp(0.3j)
    ts = np.logspace(-4, -2, 9)
    resid = []
    for t in ts:
        dd = t * direction
        r = y_ell(msc + dd, z, ell, d) - msc - coef.linear * dd - coef.quadratic * dd**2
        resid.append(abs(r))
    slope = np.polyfit(np.log(ts), np.log(resid), 1)[0]
    assert abs(slope - 3.0) < 0.3


def test_lipschitz_bound():
    rng = np.random.default_rng(7)
    for ell in (1, 2, 4, 8):
        box = 0.01 / ell**2
        for z in (2j, 2 + 0.05j):
            msc = stieltjes_semicircle(z)
            for _ in range(20):
                d1 = msc + box * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                d2 = msc + box * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                lhs = abs(y_ell(d1, z, ell, 3) - y_ell(d2, z, ell, 3))
                assert lhs <= 10.0 * ell * abs(d1 - d2) + 1e-15


def test_depth_validation():
    with pytest.raises(ValueError):
        y_ell(0.1j, 2j, 0, 3)
    with pytest.raises(ValueError):
        x_ell(0.1j, 2j, -1, 3)
