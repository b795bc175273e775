import numpy as np
import pytest

from dregular import (
    Parameters,
    RegularGraph,
    SamplerConfig,
    ball,
    boundary_edges,
    excess,
    is_tree,
    omega_bar_check,
    sample,
    stream,
)
from dregular.graphs import GraphFormatError, distance_capped


def k4():
    return RegularGraph.from_edges(4, 3, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


def cycle_plus_matching(k):
    """A 3-regular graph: 2k-cycle plus the diameter matching."""
    n = 2 * k
    edges = [(i, (i + 1) % n) for i in range(n)] + [(i, i + k) for i in range(k)]
    return RegularGraph.from_edges(n, 3, edges)


def test_construction_validation():
    with pytest.raises(ValueError):
        RegularGraph.from_edges(4, 3, [(0, 1), (0, 2), (1, 2)])  # degrees wrong
    with pytest.raises(ValueError):
        RegularGraph.from_edges(5, 3, [(0, 1)] * 10)  # n*d odd -> caught by parity
    with pytest.raises(ValueError):
        RegularGraph(4, 3, [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 1)])  # repeat


def test_k4_basics():
    g = k4()
    assert g.neighbors(0) == (1, 2, 3)
    assert g.has_edge(2, 3) and not g.has_edge(0, 0)
    assert len(g.edges()) == 6


def test_round_trip_serialization_bit_exact(tmp_path):
    g = sample(SamplerConfig(n=60, d=3, seed=9), stream(9, 0))
    path = tmp_path / "g.txt"
    g.save(path)
    text_once = path.read_text()
    g2 = RegularGraph.load(path)
    assert g2 == g
    g2.save(path)
    assert path.read_text() == text_once


def test_from_text_errors():
    with pytest.raises(GraphFormatError):
        RegularGraph.from_text("")
    with pytest.raises(GraphFormatError):
        RegularGraph.from_text("4 3\n0 1 2\n")


def test_ball_radius_zero_and_k4():
    g = k4()
    b0 = ball(g, (1,), 0)
    assert b0.vertices == (1,) and b0.edges == ()
    b1 = ball(g, (0,), 1)
    assert b1.vertices == (0, 1, 2, 3)
    assert len(b1.edges) == 6  # induced: whole K4


def test_ball_monotone_and_branching_bound():
    g = sample(SamplerConfig(n=2000, d=3, seed=1), stream(1, 0))
    prev = set()
    for r in range(6):
        b = ball(g, (17,), r)
        assert prev <= set(b.vertices)
        assert len(b.vertices) <= 1 + 3 * (2**r - 1)
        prev = set(b.vertices)


def test_dist_metric_spot_checks():
    g = sample(SamplerConfig(n=400, d=3, seed=2), stream(2, 0))
    rng = np.random.default_rng(0)

    def dist(u, v):
        b = ball(g, (u,), g.n)
        return b.dist[v]

    for _ in range(10):
        u, v, w = (int(x) for x in rng.integers(0, 400, size=3))
        assert dist(u, v) == dist(v, u)
        assert dist(u, w) <= dist(u, v) + dist(v, w)


def test_excess_values():
    g = cycle_plus_matching(10)
    # a path inside the cycle is a tree
    tree_ball = ball(g, (0,), 0)
    assert excess(tree_ball) == 0 and is_tree(tree_ball)
    assert excess(ball(k4(), (0,), 1)) == 3  # 6 - 4 + 1
    # pure cycle: take the 20-cycle subgraph via a Ball-like construction
    cyc = ball(cycle_plus_matching(10), (0,), 20)
    assert excess(cyc) >= 1


def test_single_cycle_excess_is_one():
    # radius-1 ball in C6 + matching around a vertex has no cycle; build an
    # explicit triangle-bearing graph instead: K4 ball of radius 1 at any
    # vertex contains cycles; a dedicated 3-cycle check:
    from dregular.graphs import Ball

    tri = Ball(centers=(0,), radius=1, vertices=(0, 1, 2),
               edges=((0, 1), (0, 2), (1, 2)), dist={0: 0, 1: 1, 2: 1})
    assert excess(tri) == 1


def test_parameters_defaults_and_validation():
    p = Parameters(n=2000, d=3)
    assert p.frak_c == 0.5 and p.ell == 2
    assert p.radius >= p.ell >= 1
    assert p.eta_min == pytest.approx(2000 ** (-0.9))
    with pytest.raises(ValueError):
        Parameters(n=100, d=3, ell=5, radius=3)
    with pytest.raises(ValueError):
        Parameters(n=100, d=3, frak_c=1.5)


def test_omega_bar_k4_fails():
    rep = omega_bar_check(k4(), Parameters(n=4, d=3, ell=1, radius=1))
    assert not rep.passed
    assert rep.max_excess == 3


def test_omega_bar_random_graphs_pass():
    passes = 0
    for seed in range(20):
        g = sample(SamplerConfig(n=1200, d=3, seed=seed), stream(seed, 0))
        rep = omega_bar_check(g, Parameters(n=1200, d=3, frak_c=0.5, ell=1, radius=1))
        # definition link: zero bad vertices means every ball is a tree
        if rep.bad_vertex_count == 0:
            assert rep.max_excess == 0
        passes += rep.passed
    assert passes >= 18  # >= 0.9 of seeds


def test_boundary_edges_counts():
    g = sample(SamplerConfig(n=2000, d=3, seed=4), stream(4, 0))
    b0 = ball(g, (5,), 0)
    assert boundary_edges(g, b0) == [(5, a) for a in g.neighbors(5)]
    for ell in (1, 2):
        t = ball(g, (5,), ell)
        bnd = boundary_edges(g, t)
        assert len(bnd) <= 3 * 2**ell
        wide = ball(g, (5,), ell + 1)
        if is_tree(wide):
            assert len(bnd) == 3 * 2**ell
        inside = t.vertex_set()
        assert all(l in inside and a not in inside for l, a in bnd)


def test_distance_capped_excluded():
    g = cycle_plus_matching(8)  # 16-cycle + diameters
    # distance along cycle from 0 to 3 is 3; excluding vertex 1 and 2
    # forces the long way or the matching chords
    assert distance_capped(g, (0,), (3,), 3) == 3
    assert distance_capped(g, (0,), (3,), 3, excluded=(1, 2)) > 3


def test_switched_copy_validation():
    g = k4()
    with pytest.raises(ValueError):
        g.with_switched_edges([(0, 1)], [(0, 2)])  # duplicate add
