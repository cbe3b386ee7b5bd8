import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspflow.cusp import (
    BudgetExceeded,
    CuspGraph,
    CuspVertex,
    Thick,
    Thin,
    VertexNotInGraph,
    build_cusp_graph,
    classify_thick_thin,
    escape_times,
    gm_distance,
    gm_geodesic,
)
from cuspflow.experiments import naive_horoball_distance
from cuspflow.groups import get_preset, word_length


def z(n):
    """Word of T^n in the cyclic parabolic group."""
    return (1,) * n if n >= 0 else (-1,) * (-n)


@pytest.fixture(scope="module")
def horoball():
    return CuspGraph(get_preset("cyclic-parabolic"), 64, 8)


@pytest.fixture(scope="module")
def modular():
    return CuspGraph(get_preset("psl2z"), 6, 6)


def hid(G, n, depth):
    return G.vertex_id(CuspVertex.horoball(z(n), "P", depth) if depth > 1 else CuspVertex.cayley(z(n)))


def test_wide_edge_at_depth_two(horoball):
    a, b = hid(horoball, 0, 2), hid(horoball, 2, 2)
    assert b in horoball.neighbors(a)
    assert hid(horoball, 3, 2) not in horoball.neighbors(a)


def test_depth_one_neighbours(horoball):
    assert gm_distance(horoball, hid(horoball, 0, 1), hid(horoball, 1, 1)) == 1


@pytest.mark.parametrize("n", [8, 17, 40, 64])
def test_horoball_distance_matches_oracle(horoball, n):
    ours = gm_distance(horoball, hid(horoball, 0, 1), hid(horoball, n, 1))
    assert ours == naive_horoball_distance(64, 8, (0, 1), (n, 1))


def test_geodesic_examples(horoball):
    a = hid(horoball, 0, 1)
    assert gm_geodesic(horoball, a, a).vertices == (a,)
    b = hid(horoball, 1, 1)
    assert gm_geodesic(horoball, a, b).vertices == (a, b)
    c = hid(horoball, 8, 1)
    path = gm_geodesic(horoball, a, c)
    assert path.certified
    assert path.length == naive_horoball_distance(64, 8, (0, 1), (8, 1))
    for u, v in zip(path.vertices, path.vertices[1:]):
        assert v in horoball.neighbors(u)
    assert gm_geodesic(horoball, a, c) == path


def test_escape_times(horoball):
    a, c = hid(horoball, 0, 1), hid(horoball, 40, 1)
    assert escape_times(horoball, [a, hid(horoball, 1, 1)], 0) is None
    ray = [hid(horoball, 0, k) for k in range(1, 9)]
    got = escape_times(horoball, ray, 0)
    assert (got.entry, got.exit, got.unbounded) == (2, 7, True)
    path = gm_geodesic(horoball, a, c)
    got = escape_times(horoball, path, 0)
    depth = horoball.depth[np.asarray(path.vertices)]
    inside = np.nonzero(depth > 2)[0]
    assert got.entry == inside[0] and got.exit == inside[-1] + 1 and not got.unbounded


def test_thick_thin(horoball):
    assert isinstance(classify_thick_thin(horoball, hid(horoball, 3, 1)), Thick)
    assert isinstance(classify_thick_thin(horoball, hid(horoball, 3, 2)), Thick)
    assert classify_thick_thin(horoball, hid(horoball, 3, 5)) == Thin(0)
    region = horoball.region(0)
    assert not set(region.interior) & set(region.rim)
    assert (horoball.depth[region.rim] == 2).all()


def test_rim_separates_interior(horoball):
    region = horoball.region(0)
    interior = set(region.interior.tolist())
    rim = set(region.rim.tolist())
    for v in interior:
        for w in horoball.neighbors(v):
            w = int(w)
            assert w in interior or w in rim


def test_no_peripherals_gives_cayley_ball():
    P = get_preset("schottky2")
    G = build_cusp_graph(P, 4, 8)
    assert G.n_vertices == len(P.ball(4).matrices) == 161
    assert G.n_edges == 160
    assert G.n_regions == 0


def _modular_graph_counts(radius, depth):
    """Independent construction on integer matrix keys: (vertices, edges)."""
    S, T, Ti = ((0, -1), (1, 0)), ((1, 1), (0, 1)), ((1, -1), (0, 1))

    def mul(m, g):
        return tuple(tuple(sum(m[i][k] * g[k][j] for k in range(2)) for j in range(2)) for i in range(2))

    def key(m):
        flat = (m[0][0], m[0][1], m[1][0], m[1][1])
        first = next(x for x in flat if x)
        return flat if first > 0 else tuple(-x for x in flat)

    ident = ((1, 0), (0, 1))
    ball = {key(ident): ident}
    frontier = [ident]
    for _ in range(radius):
        nxt = []
        for m in frontier:
            for g in (S, T, Ti):
                p = mul(m, g)
                if key(p) not in ball:
                    ball[key(p)] = p
                    nxt.append(p)
        frontier = nxt
    edges = set()
    for k, m in ball.items():
        for g in (S, T):
            q = key(mul(m, g))
            if q in ball:
                edges.add(frozenset([(k, 1), (q, 1)]))
        for lvl in range(1, depth):
            edges.add(frozenset([(k, lvl), (k, lvl + 1)]))
        for lvl in range(2, depth + 1):
            p = m
            for _ in range(2 ** (lvl - 1)):
                p = mul(p, T)
                if key(p) in ball:
                    edges.add(frozenset([(k, lvl), (key(p), lvl)]))
    return len(ball) * depth, len(edges)


def test_modular_counts_match_naive_build(modular):
    assert (modular.n_vertices, modular.n_edges) == _modular_graph_counts(6, 6)


def test_edge_rule_soundness(modular):
    mats = modular.ball.matrices[:, 0]
    A = modular.adjacency.tocoo()
    for a, b in zip(A.row, A.col):
        if modular.depth[a] != modular.depth[b]:
            assert abs(int(modular.depth[a]) - int(modular.depth[b])) == 1
            assert modular.base[a] == modular.base[b]
            continue
        n = int(modular.depth[a])
        if n == 1:
            continue
        rel = np.linalg.inv(mats[modular.base[a]]) @ mats[modular.base[b]]
        rel = rel * np.sign(rel[0, 0])
        np.testing.assert_allclose(rel[[0, 1, 1], [0, 0, 1]], [1.0, 0.0, 1.0], atol=1e-9)
        assert 1 <= abs(round(rel[0, 1])) <= 2 ** (n - 1)


def test_budget_and_missing_vertex(modular):
    with pytest.raises(BudgetExceeded):
        CuspGraph(get_preset("psl2z"), 8, 8, vertex_cap=100)
    with pytest.raises(VertexNotInGraph):
        modular.vertex_id(CuspVertex.cayley((2,) * 9))
    with pytest.raises(ValueError):
        CuspGraph(get_preset("psl2z"), 4, 13)


def test_vertex_round_trip(modular):
    for i in range(0, modular.n_vertices, 97):
        assert modular.vertex_id(modular.vertex(i)) == i


def test_metric_axioms(modular):
    rng = np.random.default_rng(0)
    triples = rng.integers(0, modular.n_vertices, size=(1000, 3))
    for x, y, w in triples:
        dxy = gm_distance(modular, x, y)
        assert dxy == gm_distance(modular, y, x)
        assert dxy <= gm_distance(modular, x, w) + gm_distance(modular, w, y)


def test_deep_parabolic_law(horoball):
    for n in (2, 4, 8, 16, 32, 64):
        d = gm_distance(horoball, hid(horoball, 0, 1), hid(horoball, n, 1))
        assert abs(d - 2 * math.log2(n)) <= 1.5


def test_truncation_flags(modular):
    centre = modular.vertex_id(CuspVertex.cayley(()))
    far = int(np.nonzero(modular.boundary)[0][0])
    assert modular.report(centre, centre).trusted
    assert not modular.report(centre, far).trusted


def test_export_format(horoball, tmp_path):
    small = CuspGraph(get_preset("cyclic-parabolic"), 4, 3)
    lines = small.export_edges(tmp_path / "e.txt")
    assert len(lines) == small.n_edges
    left, right = lines[0].split(" — ")
    assert len(left.split(" ")) == 4 and len(right.split(" ")) == 4


@settings(max_examples=60, deadline=None)
@given(st.integers(-60, 60), st.integers(1, 8), st.integers(-60, 60), st.integers(1, 8))
def test_horoball_distances_property(a, da, b, db):
    G = CuspGraph(get_preset("cyclic-parabolic"), 64, 8)
    ours = gm_distance(G, hid(G, a, da), hid(G, b, db))
    assert ours == naive_horoball_distance(64, 8, (a, da), (b, db))


def test_word_length_of_cayley_vertices(modular):
    for i in range(0, modular.n_cayley, 31):
        v = modular.vertex(i)
        assert word_length(modular.preset.element(v.word)) <= 6
