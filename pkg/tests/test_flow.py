import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cuspflow.coarse import BoundaryRay, FreeTree, hamenstadt_dplus, ray_toward
from cuspflow.cusp import CuspGraph, CuspVertex, gm_geodesic
from cuspflow.flow import (
    Crossing,
    DegenerateCrossing,
    NoRepresentative,
    boundary_map,
    compute_logscale,
    crossing_logscale,
    dplus_flowspace,
    flow_point,
    gamma_action,
    kappa,
    log_kappa,
    norm_logscale,
    random_reduced_word,
    record_from_path,
    reparam_cocycle,
    reparam_map,
    record_from_word,
    stable_leaf_point,
    translate_flow,
    unstable_leaf_point,
)
from cuspflow.groups import get_preset
from cuspflow.lie import (
    DegenerateFlags,
    Flag,
    LinearForm,
    attracting_flag,
    general_position,
    gromov_product_flag,
    repelling_flag,
)

ALPHA = LinearForm((1.0,))


def unit_flag(theta):
    return Flag([[math.cos(theta), math.sin(theta)]])


def modular(word):
    return get_preset("psl2z").element(word).matrices


@pytest.fixture
def point():
    return flow_point(unit_flag(0.4), unit_flag(2.1), 0.75, ALPHA)


def test_gamma_identity_and_composition(point):
    assert gamma_action(np.eye(2), point).close_to(point, 1e-12)
    g1, g2 = modular((2, 1, 2, 2)), modular((1, -2, 1, 2))
    both = gamma_action(np.einsum("dij,djk->dik", g1, g2), point)
    assert both.close_to(gamma_action(g1, gamma_action(g2, point)), 1e-9)


def _hyperbolic_busemann(flag, g, h, eps=1e-7):
    """Half the horocyclic displacement, read off points of the upper half plane near the boundary."""
    x = flag.v[0, 0] / flag.v[0, 1]
    z = complex(x, eps)

    def orbit(m):
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        return (a * 1j + b) / (c * 1j + d)

    def dist(p, q):
        return math.acosh(1 + abs(p - q) ** 2 / (2 * p.imag * q.imag))

    return 0.5 * (dist(orbit(g), z) - dist(orbit(h), z))


def test_gamma_shift_against_half_plane_limit(point):
    g = modular((2, 2, 1, -2, 1, 2))[0]
    moved = gamma_action(g, point)
    ref = ALPHA([_hyperbolic_busemann(point.xi, np.linalg.inv(g), np.eye(2))])
    assert moved.s - point.s == pytest.approx(ref, abs=1e-5)


def test_translation(point):
    assert translate_flow(0.0, point) == point
    assert translate_flow(1.5, translate_flow(2.25, point)).s == translate_flow(3.75, point).s
    g = modular((1, 2, 2))
    a = translate_flow(1.25, gamma_action(g, point))
    b = gamma_action(g, translate_flow(1.25, point))
    assert a.pair == b.pair
    assert a.s == b.s


def test_kappa_basics(graph_records):
    for sigma in graph_records[:10]:
        assert kappa(sigma, 0.0) == 1.0
        assert reparam_cocycle(sigma, 0.0) == 0.0
        assert norm_logscale(sigma, 0.0) == sigma.ell[int(sigma.origin)]


def test_kappa_cocycle(graph_records):
    rng = np.random.default_rng(0)
    for _ in range(300):
        sigma = graph_records[int(rng.integers(len(graph_records)))]
        t = rng.uniform(0, sigma.t_max / 2)
        s = rng.uniform(0, sigma.t_max - t)
        lhs = kappa(sigma, t + s)
        rhs = kappa(sigma.shifted(t), s) * kappa(sigma, t)
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_reparam_antisymmetry(graph_records):
    sigma = graph_records[3]
    for s in (0.5, 3.0, 11.25):
        assert reparam_cocycle(sigma, s) == pytest.approx(-reparam_cocycle(sigma.shifted(s), -s), abs=1e-9)


def test_cusp_crossing_branches():
    rate, T = 0.4, 9.0
    tau = np.array([1.0, 3.0])
    np.testing.assert_allclose(crossing_logscale(tau, T, 2.0, 3.0, rate), 2.0 + rate * tau)
    tau = np.array([6.0, 8.0])
    np.testing.assert_allclose(crossing_logscale(tau, T, 2.0, 3.0, rate), 3.0 - rate * (T - tau))
    mid = 4.5
    a, b = 2.0 + rate * T / 3, 3.0 - rate * T / 3
    w = 3 * mid / T
    assert crossing_logscale(mid, T, 2.0, 3.0, rate) == pytest.approx((2 - w) * a + (w - 1) * b)


def test_open_crossings():
    coords = np.arange(10.0)[:, None] * 0.1
    ell = compute_logscale(coords, [Crossing(0, 6, 10, open_end=True)], ALPHA, 0.5)
    np.testing.assert_allclose(ell[7:], ell[6] + 0.5 * np.arange(1, 4))
    ell = compute_logscale(coords, [Crossing(0, -1, 3, open_start=True)], ALPHA, 0.5)
    np.testing.assert_allclose(ell[:3], ell[3] - 0.5 * np.arange(3, 0, -1))
    with pytest.raises(DegenerateCrossing):
        compute_logscale(coords, [Crossing(0, -1, 10, True, True)], ALPHA, 0.5)


@pytest.fixture(scope="module")
def crossing_record():
    """A geodesic from a short word to T^14, which dips to depth 3 over the T-horoball at e."""
    G = CuspGraph(get_preset("psl2z"), 16, 6)
    x = G.vertex_id(CuspVertex.cayley((-2, 1, -2, -2, 1, -2)))
    y = G.vertex_id(CuspVertex.cayley((2,) * 14))
    return record_from_path(G, gm_geodesic(G, y, x).vertices[::-1], ALPHA, 0.4354)


def test_records_keep_crossing_rule(crossing_record):
    sigma = crossing_record
    assert [(c.entry, c.exit) for c in sigma.crossings] == [(5, 10)]
    c = sigma.crossings[0]
    k = np.arange(c.entry + 1, c.exit)
    want = crossing_logscale(k - c.entry, c.exit - c.entry, sigma.ell[c.entry], sigma.ell[c.exit], sigma.rate)
    np.testing.assert_allclose(sigma.ell[k], want, atol=1e-12)
    # first third: kappa contracts at exactly the rate constant
    tau = 1.0
    assert log_kappa(sigma.shifted(c.entry), tau) == pytest.approx(-sigma.rate * tau, abs=1e-12)


@pytest.mark.parametrize("word", [(2, 1, 2), (1, 2, 2, 1, -2), (-2, -2, 1, 2, 1, 2, 2)])
def test_equivariance_and_invariance(graph_records, word):
    g = modular(word)
    for sigma in graph_records[:8]:
        moved = sigma.translated(g)
        assert reparam_map(moved).close_to(gamma_action(g, reparam_map(sigma)), 1e-6)
        ts = np.linspace(0, sigma.t_max, 7)
        np.testing.assert_allclose(log_kappa(moved, ts), log_kappa(sigma, ts), atol=1e-6)


def test_intertwining(graph_records):
    sigma = graph_records[1]
    for s in (0.0, 1.0, 4.5, 10.0):
        lhs = reparam_map(sigma.shifted(s))
        rhs = translate_flow(reparam_cocycle(sigma, s), reparam_map(sigma))
        assert lhs.pair == rhs.pair
        assert lhs.s == pytest.approx(rhs.s, abs=4 * math.ulp(max(abs(lhs.s), 1.0)))


def test_axis_record(tree):
    a = get_preset("schottky2").letter_matrix(1)
    sigma = record_from_word(tree, (1,) * 30, ALPHA, origin=15, start=(-1,) * 15)
    w = reparam_map(sigma)
    assert w.xi.close_to(attracting_flag(a), 1e-5)
    assert w.eta.close_to(repelling_flag(a), 1e-5)


def test_boundary_map_examples(tree_graph, modular_graph):
    a = get_preset("schottky2").letter_matrix(1)
    ray = ray_toward(tree_graph, 0, tree_graph.vertex_id(CuspVertex.cayley((1,) * 6)))
    assert boundary_map(ray, strict=False).close_to(attracting_flag(a), 1e-3)
    stack = np.stack([np.linalg.matrix_power(a[0], k)[None] for k in range(1, 40)])
    assert boundary_map(stack).close_to(attracting_flag(a), 1e-5)
    g = modular((1, 2, 1))
    moved = np.einsum("dij,ndjk->ndik", g, stack)
    assert boundary_map(moved).close_to(attracting_flag(a).moved(g), 1e-5)
    G = modular_graph
    ids = [G.vertex_id(CuspVertex.cayley(()))] + [G.horoball_id((), k) for k in range(2, G.max_depth + 1)]
    assert boundary_map(BoundaryRay(G, np.asarray(ids))).close_to(Flag([[1.0, 0.0]]), 1e-12)


def test_leaf_points(point):
    assert unstable_leaf_point(point, point.xi) is point
    new = unit_flag(1.0)
    moved = unstable_leaf_point(point, new)
    want = point.s + ALPHA(gromov_product_flag((new, point.eta)) - gromov_product_flag((point.xi, point.eta)))
    assert moved.s == pytest.approx(want) and moved.eta == point.eta
    for theta in (0.3, 1.2, 2.9):
        assert stable_leaf_point(point, unit_flag(theta)).s == point.s
    with pytest.raises(DegenerateFlags):
        unstable_leaf_point(point, point.eta)


def test_dplus_flowspace(graph_records, point):
    sigma = graph_records[0]
    w = reparam_map(sigma)
    assert dplus_flowspace(w, w, [(sigma, sigma)], 8) == 0.0
    with pytest.raises(NoRepresentative):
        dplus_flowspace(w, point, [], 8)
    other = graph_records[1]
    assert dplus_flowspace(w, reparam_map(other), [(sigma, other)], 8) == hamenstadt_dplus(sigma, other, 8)


def test_record_dump(graph_records):
    sigma = graph_records[0]
    doc = json.loads(sigma.to_json())
    assert set(doc) >= {"vertices", "crossings", "ell", "xi", "eta", "origin", "rate"}
    assert len(doc["vertices"]) == len(doc["ell"]) == sigma.length + 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2]), min_size=1, max_size=5), st.floats(0, 20))
def test_tree_record_equivariance(word, t):
    P = get_preset("schottky2")
    tree = FreeTree(P)
    rng = np.random.default_rng(len(word))
    Y = random_reduced_word(P, 10, rng)
    F = random_reduced_word(P, 30, rng, prefix=Y)
    sigma = record_from_word(tree, F, ALPHA, origin=10, start=tuple(P.inverse_letter(x) for x in reversed(Y)))
    g = P.element(word).matrices
    moved = sigma.translated(g)
    # long words can squeeze both endpoints below the general-position tolerance
    assume(general_position(moved.xi, moved.eta))
    assert reparam_map(moved).close_to(gamma_action(g, reparam_map(sigma)), 1e-6)
    assert log_kappa(moved, t) == pytest.approx(log_kappa(sigma, t), abs=1e-6)


def test_short_horizon_dplus_on_modular_records(graph_records):
    a, b = graph_records[0], graph_records[1]
    v = hamenstadt_dplus(a, b, 6)
    assert v >= 0 and v == hamenstadt_dplus(b, a, 6)


def test_cusp_graph_records_from_deep_window():
    G = CuspGraph(get_preset("psl2z"), 8, 6)
    ids = [G.vertex_id(CuspVertex.cayley(()))] + [G.horoball_id((), k) for k in range(2, 7)]
    sigma = record_from_path(G, ids, ALPHA, 0.4)
    assert sigma.degenerate and sigma.cusp_ends == (False, True)
    np.testing.assert_allclose(np.diff(sigma.ell[2:]), 0.4)
