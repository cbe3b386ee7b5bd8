import itertools
import math

import numpy as np
import pytest

from cuspflow.coarse import (
    NotStabilized,
    boundary_gromov_product,
    epsilon_max,
    estimate_delta,
    four_point_defects,
    gm_busemann,
    gm_shadow_membership,
    graph_dist_matrix,
    gromov_product,
    hamenstadt_dminus,
    hamenstadt_dplus,
    dplus_profile,
    ray_toward,
    sample_rays,
    visual_distance,
)
from cuspflow.cusp import CuspGraph, CuspVertex
from cuspflow.flow import random_reduced_word, record_from_word
from cuspflow.groups import get_preset
from cuspflow.lie import LinearForm

ALPHA = LinearForm((1.0,))


def test_tree_is_zero_hyperbolic(tree_graph):
    est = estimate_delta(tree_graph, 5000, seed=0, pool_size=80)
    assert est.delta == 0.0 and est.n_samples == 5000


def test_collinear_quadruple():
    d = np.abs(np.subtract.outer(np.arange(4), np.arange(4)))
    assert four_point_defects(d, np.array([[0, 1, 2, 3], [3, 0, 2, 1]])).tolist() == [0.0, 0.0]


def test_modular_delta_against_exhaustive_scan():
    G = CuspGraph(get_preset("psl2z"), 6, 5)
    e = G.vertex_id(CuspVertex.cayley(()))
    pool = np.nonzero(G.bfs(e) <= 3)[0]
    pool = pool[:: max(1, len(pool) // 36)]
    d = graph_dist_matrix(G, pool, pool)
    quads = np.array(list(itertools.combinations(range(len(pool)), 4)))
    exhaustive = four_point_defects(d, quads).max()
    est = estimate_delta(G, 20_000, seed=1, pool=pool)
    assert est.delta <= exhaustive
    assert est.delta == exhaustive
    assert estimate_delta(G, 500, seed=4, pool=pool) == estimate_delta(G, 500, seed=4, pool=pool)


def test_gromov_product_examples(modular_graph):
    G = modular_graph
    x, p, q = 0, 50, 700
    assert gromov_product(G, x, p, p) == G.distance(x, p)
    assert gromov_product(G, x, x, q) == 0.0
    want = 0.5 * (G.distance(x, p) + G.distance(x, q) - G.distance(p, q))
    assert gromov_product(G, x, p, q) == want >= 0


@pytest.fixture(scope="module")
def tree_rays(tree_graph):
    return sample_rays(tree_graph, 0, 12, seed=3)


def test_busemann_along_ray(tree_rays):
    ray = tree_rays[0]
    v = ray.vertices
    assert gm_busemann(ray, v[2], v[2]) == 0.0
    assert gm_busemann(ray, v[0], v[3]) == 3.0


def test_busemann_transverse_pair(tree_graph, tree_rays):
    ray = tree_rays[1]
    off = next(i for i in range(tree_graph.n_vertices) if i not in set(ray.vertices.tolist()))
    vals = tree_graph.bfs(off)[ray.vertices] - tree_graph.bfs(ray.base)[ray.vertices]
    assert gm_busemann(ray, off, ray.base) == vals[-1]


def test_busemann_not_stabilized(modular_graph):
    far = int(np.argmax(modular_graph.bfs(0)))
    ray = ray_toward(modular_graph, 0, far)
    # the ray's own endpoint keeps pulling the difference down until the window ends
    with pytest.raises(NotStabilized):
        gm_busemann(ray, ray.vertices[1], far)


def test_shadow_membership(modular_graph):
    G = modular_graph
    ray = sample_rays(G, 0, 1, seed=2)[0]
    y = int(ray.vertices[5])
    assert gm_shadow_membership(G, 0, y, 0, ray)
    off = next(i for i in range(G.n_cayley) if i not in set(ray.vertices.tolist()))
    assert not gm_shadow_membership(G, 0, off, 0, ray)
    for R in (1, 2, 3):
        scan = min(G.distance(off, int(v)) for v in ray.vertices) <= R
        assert gm_shadow_membership(G, 0, off, R, ray) == scan
    with pytest.raises(ValueError):
        gm_shadow_membership(G, 1, y, 1, ray)


def test_visual_distance_examples(tree_graph, tree_rays):
    eps = epsilon_max(0.0)
    assert eps == pytest.approx(math.log(2) / 4)
    r = tree_rays[0]
    assert visual_distance(r, r, eps) == 0.0
    other = next(q for q in tree_rays if q.vertices[1] != r.vertices[1])
    assert boundary_gromov_product(r, other) == 0.0
    assert visual_distance(r, other, eps) == 1.0
    with pytest.raises(ValueError):
        visual_distance(r, other, 2 * eps, delta=0.0)


def test_visual_quasi_triangle(modular_graph):
    G = modular_graph
    delta = estimate_delta(G, 2000, seed=0).delta
    eps = epsilon_max(delta)
    K = math.exp(eps * delta)
    rays = sample_rays(G, 0, 16, seed=9)
    dist = {}
    for i, j in itertools.combinations(range(len(rays)), 2):
        try:
            dist[i, j] = dist[j, i] = visual_distance(rays[i], rays[j], eps)
        except NotStabilized:
            pass
    checked = 0
    for i, j, k in itertools.permutations(range(len(rays)), 3):
        if (i, k) in dist and (i, j) in dist and (j, k) in dist:
            checked += 1
            assert dist[i, k] <= K * (dist[i, j] + dist[j, k]) + 1e-12
    assert checked > 100


def test_gromov_inequality_for_rays(modular_graph):
    G = modular_graph
    delta = estimate_delta(G, 2000, seed=0).delta + 0.5
    rays = sample_rays(G, 0, 10, seed=4)
    for a, b in itertools.combinations(rays, 2):
        try:
            g = boundary_gromov_product(a, b)
        except NotStabilized:
            continue
        n = min(len(a), len(b)) - 1
        inner = gromov_product(G, 0, int(a.vertices[n]), int(b.vertices[n]))
        assert g - delta / 2 <= inner + 1e-9 or math.isinf(g)


def _leaf_records(tree, rng, back=10, fwd=30, split=4):
    P = tree.preset
    Y = random_reduced_word(P, back, rng)
    common = random_reduced_word(P, split, rng, prefix=Y)
    F1 = random_reduced_word(P, fwd - split, rng, prefix=common)
    F2 = random_reduced_word(P, fwd - split, rng, first_avoid=F1[len(common)], prefix=common)
    start = tuple(P.inverse_letter(x) for x in reversed(Y))
    return (record_from_word(tree, F1, ALPHA, origin=back, start=start),
            record_from_word(tree, F2, ALPHA, origin=back, start=start))


def test_dplus_identical_tracks(tree, rng):
    s1, _ = _leaf_records(tree, rng)
    assert hamenstadt_dplus(s1, s1, 10) == 0.0


def test_dplus_parallel_tracks(tree, rng):
    s1, _ = _leaf_records(tree, rng)
    lagged = s1.shifted(1.0)
    horizon = 10.0
    assert hamenstadt_dplus(s1, lagged, horizon) == pytest.approx(math.exp(1.0 - horizon))
    prof = dplus_profile(s1, lagged, horizon)
    assert np.all(prof.distances == 1.0)


@pytest.mark.parametrize("shift", [1.0, 2.5, 6.0])
def test_dplus_shift_law_on_tree(tree, shift):
    rng = np.random.default_rng(int(shift * 10))
    s1, s2 = _leaf_records(tree, rng)
    base = hamenstadt_dplus(s1, s2, 10)
    moved = hamenstadt_dplus(s1.shifted(shift), s2.shifted(shift), 10)
    assert moved / base == pytest.approx(math.exp(2 * shift), rel=1e-12)
    assert hamenstadt_dplus(s2, s1, 10) == base


def test_dminus_of_forward_split_is_small(tree, rng):
    s1, s2 = _leaf_records(tree, rng)
    # shared backward rays: distance 0 on the window, so the surrogate peaks at t = T/2
    assert hamenstadt_dminus(s1, s2, 8) == pytest.approx(math.exp(-8.0), rel=1e-12)
