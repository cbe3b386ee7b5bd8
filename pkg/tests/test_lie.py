import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspflow.lie import (
    DegenerateFlags,
    Flag,
    FlagPair,
    LinearForm,
    NotProximal,
    attracting_flag,
    busemann,
    cartan_array,
    cartan_projection,
    diag_element,
    flag_shadow_membership,
    general_position,
    gromov_product_flag,
    gromov_product_via_busemann,
    jordan_array,
    jordan_projection,
    rotation,
    standard_flag,
)

GOLD = (3.0 + math.sqrt(5.0)) / 2.0
CAT = np.array([[2.0, 1.0], [1.0, 1.0]])
PARABOLIC = np.array([[1.0, 1.0], [0.0, 1.0]])


def sl2(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(2, 2))
    if np.linalg.det(m) < 0:
        m[:, 0] *= -1
    return m / math.sqrt(np.linalg.det(m))


def unit_flag(theta):
    return Flag([[math.cos(theta), math.sin(theta)]])


def test_cartan_examples():
    assert cartan_projection(np.eye(2)).u == (0.0,)
    assert cartan_projection(diag_element(1.0)).u[0] == pytest.approx(1.0)
    assert cartan_projection(PARABOLIC).u[0] == pytest.approx(0.5 * math.log(GOLD), abs=1e-12)


def test_jordan_examples():
    assert jordan_projection(PARABOLIC).u[0] == pytest.approx(0.0, abs=1e-7)
    d = diag_element(0.7)
    assert jordan_projection(d).u == pytest.approx(cartan_projection(d).u)
    assert jordan_projection(CAT).u[0] == pytest.approx(math.log(GOLD))


def test_busemann_examples():
    xi = standard_flag(1)
    g = diag_element(0.8)
    assert busemann(xi, g, g) == pytest.approx([0.0])
    # sigma(g^-1, xi) - sigma(h^-1, xi): the displacement t appears when the identity comes first
    assert busemann(xi, np.eye(2), g) == pytest.approx([0.8])
    assert busemann(xi, g, np.eye(2)) == pytest.approx([-0.8])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, math.pi))
def test_busemann_cocycle(seed, theta):
    g, h, k = sl2(seed), sl2(seed + 1), sl2(seed + 2)
    xi = unit_flag(theta)
    lhs = busemann(xi, g, h) + busemann(xi, h, k)
    np.testing.assert_allclose(lhs, busemann(xi, g, k), atol=1e-9)


def test_gromov_product_examples():
    e1, e2 = standard_flag(1, 0), standard_flag(1, 1)
    assert gromov_product_flag(FlagPair(e1, e2)) == pytest.approx([0.0])
    k = rotation(0.37)
    moved = FlagPair(e1.moved(k), e2.moved(k))
    assert gromov_product_flag(moved) == pytest.approx([0.0], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, math.pi), st.floats(0.05, math.pi - 0.05), st.floats(0.2, 5.0))
def test_gromov_product_representative_free(a, gap, scale):
    xi, eta = unit_flag(a), unit_flag(a + gap)
    ref = gromov_product_flag((xi, eta))
    np.testing.assert_allclose(gromov_product_via_busemann(xi, eta, 1.0), ref, atol=1e-8)
    np.testing.assert_allclose(gromov_product_via_busemann(xi, eta, scale), ref, atol=1e-8)
    np.testing.assert_allclose(gromov_product_flag((eta, xi)), ref, atol=1e-12)


def test_general_position_threshold():
    e1, e2 = standard_flag(1, 0), standard_flag(1, 1)
    assert general_position(e1, e2)
    assert not general_position(e1, e1)
    near = Flag([[1.0, 1e-9]])
    assert not general_position(e1, near)
    with pytest.raises(DegenerateFlags):
        FlagPair(e1, near)


def test_attracting_flag():
    assert attracting_flag(diag_element(1.0)) == standard_flag(1)
    v = np.array([1.0, GOLD - 2.0])
    assert attracting_flag(CAT) == Flag([v])
    k = rotation(0.9)[0]
    conj = k @ CAT @ k.T
    assert attracting_flag(conj) == attracting_flag(CAT).moved(k)
    with pytest.raises(NotProximal):
        attracting_flag(PARABOLIC)


def test_shadow_examples():
    xi = unit_flag(0.3)
    assert flag_shadow_membership(xi, np.eye(2), 0.1)
    xi = attracting_flag(CAT)
    g = np.eye(2)
    for _ in range(10):
        g = g @ CAT
        assert flag_shadow_membership(xi, g, 1.0)
    ortho = Flag([[-xi.v[0, 1], xi.v[0, 0]]])
    assert not flag_shadow_membership(ortho, np.linalg.matrix_power(CAT, 8), 0.5)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_cartan_subadditive(seed):
    g, h = sl2(seed), sl2(seed + 7)
    u = cartan_array(np.stack([g, h, g @ h])[:, None])[:, 0]
    assert u[2] <= u[0] + u[1] + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_jordan_bounds_and_powers(seed):
    g = sl2(seed)
    lam = jordan_array(g[None])[0]
    assert lam <= cartan_array(g[None])[0] + 1e-12
    if abs(np.trace(g)) > 2.1:
        for n in range(1, 9):
            gn = np.linalg.matrix_power(g, n)
            assert jordan_array(gn[None])[0] == pytest.approx(n * lam, rel=1e-6, abs=1e-6)


def test_linear_form():
    psi = LinearForm.parse("1,2")
    assert psi([0.5, 0.25]) == pytest.approx(2.0)
    assert psi.scaled(3.0).c == (3.0, 6.0)
    with pytest.raises(ValueError):
        LinearForm((1.0, -1.0))


def test_shadow_busemann_comparison():
    """|beta_xi(e, g) - mu(g)| grows at most linearly in the shadow radius."""
    rng = np.random.default_rng(0)
    mats = np.stack([sl2(s) @ diag_element(rng.uniform(1, 4))[0] for s in range(200)])
    worst = {}
    for R in (1.0, 2.0):
        gaps = []
        for g in mats:
            for th in np.linspace(0, math.pi, 60, endpoint=False):
                xi = unit_flag(th)
                if flag_shadow_membership(xi, g, R):
                    b = busemann(xi, np.eye(2), g)[0]
                    gaps.append(abs(b - cartan_projection(g).u[0]))
        worst[R] = max(gaps)
    assert worst[1.0] <= worst[2.0] + 1e-9
    assert worst[2.0] / 2.0 < 2.0
