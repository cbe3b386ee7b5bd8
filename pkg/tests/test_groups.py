import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspflow.groups import (
    FactorMismatch,
    GroupElement,
    RadiusCapExceeded,
    enumerate_ball,
    get_preset,
    load_custom,
    multiply,
    psl2z,
    schottky2,
    selfjoin_schottky,
    word_length,
)


@pytest.fixture(scope="module")
def free():
    return schottky2()


@pytest.fixture(scope="module")
def modular():
    return psl2z()


def test_inverse_cancels(free):
    a = free.generator(1)
    assert multiply(a, a.inverse()).is_identity()
    assert multiply(a, a.inverse()).word == ()


def test_identity_law(free):
    g = free.element((1, 2, -1))
    assert multiply(free.identity(), g) == g
    assert multiply(free.identity(), g).word == g.word


def test_parabolic_square(modular):
    t = modular.generator(2)
    np.testing.assert_allclose((t * t).matrices[0], [[1.0, 2.0], [0.0, 1.0]])


def test_factor_mismatch():
    a = schottky2().generator(1)
    b = selfjoin_schottky().generator(1)
    with pytest.raises(FactorMismatch):
        multiply(a, b)


@pytest.mark.parametrize("radius, count", [(1, 5), (2, 17), (3, 53)])
def test_free_ball_counts(free, radius, count):
    # 1 + sum_{k <= r} 4 * 3^(k-1)
    assert len(enumerate_ball(free, radius)) == count


def _modular_oracle(radius):
    """Independent BFS over integer matrices up to sign."""
    gens = [((0, -1), (1, 0)), ((1, 1), (0, 1)), ((1, -1), (0, 1))]

    def key(m):
        flat = (m[0][0], m[0][1], m[1][0], m[1][1])
        first = next(x for x in flat if x != 0)
        return flat if first > 0 else tuple(-x for x in flat)

    def mul(m, g):
        return ((m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]),
                (m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]))

    ident = ((1, 0), (0, 1))
    seen = {key(ident)}
    frontier = [ident]
    for _ in range(radius):
        nxt = []
        for m in frontier:
            for g in gens:
                p = mul(m, g)
                k = key(p)
                if k not in seen:
                    seen.add(k)
                    nxt.append(p)
        frontier = nxt
    return len(seen)


def test_modular_ball_matches_oracle(modular):
    assert len(enumerate_ball(modular, 6)) == _modular_oracle(6)


def test_word_length():
    P = schottky2()
    assert word_length(P.identity()) == 0
    assert word_length(P.generator(2)) == 1
    assert word_length(P.element((1, 2, -1))) == 3


def test_radius_cap(free):
    with pytest.raises(RadiusCapExceeded):
        free.ball(free.radius_cap + 1)


def test_balls_nested_and_growing(modular):
    prev = None
    for r in range(1, 7):
        cur = enumerate_ball(modular, r)
        if prev is not None:
            assert prev < cur
        prev = cur


def test_modular_entries_are_integers(modular):
    m = modular.ball(8).matrices
    np.testing.assert_allclose(m, np.rint(m), atol=1e-7)


def test_element_matrices_match_word(free):
    g = free.element((1, 2, 2, -1, -2))
    m = np.eye(2)
    for x in g.word:
        m = m @ free.letter_matrix(x)[0]
    assert GroupElement((), m[None]) == g


def test_shared_preset_instance():
    assert get_preset("psl2z") is get_preset("psl2z")


def test_load_custom_document(tmp_path):
    doc = {"factors": 1, "generators": [[[[1, 2], [0, 1]]], [[[1, 0], [2, 1]]]], "peripherals": [1]}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    P = load_custom(path)
    assert P.d == 1 and len(P.peripherals) == 1
    assert len(enumerate_ball(P, 1)) == 5


def test_load_custom_rejects_wrong_factor_count():
    with pytest.raises(FactorMismatch):
        load_custom({"factors": 2, "generators": [[[[1, 1], [0, 1]]]]})


WORDS = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=6)


@settings(max_examples=200, deadline=None)
@given(WORDS, WORDS, WORDS)
def test_associativity(u, v, w):
    P = get_preset("schottky2")
    a, b, c = P.element(u), P.element(v), P.element(w)
    left = ((a * b) * c).matrices
    right = (a * (b * c)).matrices
    scale = max(1.0, np.abs(left).max())
    np.testing.assert_allclose(left / scale, right / scale, atol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([1, 2, -2]), max_size=8))
def test_modular_reduction_preserves_element(word):
    P = get_preset("psl2z")
    g = P.element(word)
    assert GroupElement((), P.word_matrices(g.word)) == GroupElement((), P.word_matrices(word))
    assert len(g.word) <= len(word)
