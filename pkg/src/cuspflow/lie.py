"""Cartan and Jordan projections, Busemann cocycles and flags for SL(2, R)^d.

Everything here works on stacked factor matrices of shape (..., d, 2, 2)
as well as on ``GroupElement`` objects.  The a-coordinate of a factor is
u = log s1 (top singular value), so the simple root is alpha(u) = 2u and
alpha(mu(g)) is the hyperbolic displacement d(o, g o) in that factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .groups import GroupElement, inverse_matrices

GP_TOL = 1e-7
UNIT_TOL = 1e-9


class DegenerateFlags(ValueError):
    """Flags not in general position."""


class NotProximal(ValueError):
    pass


def _mats(g) -> np.ndarray:
    if isinstance(g, GroupElement):
        return g.matrices
    m = np.asarray(g, dtype=float)
    return m[None] if m.ndim == 2 else m


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class CartanVector:
    u: tuple[float, ...]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.u, dtype=dtype)

    @property
    def roots(self) -> np.ndarray:
        return 2.0 * np.asarray(self.u)


@dataclass(frozen=True)
class LinearForm:
    """psi(u) = sum_i c_i * 2 u_i."""

    c: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.c))
        if not c or any(x <= 0 for x in c):
            raise ValueError(f"linear form needs positive coefficients, got {c}")
        object.__setattr__(self, "c", c)

    @classmethod
    def parse(cls, text: str) -> "LinearForm":
        return cls(tuple(float(x) for x in str(text).split(",")))

    @property
    def d(self) -> int:
        return len(self.c)

    def __call__(self, u) -> np.ndarray | float:
        u = np.asarray(u, dtype=float)
        val = 2.0 * (u * np.asarray(self.c)).sum(axis=-1)
        return float(val) if val.ndim == 0 else val

    def scaled(self, t: float) -> "LinearForm":
        return LinearForm(tuple(t * x for x in self.c))


class Flag:
    """A point of (RP^1)^d stored as sign-normalized unit vectors, shape (d, 2)."""

    __slots__ = ("v",)

    def __init__(self, vectors):
        v = np.array(vectors, dtype=float).reshape(-1, 2)
        n = np.linalg.norm(v, axis=1, keepdims=True)
        if np.any(n < 1e-300):
            raise ValueError("zero vector is not a flag")
        v = _sign_vec(v / n)
        v.setflags(write=False)
        self.v = v

    @property
    def d(self) -> int:
        return self.v.shape[0]

    def chart(self) -> np.ndarray:
        """Angle in [0, pi) of each factor line."""
        return np.mod(np.arctan2(self.v[:, 1], self.v[:, 0]), np.pi)

    def boundary_point(self) -> np.ndarray:
        """Upper half-plane boundary coordinate x/y (inf for e1)."""
        with np.errstate(divide="ignore"):
            return np.where(np.abs(self.v[:, 1]) < 1e-300, np.inf, self.v[:, 0] / self.v[:, 1])

    def moved(self, g) -> "Flag":
        return Flag(np.einsum("dij,dj->di", _mats(g), self.v))

    def close_to(self, other: "Flag", tol: float = 1e-6) -> bool:
        return bool(np.all(np.abs(np.abs(np.einsum("di,di->d", self.v, other.v)) - 1.0) < tol)
                    or np.allclose(self.v, other.v, atol=tol))

    def __eq__(self, other):
        return isinstance(other, Flag) and self.d == other.d and self.close_to(other, 1e-9)

    def __hash__(self):
        return hash(np.round(self.v, 7).tobytes())

    def __repr__(self):
        return f"Flag({np.array2string(self.v, precision=5)})"

    def to_list(self) -> list:
        return self.v.tolist()


def _sign_vec(v: np.ndarray) -> np.ndarray:
    first = np.where(np.abs(v[..., 0]) > UNIT_TOL, v[..., 0], v[..., 1])
    return v * np.where(first < 0, -1.0, 1.0)[..., None]


def standard_flag(d: int, which: int = 0) -> Flag:
    e = np.zeros((d, 2))
    e[:, which] = 1.0
    return Flag(e)


@dataclass(frozen=True)
class FlagPair:
    xi: Flag
    eta: Flag

    def __post_init__(self):
        if not general_position(self.xi, self.eta):
            raise DegenerateFlags("flags are not in general position")


def general_position(xi: Flag, eta: Flag, tol: float = GP_TOL) -> bool:
    det = xi.v[:, 0] * eta.v[:, 1] - xi.v[:, 1] * eta.v[:, 0]
    return bool(np.all(np.abs(det) > tol))


# ---------------------------------------------------------------------------
# projections


def top_singular_log(m: np.ndarray) -> np.ndarray:
    """log s1 for stacked 2x2 matrices of determinant +-1."""
    f = (m * m).sum(axis=(-1, -2))
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(np.maximum(f * f - 4.0 * det * det, 0.0))
    s1sq = 0.5 * (f + disc)
    return np.maximum(0.5 * np.log(s1sq), 0.0)


def cartan_array(m: np.ndarray) -> np.ndarray:
    return top_singular_log(np.asarray(m, dtype=float))


def cartan_projection(g) -> CartanVector:
    return CartanVector(tuple(float(x) for x in top_singular_log(_mats(g))))


def jordan_array(m: np.ndarray) -> np.ndarray:
    tr = np.abs(m[..., 0, 0] + m[..., 1, 1])
    return np.arccosh(np.maximum(tr / 2.0, 1.0))


def jordan_projection(g) -> CartanVector:
    return CartanVector(tuple(float(x) for x in jordan_array(_mats(g))))


def top_left_singular_vectors(m: np.ndarray) -> np.ndarray:
    """Unit vector spanning the most expanded direction of g (image side)."""
    mmt = m @ np.swapaxes(m, -1, -2)
    w, vecs = np.linalg.eigh(mmt)
    return _sign_vec(vecs[..., :, 1])


def attracting_vectors(m: np.ndarray, strict: bool = True) -> np.ndarray:
    """Top eigenvectors of proximal factors, shape (..., d, 2)."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    tr = a + d
    if strict and np.any(np.abs(tr) <= 2.0 + 1e-12):
        raise NotProximal("a factor has |trace| <= 2")
    disc = np.sqrt(np.maximum(tr * tr - 4.0, 0.0))
    lam = 0.5 * (tr + np.sign(tr) * disc)
    v1 = np.stack([b, lam - a], axis=-1)
    v2 = np.stack([lam - d, c], axis=-1)
    n1 = np.linalg.norm(v1, axis=-1)
    n2 = np.linalg.norm(v2, axis=-1)
    v = np.where((n1 >= n2)[..., None], v1, v2)
    n = np.maximum(np.linalg.norm(v, axis=-1, keepdims=True), 1e-300)
    return _sign_vec(v / n)


def attracting_flag(g) -> Flag:
    return Flag(attracting_vectors(_mats(g)))


def repelling_flag(g) -> Flag:
    return Flag(attracting_vectors(inverse_matrices(_mats(g))))


def is_proximal(m: np.ndarray) -> np.ndarray:
    tr = np.abs(m[..., 0, 0] + m[..., 1, 1])
    return np.all(tr > 2.0 + 1e-9, axis=-1)


# ---------------------------------------------------------------------------
# Iwasawa cocycle and Busemann functions


def iwasawa_cocycle(g, xi: Flag) -> np.ndarray:
    """sigma(g, xi) per factor: log |g v_xi| for the unit vector of xi.

    This is the a-part of the Iwasawa decomposition of g k (k e1 = v_xi)
    with positive diagonal convention.
    """
    gv = np.einsum("...dij,dj->...di", _mats(g), xi.v)
    return np.log(np.linalg.norm(gv, axis=-1))


def busemann(xi: Flag, g, h) -> np.ndarray:
    """beta_xi(g, h) = sigma(g^-1, xi) - sigma(h^-1, xi), per factor."""
    gi = inverse_matrices(_mats(g))
    hi = inverse_matrices(_mats(h))
    return iwasawa_cocycle(gi, xi) - iwasawa_cocycle(hi, xi)


def busemann_from_identity(xi: Flag, mats: np.ndarray) -> np.ndarray:
    """beta_xi(e, g) for stacked g: -log |g^-1 v_xi|."""
    return -iwasawa_cocycle(inverse_matrices(np.asarray(mats)), xi)


def busemann_batch(vecs: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """beta_{xi_k}(e, g_k) for paired stacks of unit vectors (N, d, 2) and matrices (N, d, 2, 2)."""
    gi = inverse_matrices(mats)
    w = np.einsum("ndij,ndj->ndi", gi, vecs)
    return -np.log(np.linalg.norm(w, axis=-1))


def gromov_product_flag(pair: FlagPair | tuple[Flag, Flag]) -> np.ndarray:
    """<xi, eta> per factor: -log |det[v_xi | v_eta]| for unit representatives."""
    xi, eta = (pair.xi, pair.eta) if isinstance(pair, FlagPair) else pair
    det = xi.v[:, 0] * eta.v[:, 1] - xi.v[:, 1] * eta.v[:, 0]
    if np.any(np.abs(det) <= GP_TOL):
        raise DegenerateFlags("flags are not in general position")
    return -np.log(np.abs(det))


def gromov_product_via_busemann(xi: Flag, eta: Flag, scale: float = 1.0) -> np.ndarray:
    """The same product built from beta_xi(e, g) + beta_eta(e, g).

    Here g has columns proportional to (v_xi, v_eta) with determinant 1;
    ``scale`` picks a different representative g a_t, the value must not
    depend on it.
    """
    out = np.empty(xi.d)
    for i in range(xi.d):
        x, y = xi.v[i], eta.v[i]
        det = x[0] * y[1] - x[1] * y[0]
        if abs(det) <= GP_TOL:
            raise DegenerateFlags("flags are not in general position")
        col2 = y * np.sign(det)
        r = np.sqrt(abs(det))
        g = np.column_stack([x * scale / r, col2 / (scale * r)])
        gi = inverse_matrices(g)
        # beta_xi(e, g) = -log|g^-1 v_xi| and for eta the flipped flag of g is g e2
        out[i] = -np.log(np.linalg.norm(gi @ x)) - np.log(np.linalg.norm(gi @ y))
    return out


# ---------------------------------------------------------------------------
# hyperbolic plane helpers


def orbit_points(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upper half-plane coordinates (x, y) of g . i for stacked 2x2 matrices."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    den = c * c + d * d
    return (a * c + b * d) / den, 1.0 / den


def hyperbolic_distance(z1, z2) -> np.ndarray:
    (x1, y1), (x2, y2) = z1, z2
    return np.arccosh(1.0 + ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2.0 * y1 * y2))


def distance_to_ray(vecs: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """Distance from g . i to the ray from i toward the boundary point of v.

    Rotate by k^-1 (k e1 = v) so the ray becomes {i e^s : s >= 0}; then the
    nearest point is the orthogonal foot when |z| >= 1 and i otherwise.
    """
    v1, v2 = vecs[..., 0], vecs[..., 1]
    kt = np.stack([np.stack([v1, v2], -1), np.stack([-v2, v1], -1)], -2)
    h = kt @ mats
    x, y = orbit_points(h)
    r2 = x * x + y * y
    foot = np.arcsinh(np.abs(x) / y)
    to_base = np.arccosh(1.0 + (x * x + (y - 1.0) ** 2) / (2.0 * y))
    return np.where(r2 >= 1.0, foot, to_base)


def flag_shadow_membership(xi: Flag, gamma, r: float) -> bool:
    if r <= 0:
        raise ValueError("shadow radius must be positive")
    return bool(np.all(distance_to_ray(xi.v, _mats(gamma)) < r))


def shadow_mask(vecs: np.ndarray, mats: np.ndarray, r: float) -> np.ndarray:
    """Membership of many flags (N, d, 2) in the shadow of one g (d, 2, 2)."""
    dist = distance_to_ray(vecs, np.broadcast_to(mats, vecs.shape[:-1] + (2, 2)))
    return np.all(dist < r, axis=-1)


def rotation(theta: float | Sequence[float]) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    c, s = np.cos(th), np.sin(th)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def diag_element(t: float | Sequence[float]) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((len(t), 2, 2))
    out[:, 0, 0] = np.exp(t)
    out[:, 1, 1] = np.exp(-t)
    return out
