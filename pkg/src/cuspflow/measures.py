"""Orbit counting, critical exponents, finite Patterson measures, shadows,
thin-part series, BMS sampling and correlation probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cusp import BudgetExceeded
from .groups import GroupPreset, inverse_matrices
from .lie import (
    GP_TOL,
    LinearForm,
    attracting_vectors,
    busemann_batch,
    cartan_array,
    is_proximal,
    shadow_mask,
    top_left_singular_vectors,
)


class InsufficientRange(ValueError):
    pass


class EmptyCone(ValueError):
    pass


class NoProximalElements(ValueError):
    pass


class RejectionRateExceeded(RuntimeError):
    pass


class SmallEffectiveSample(ValueError):
    pass


# ---------------------------------------------------------------------------
# orbit tables


@dataclass
class OrbitTable:
    """Orbit data for a finite set of group elements.

    ``complete_to`` is the largest T (for the reference form ``alpha``) such
    that every group element of the enumerated family with alpha(mu) <= T is
    present.  Counting curves are only trusted up to there.
    """

    matrices: np.ndarray
    mu: np.ndarray
    word_length: np.ndarray
    complete_alpha: np.ndarray
    label: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self._proximal = None
        self._attr = None

    def __len__(self):
        return len(self.mu)

    @property
    def d(self) -> int:
        return self.mu.shape[1]

    def psi(self, form: LinearForm) -> np.ndarray:
        return np.asarray(form(self.mu), dtype=float)

    def complete_to(self, form: LinearForm) -> float:
        """Completeness bound for psi: a per-factor alpha bound maps to min_i c_i * bound_i."""
        c = np.asarray(form.c)
        return float(np.min(c * self.complete_alpha))

    def sorted_psi(self, form: LinearForm) -> np.ndarray:
        return np.sort(self.psi(form))

    def proximal(self) -> np.ndarray:
        if self._proximal is None:
            self._proximal = is_proximal(self.matrices)
        return self._proximal

    def attracting(self) -> np.ndarray:
        """Attracting vectors (N, d, 2); rows of non-proximal elements are NaN."""
        if self._attr is None:
            out = np.full(self.matrices.shape[:-1], np.nan)
            p = self.proximal()
            if p.any():
                out[p] = attracting_vectors(self.matrices[p], strict=False)
            self._attr = out
        return self._attr

    def counting_curve(self, form: LinearForm, grid: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.sorted_psi(form), grid, side="right")

    def restrict(self, mask: np.ndarray, label: str | None = None) -> "OrbitTable":
        return OrbitTable(self.matrices[mask], self.mu[mask], self.word_length[mask],
                          self.complete_alpha, label or self.label, dict(self.extra))

    # -- constructors
    @classmethod
    def from_ball(cls, preset: GroupPreset, radius: int) -> "OrbitTable":
        """All elements of word length <= radius.

        Completeness per factor is taken as the smallest alpha over the
        outermost sphere: longer words are assumed to be at least that large
        (true up to bounded error for the ping-pong presets).
        """
        ball = preset.ball(radius)
        mats = ball.matrices
        mu = cartan_array(mats)
        outer = ball.lengths == ball.radius
        comp = (2.0 * mu[outer]).min(axis=0) if outer.any() else np.full(mu.shape[1], np.inf)
        return cls(mats, mu, ball.lengths.astype(np.int64), comp, f"{preset.name}-ball{radius}")

    @classmethod
    def sl2z_by_norm(cls, t_max: float) -> "OrbitTable":
        """Every element of PSL(2,Z) with alpha(mu) <= t_max, by exact integer enumeration.

        ||g||_F^2 = 2 cosh(alpha(mu(g))), so the bound is a Frobenius-norm
        bound.  For each primitive first column (a, c) taken up to sign, the
        second columns form the line (b0, d0) + k(a, c) and the admissible k
        form an interval.
        """
        bound = 2.0 * math.cosh(t_max)
        m = int(math.isqrt(int(bound))) + 1
        blocks = []
        for c in range(0, m + 1):
            amax = int(math.isqrt(max(int(bound) - c * c, 0))) + 1
            a = np.arange(-amax, amax + 1, dtype=np.int64)
            if c == 0:
                a = np.array([1], dtype=np.int64)
            a = a[np.gcd(a, c) == 1]
            a = a[a * a + c * c < bound]
            if len(a) == 0:
                continue
            cc = np.full_like(a, c)
            # solve a*d0 - c*b0 = 1
            g, x, y = _ext_gcd(a, -cc)
            d0, b0 = x * np.sign(g), y * np.sign(g)
            r2 = (a * a + cc * cc).astype(float)
            p = (b0 * a + d0 * cc) / r2
            rem = bound - r2 - 1.0 / r2
            ok = rem >= 0
            a, cc, b0, d0, r2, p, rem = a[ok], cc[ok], b0[ok], d0[ok], r2[ok], p[ok], rem[ok]
            h = np.sqrt(rem / r2)
            klo = np.ceil(-p - h - 1e-12).astype(np.int64)
            khi = np.floor(-p + h + 1e-12).astype(np.int64)
            cnt = np.maximum(khi - klo + 1, 0)
            rep = np.repeat(np.arange(len(a)), cnt)
            k = klo[rep] + (np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt))
            A, C = a[rep], cc[rep]
            B, D = b0[rep] + k * A, d0[rep] + k * C
            blocks.append(np.stack([A, B, C, D], axis=1))
        abcd = np.concatenate(blocks)
        fro = (abcd.astype(float) ** 2).sum(axis=1)
        abcd = abcd[fro <= bound * (1 + 1e-12)]
        mats = abcd.reshape(-1, 1, 2, 2).astype(float)
        mu = cartan_array(mats)
        order = np.argsort(2 * mu[:, 0], kind="stable")
        return cls(mats[order], mu[order], np.full(len(order), -1, dtype=np.int64),
                   np.array([t_max]), f"sl2z-norm{t_max:g}", {"integer": abcd[order]})

    @classmethod
    def peripheral_powers(cls, preset: GroupPreset, pid: str | None = None,
                          t_max: float = 20.0, n_max: int | None = None,
                          max_elements: int = 5_000_000) -> "OrbitTable":
        """Powers p^n, |n| <= n_max, of a cyclic peripheral generator (identity included).

        For a unipotent generator, n_max defaults to the largest n with
        alpha(mu(p^n)) <= t_max using alpha = arccosh(1 + n^2 x^2 / 2).
        """
        per = preset.peripherals[0] if pid is None else preset.peripheral(pid)
        if len(per.generators) != 1:
            raise ValueError("peripheral_powers expects a cyclic peripheral")
        gen = preset.generators[per.generators[0] - 1].matrices
        eye = np.broadcast_to(np.eye(2), gen.shape)
        sg = np.sign(gen[:, 0, 0] + gen[:, 1, 1])[:, None, None]
        nil = gen * sg - eye
        unipotent = np.allclose(nil @ nil, 0.0, atol=1e-10)
        if unipotent:
            if n_max is None:
                x = np.abs(nil).max()
                n_max = int(math.floor(math.sqrt(2.0 * (math.cosh(t_max) - 1.0)) / x))
                while n_max > 0 and 2 * cartan_array((eye + n_max * nil)[None])[0].min() > t_max:
                    n_max -= 1
            if n_max > max_elements:
                raise BudgetExceeded(f"{2 * n_max + 1} peripheral powers exceed the cap {2 * max_elements + 1}")
            n = np.concatenate([[0], np.arange(1, n_max + 1), -np.arange(1, n_max + 1)])
            mats = eye[None] + n[:, None, None, None] * nil[None]
        else:
            if n_max is None:
                raise ValueError("n_max required for non-unipotent peripherals")
            pos, neg = [np.array(eye)], []
            m, mi, ginv = np.array(eye), np.array(eye), inverse_matrices(gen)
            for _ in range(n_max):
                m, mi = m @ gen, mi @ ginv
                pos.append(m)
                neg.append(mi)
            n = np.concatenate([np.arange(0, n_max + 1), -np.arange(1, n_max + 1)])
            mats = np.stack(pos + neg)
        mu = cartan_array(mats)
        order = np.argsort(2 * mu.sum(axis=1), kind="stable")
        comp = np.full(mu.shape[1], 2 * mu[n == n_max].min() if n_max else 0.0)
        return cls(mats[order], mu[order], np.abs(n[order]).astype(np.int64), comp,
                   f"{preset.name}-peripheral{per.id}", {"power": n[order]})


def _ext_gcd(a: np.ndarray, b: np.ndarray):
    """Vectorized extended Euclid: g = a x + b y."""
    old_r, r = a.astype(np.int64).copy(), b.astype(np.int64).copy()
    old_s, s = np.ones_like(old_r), np.zeros_like(old_r)
    old_t, t = np.zeros_like(old_r), np.ones_like(old_r)
    while np.any(r != 0):
        nz = r != 0
        q = np.zeros_like(r)
        q[nz] = old_r[nz] // r[nz]
        old_r, r = np.where(nz, r, old_r), np.where(nz, old_r - q * r, r)
        old_s, s = np.where(nz, s, old_s), np.where(nz, old_s - q * s, s)
        old_t, t = np.where(nz, t, old_t), np.where(nz, old_t - q * t, t)
    return old_r, old_s, old_t


# ---------------------------------------------------------------------------
# Poincare series and exponents


def poincare_partial(table: OrbitTable, form: LinearForm, s: float, T: float) -> float:
    v = table.psi(form)
    v = v[v <= T + 1e-12]
    return float(np.exp(-s * v).sum())


@dataclass(frozen=True)
class ExponentEstimate:
    delta: float
    stderr: float
    t_range: tuple[float, float]
    n_points: int = 0

    def agrees_with(self, other: "ExponentEstimate", k: float = 1.0) -> bool:
        return abs(self.delta - other.delta) <= k * math.hypot(self.stderr, other.stderr) + 1e-12


def fit_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """OLS slope, its standard error and intercept."""
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = ((x - xm) ** 2).sum()
    slope = ((x - xm) * (y - ym)).sum() / sxx
    icpt = ym - slope * xm
    res = y - icpt - slope * x
    se = math.sqrt(max((res**2).sum() / max(n - 2, 1), 0.0) / sxx)
    return float(slope), float(se), float(icpt)


def exponent_from_values(values: np.ndarray, t_max: float, n_grid: int = 64,
                         min_range: float = 8.0) -> ExponentEstimate:
    """Slope of log N(T) over the upper half [t_max/2, t_max] of the counting range."""
    if not np.isfinite(t_max) or t_max < min_range:
        raise InsufficientRange(f"counting range {t_max:.3g} shorter than {min_range}")
    vals = np.sort(values)
    grid = np.linspace(t_max / 2.0, t_max, n_grid)
    n = np.searchsorted(vals, grid * (1 + 1e-12), side="right")
    if np.any(n == 0):
        raise InsufficientRange("empty counting function on the fit range")
    slope, se, _ = fit_slope(grid, np.log(n))
    return ExponentEstimate(slope, se, (float(grid[0]), float(grid[-1])), n_grid)


def critical_exponent(table: OrbitTable, form: LinearForm, t_max: float | None = None,
                      min_range: float = 8.0) -> ExponentEstimate:
    t_max = table.complete_to(form) if t_max is None else min(t_max, table.complete_to(form))
    return exponent_from_values(table.psi(form), t_max, min_range=min_range)


def normalize_to_tangent(form: LinearForm, table: OrbitTable, estimate: ExponentEstimate | None = None
                         ) -> LinearForm:
    est = critical_exponent(table, form) if estimate is None else estimate
    if not (est.delta > 0 and np.isfinite(est.delta)):
        raise ValueError("degenerate exponent estimate")
    return form.scaled(est.delta)


def growth_indicator_sample(table: OrbitTable, direction, cone_angle: float,
                            t_max: float | None = None, min_range: float = 8.0) -> float:
    """||u|| times the exponent of #{gamma : mu(gamma) in cone(u), ||mu|| <= T}.

    Cartan vectors are measured in root coordinates (2 mu per factor) with
    the Euclidean norm, so for d = 1 this is the alpha critical exponent.
    """
    u = np.asarray(direction, dtype=float).reshape(-1)
    if len(u) != table.d:
        raise ValueError("direction dimension mismatch")
    nu = float(np.linalg.norm(u))
    x = 2.0 * table.mu
    r = np.linalg.norm(x, axis=1)
    cosang = (x @ u) / np.maximum(r * nu, 1e-300)
    inside = (cosang >= math.cos(cone_angle) - 1e-12) | (r == 0)
    if inside.sum() <= 1:
        raise EmptyCone("no orbit points in the cone")
    if t_max is None:
        t_max = float(np.min(table.complete_alpha)) if table.d > 1 else float(table.complete_alpha[0])
    est = exponent_from_values(r[inside], t_max, min_range=min_range)
    return nu * est.delta


# ---------------------------------------------------------------------------
# finite Patterson measures


@dataclass
class AtomicMeasure:
    """Weighted flags; ``mu`` optionally keeps the Cartan vector behind each atom."""

    vectors: np.ndarray
    weights: np.ndarray
    mu: np.ndarray | None = None

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)

    def measure(self, mask: np.ndarray) -> float:
        return float(self.weights[mask].sum())

    def pushed(self, g: np.ndarray) -> "AtomicMeasure":
        v = np.einsum("dij,ndj->ndi", g, self.vectors)
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        return AtomicMeasure(v, self.weights.copy())

    def spread_sample(self, idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Flags of atoms ``idx`` rotated uniformly within their shadow scale e^{-2 mu_i}."""
        v = self.vectors[idx]
        if self.mu is None:
            return v
        half = np.exp(-2.0 * self.mu[idx])
        ang = np.arctan2(v[..., 1], v[..., 0]) + rng.uniform(-1.0, 1.0, size=half.shape) * half
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def merge_atoms(vectors: np.ndarray, weights: np.ndarray, mu: np.ndarray | None = None,
                tol: float = 1e-9) -> AtomicMeasure:
    """Combine atoms whose flags agree at hash tolerance (the first Cartan vector is kept)."""
    v = np.where((vectors[..., :1] < 0) | ((vectors[..., :1] == 0) & (vectors[..., 1:] < 0)),
                 -vectors, vectors)
    keys = np.round(v.reshape(len(v), -1) / tol).astype(np.int64)
    _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=weights, minlength=len(first))
    return AtomicMeasure(v[first], w, None if mu is None else mu[first])


def patterson_measure(table: OrbitTable, form: LinearForm, s: float, T: float,
                      atoms: str = "attracting", shell: float | None = None) -> AtomicMeasure:
    """Normalized sum of e^{-s psi(mu(gamma))} point masses, psi(mu(gamma)) <= T.

    Atoms sit at attracting flags of proximal elements; ``atoms="cartan"``
    uses the top left singular flag of every element instead.  ``shell``
    keeps only T - shell < psi <= T, which removes the heavy atoms of short
    elements that dominate at finite T.
    """
    v = table.psi(form)
    keep = v <= T + 1e-12
    if shell is not None:
        keep &= v > T - shell
    if atoms == "attracting":
        keep &= table.proximal()
        if not keep.any():
            raise NoProximalElements("no proximal elements below T")
        vecs = table.attracting()[keep]
    elif atoms == "cartan":
        vecs = top_left_singular_vectors(table.matrices[keep])
    else:
        raise ValueError(atoms)
    w = np.exp(-s * (v[keep] - v[keep].min()))
    m = merge_atoms(vecs, w, table.mu[keep])
    m.weights = m.weights / m.weights.sum()
    return m


def shadow_ratio(nu: AtomicMeasure, gamma: np.ndarray, R: float, form: LinearForm,
                 s: float = 1.0) -> tuple[float, bool]:
    """(nu(shadow of gamma o seen from o, radius R) * e^{s psi(mu(gamma))}, empty flag)."""
    g = np.asarray(gamma, dtype=float)
    mask = shadow_mask(nu.vectors, g, R)
    mass = nu.measure(mask)
    psi = float(form(cartan_array(g[None])[0]))
    return mass * math.exp(s * psi), mass == 0.0


def conformality_check(nu: AtomicMeasure, gamma: np.ndarray, cell: Callable[[np.ndarray], np.ndarray],
                       form: LinearForm, s: float) -> tuple[float, float]:
    """(gamma_* nu(C), integral over C of e^{s psi(beta_xi(e, gamma))} d nu(xi)).

    ``cell`` maps unit vectors (N, d, 2) to a boolean mask.
    """
    g = np.asarray(gamma, dtype=float)
    moved = nu.pushed(g)
    lhs = nu.measure(cell(moved.vectors))
    inside = cell(nu.vectors)
    if not inside.any():
        return lhs, 0.0
    gstack = np.broadcast_to(g, (int(inside.sum()),) + g.shape)
    beta = busemann_batch(nu.vectors[inside], gstack)
    rhs = float((nu.weights[inside] * np.exp(s * form(beta))).sum())
    return lhs, rhs


# ---------------------------------------------------------------------------
# entropy drop and thin-part finiteness


@dataclass(frozen=True)
class EntropyDrop:
    peripheral: ExponentEstimate
    threshold: float
    passed: bool


def entropy_drop_check(peripheral: OrbitTable, form: LinearForm, group_exponent: float = 1.0,
                       t_max: float | None = None) -> EntropyDrop:
    """Pass iff delta_psi(P) + 2 stderr < delta_psi(Gamma) (1 after normalization)."""
    est = critical_exponent(peripheral, form, t_max)
    return EntropyDrop(est, group_exponent, bool(est.delta + 2.0 * est.stderr < group_exponent))


@dataclass(frozen=True)
class ThinMassSeries:
    psi: np.ndarray
    increments: np.ndarray
    partial: np.ndarray

    @property
    def total(self) -> float:
        return float(self.partial[-1]) if len(self.partial) else 0.0

    @property
    def last_increment(self) -> float:
        return float(self.increments[-1]) if len(self.increments) else 0.0

    def max_increment_beyond(self, level: float) -> float:
        sel = self.psi > level
        return float(self.increments[sel].max()) if sel.any() else 0.0

    def tail_beyond(self, level: float) -> float:
        sel = self.psi > level
        return float(self.increments[sel].sum())

    def value_at(self, T: float) -> float:
        k = np.searchsorted(self.psi, T, side="right")
        return float(self.partial[k - 1]) if k else 0.0

    def rows(self):
        return list(zip(self.psi.tolist(), self.increments.tolist(), self.partial.tolist()))


def thin_mass_series(peripheral: OrbitTable, form: LinearForm, C: float, T: float | None = None
                     ) -> ThinMassSeries:
    """Partial sums of (2C + psi(mu(p))) e^{-psi(mu(p))} over peripheral elements by psi."""
    v = np.sort(peripheral.psi(form))
    if T is not None:
        v = v[v <= T + 1e-12]
    if len(v) == 0:
        z = np.zeros(0)
        return ThinMassSeries(z, z, z)
    inc = (2.0 * C + v) * np.exp(-v)
    return ThinMassSeries(v, inc, np.cumsum(inc))


def parabolic_tail_integral(C: float, n_lo: float, n_hi: float = math.inf) -> float:
    """Both-signs integral of (2C + 2 ln x) x^-2 over [n_lo, n_hi]."""
    def prim(x):
        return 0.0 if math.isinf(x) else -(2.0 * C + 2.0 * math.log(x) + 2.0) / x
    return 2.0 * (prim(n_hi) - prim(n_lo))


# ---------------------------------------------------------------------------
# BMS sampling and correlation


@dataclass
class FlowSample:
    xi: np.ndarray
    eta: np.ndarray
    s: np.ndarray
    weight: np.ndarray
    form: LinearForm
    rejected: int = 0

    def __len__(self):
        return len(self.s)

    @property
    def effective_size(self) -> float:
        w = self.weight
        return float(w.sum() ** 2 / (w * w).sum())


def _gromov(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    det = xi[..., 0] * eta[..., 1] - xi[..., 1] * eta[..., 0]
    return np.abs(det)


def bms_sample(nu: AtomicMeasure, nu_i: AtomicMeasure, n: int, seed: int, form: LinearForm,
               s_window: tuple[float, float] = (0.0, 1.0), max_gromov: float = math.inf,
               centered: bool = False, spread: bool = False, max_reject: float = 0.9
               ) -> FlowSample:
    """(xi, eta, s) with xi ~ nu, eta ~ nu_i, s uniform, weight e^{psi(<xi, eta>)}.

    ``max_gromov`` rejects pairs whose psi-Gromov product exceeds it (their
    geodesics pass far from the basepoint).  With ``centered`` (d = 1) the
    s-window is taken relative to the point of the geodesic closest to the
    basepoint, which makes the sampling region compact.  ``spread`` replaces
    each drawn atom by a uniform flag inside its shadow scale, so that finite
    atom sets do not pin forward rays to a few deterministic continuations.
    """
    rng = np.random.default_rng(seed)
    p1, p2 = nu.weights / nu.weights.sum(), nu_i.weights / nu_i.weights.sum()
    xs, es, need, tried = [], [], n, 0
    while need > 0:
        k = max(2 * need, 64)
        i = rng.choice(len(p1), size=k, p=p1)
        j = rng.choice(len(p2), size=k, p=p2)
        tried += k
        vi = nu.spread_sample(i, rng) if spread else nu.vectors[i]
        vj = nu_i.spread_sample(j, rng) if spread else nu_i.vectors[j]
        det = _gromov(vi, vj)
        ok = np.all(det > GP_TOL, axis=-1)
        if math.isfinite(max_gromov):
            gp = np.asarray(form(-np.log(np.maximum(det, 1e-300))))
            ok &= gp <= max_gromov
        vi, vj = vi[ok][:need], vj[ok][:need]
        xs.append(vi)
        es.append(vj)
        need -= len(vi)
        accepted = n - need
        if tried >= 1000 and (tried - accepted) / tried > max_reject:
            raise RejectionRateExceeded(f"rejection rate above {max_reject:.0%}")
    xi, eta = np.concatenate(xs), np.concatenate(es)
    s = rng.uniform(s_window[0], s_window[1], size=n)
    if centered:
        s = s + closest_point_coordinate(xi, eta, form)
    w = np.exp(form(-np.log(_gromov(xi, eta))))
    return FlowSample(xi, eta, s, np.asarray(w, dtype=float), form, tried - n)


# -- unit tangent vectors for d = 1 and reduction to the modular fundamental domain


def _frames(xi: np.ndarray, eta: np.ndarray):
    """g in SL(2,R) with g.inf = xi, g.0 = eta, and beta_xi(e, g) (d = 1)."""
    v, w = xi[:, 0], eta[:, 0]
    det = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
    r = np.sqrt(np.abs(det))
    sg = np.sign(det)
    g = np.empty((len(v), 2, 2))
    g[:, 0, 0], g[:, 1, 0] = v[:, 0] / r, v[:, 1] / r
    g[:, 0, 1], g[:, 1, 1] = sg * w[:, 0] / r, sg * w[:, 1] / r
    b0 = busemann_batch(v[:, None, :], g[:, None])[:, 0]
    return g, b0


def closest_point_coordinate(xi: np.ndarray, eta: np.ndarray, form: LinearForm) -> np.ndarray:
    """s-coordinate of the point of the geodesic (eta, xi) closest to i (d = 1)."""
    g, b0 = _frames(xi, eta)
    a, b, c, d = g[:, 0, 0], g[:, 0, 1], g[:, 1, 0], g[:, 1, 1]
    # g^-1 i = (d i - b) / (-c i + a); its modulus is the height of the foot on i R+
    tau_c = np.log(np.abs((1j * d - b) / (-1j * c + a)))
    cf = form.c[0]
    return cf * (2.0 * b0 + tau_c)


def unit_tangents(xi: np.ndarray, eta: np.ndarray, s: np.ndarray, form: LinearForm):
    """Base point z and direction angle of the flow points (xi, eta, s), d = 1.

    The geodesic runs from eta to xi; the base point is where the psi-scaled
    Busemann coordinate toward xi equals s.
    """
    g, b0 = _frames(xi, eta)
    a, b, cc, d = g[:, 0, 0], g[:, 0, 1], g[:, 1, 0], g[:, 1, 1]
    tau = np.asarray(s) / form.c[0] - 2.0 * b0  # hyperbolic distance along g a_t i
    wpt = 1j * np.exp(tau)
    z = (a * wpt + b) / (cc * wpt + d)
    theta = np.pi / 2.0 - 2.0 * np.angle(cc * wpt + d)
    return z, theta


def transport_tangent(z: complex, theta: float, t: float) -> tuple[complex, float]:
    """Unit tangent vector (z, theta) of the hyperbolic plane moved by geodesic time t."""
    x, y = z.real, z.imag
    phi = (np.pi / 2.0 - theta) / 2.0
    sq = math.sqrt(y)
    g = np.array([[sq, x / sq], [0.0, 1.0 / sq]]) @ np.array(
        [[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    (a, b), (c, d) = g
    w = 1j * math.exp(t)
    return complex((a * w + b) / (c * w + d)), float(np.pi / 2.0 - 2.0 * np.angle(c * w + d))


def fold_modular(z: np.ndarray, theta: np.ndarray, max_iter: int = 200):
    """Reduce base points to {|Re z| <= 1/2, |z| >= 1} carrying directions along."""
    z = np.array(z, dtype=complex)
    th = np.array(theta, dtype=float)
    for _ in range(max_iter):
        n = np.round(z.real)
        z = z - n
        inv = np.abs(z) < 1.0 - 1e-14
        if not inv.any():
            break
        # z -> -1/z has derivative 1/z^2
        th[inv] = th[inv] - 2.0 * np.angle(z[inv])
        z[inv] = -1.0 / z[inv]
    return z, np.mod(th + np.pi, 2 * np.pi) - np.pi


@dataclass(frozen=True)
class Bump:
    """Smooth bump on flow points.

    ``kind="chart"``: Gaussian in (chart xi, chart eta) times a compact
    bump in s, on the cover.  ``kind="modular"``: Gaussian in the
    hyperbolic distance from the folded base point to ``center`` times a
    von Mises factor in the direction; automorphic for PSL(2, Z).
    """

    center: tuple[float, float]
    width: float
    direction: float = 0.0
    concentration: float = 1.0
    s_center: float = 0.0
    s_width: float = math.inf
    kind: str = "modular"

    def __call__(self, sample_xi, sample_eta, s, form) -> np.ndarray:
        if self.kind == "constant":
            return np.ones(len(s))
        if self.kind == "chart":
            x = _chart(sample_xi)
            y = _chart(sample_eta)
            g = np.exp(-((x - self.center[0]) ** 2 + (y - self.center[1]) ** 2) / (2 * self.width**2))
            return g * _compact(s, self.s_center, self.s_width)
        z, th = unit_tangents(sample_xi, sample_eta, s, form)
        z, th = fold_modular(z, th)
        z0 = complex(*self.center)
        dist = np.arccosh(1.0 + np.abs(z - z0) ** 2 / (2.0 * z.imag * z0.imag))
        return np.exp(-(dist**2) / (2 * self.width**2)) * np.exp(
            self.concentration * (np.cos(th - self.direction) - 1.0))


def _chart(vecs: np.ndarray) -> np.ndarray:
    v = vecs[:, 0]
    return np.arctan2(v[:, 1], v[:, 0]) % np.pi


def _compact(s, center, width):
    if math.isinf(width):
        return np.ones_like(s)
    x = (np.asarray(s) - center) / width
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


@dataclass(frozen=True)
class Correlation:
    t: float
    value: float
    stderr: float
    effective_size: float


def correlation(sample: FlowSample, f1, f2, t: float, min_effective: float = 100.0) -> Correlation:
    """Weighted mean of f1(phi_t x) f2(x) minus the product of weighted means."""
    ess = sample.effective_size
    if ess < min_effective:
        raise SmallEffectiveSample(f"effective sample size {ess:.1f} < {min_effective}")
    w = sample.weight / sample.weight.sum()
    a = f1(sample.xi, sample.eta, sample.s + t, sample.form)
    b = f2(sample.xi, sample.eta, sample.s, sample.form)
    ma, mb = float(w @ a), float(w @ b)
    z = (a - ma) * (b - mb)
    c = float(w @ z)
    se = float(np.sqrt(np.sum(w * w * (z - c) ** 2)))
    return Correlation(float(t), c, se, ess)
