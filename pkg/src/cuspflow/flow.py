"""Flow space Omega~ = Lambda^(2) x R, geodesic records and the reparameterization.

A norm on the fiber over a geodesic is stored through its log-scale ell with
||v||_sigma = |v| exp(-ell_sigma).  On thick times ell is the psi-Busemann
coordinate of the tracked orbit point; inside a horoball crossing it follows
the three-branch rule (inward slope c, outward slope c, affine middle third).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .coarse import FreeTree, NotStabilized, PLATEAU_TOL, hamenstadt_dplus
from .cusp import RIM_DEPTH, CuspGraph, crossings
from .groups import inverse_matrices, word_to_str
from .lie import (
    DegenerateFlags,
    Flag,
    FlagPair,
    LinearForm,
    _mats,
    busemann,
    busemann_batch,
    general_position,
    gromov_product_flag,
    top_left_singular_vectors,
)


class DegenerateCrossing(ValueError):
    """The whole window lies inside one horoball."""


class NoRepresentative(ValueError):
    pass


# ---------------------------------------------------------------------------
# points of the flow space


@dataclass(frozen=True)
class FlowPoint:
    pair: FlagPair
    s: float
    form: LinearForm

    @property
    def xi(self) -> Flag:
        return self.pair.xi

    @property
    def eta(self) -> Flag:
        return self.pair.eta

    def close_to(self, other: "FlowPoint", tol: float = 1e-6) -> bool:
        return (
            self.xi.close_to(other.xi, tol)
            and self.eta.close_to(other.eta, tol)
            and abs(self.s - other.s) <= tol * max(1.0, abs(self.s))
        )


def flow_point(xi: Flag, eta: Flag, s: float, form: LinearForm) -> FlowPoint:
    return FlowPoint(FlagPair(xi, eta), float(s), form)


def gamma_action(gamma, x: FlowPoint) -> FlowPoint:
    """gamma (xi, eta, s) = (gamma xi, gamma eta, s + psi(beta_xi(gamma^-1, e)))."""
    g = _mats(gamma)
    shift = x.form(busemann(x.xi, inverse_matrices(g), np.broadcast_to(np.eye(2), g.shape)))
    xi2, eta2 = x.xi.moved(g), x.eta.moved(g)
    if not general_position(xi2, eta2):
        raise DegenerateFlags("image pair is numerically degenerate")
    return FlowPoint(FlagPair(xi2, eta2), x.s + float(shift), x.form)


def translate_flow(t: float, x: FlowPoint) -> FlowPoint:
    return FlowPoint(x.pair, x.s + t, x.form)


def unstable_leaf_point(x: FlowPoint, new_xi: Flag) -> FlowPoint:
    """Move the forward flag along the unstable leaf of x.

    The point keeps eta and gets s + psi(<xi', eta> - <xi, eta>).
    """
    if new_xi == x.xi:
        return x
    shift = x.form(gromov_product_flag((new_xi, x.eta)) - gromov_product_flag((x.xi, x.eta)))
    return FlowPoint(FlagPair(new_xi, x.eta), x.s + float(shift), x.form)


def stable_leaf_point(x: FlowPoint, new_eta: Flag) -> FlowPoint:
    return FlowPoint(FlagPair(x.xi, new_eta), x.s, x.form)


# ---------------------------------------------------------------------------
# boundary limits of tracked sequences


def limit_flag(mats: np.ndarray, tol: float = PLATEAU_TOL, strict: bool = True) -> tuple[Flag, float]:
    """Stabilized left singular flag of a tracked sequence (N, d, 2, 2).

    Returns the flag of the last element and the largest deviation
    |sin angle| from it over the last quarter of the sequence.
    """
    mats = np.asarray(mats)
    n = len(mats)
    if n < 2:
        raise NotStabilized("boundary flag", math.inf)
    tail = top_left_singular_vectors(mats[-max(2, n // 4):])
    last = tail[-1]
    sin = np.abs(tail[..., 0] * last[..., 1] - tail[..., 1] * last[..., 0])
    spread = float(sin.max())
    if strict and spread > tol:
        raise NotStabilized("boundary flag", spread)
    return Flag(last), spread


def parabolic_flag(G: CuspGraph, vertex: int) -> Flag:
    """Fixed flag b . v_P of the horoball containing a thin vertex."""
    per = G.preset.peripherals[int(G.pidx[vertex])]
    base = G.base_matrices([vertex])[0]
    v = G.preset.fixed_vectors(per)
    return Flag(np.einsum("dij,dj->di", base, v))


def _ends_in_cusp(G: CuspGraph, ids: np.ndarray) -> bool:
    """Last quarter inside one horoball interior with nondecreasing depth."""
    tail = ids[-max(2, len(ids) // 4):]
    dep = G.depth[tail]
    if np.any(dep <= RIM_DEPTH):
        return False
    return bool(len(set(G.coset[tail].tolist())) == 1 and np.all(np.diff(dep) >= 0))


def boundary_map(ray, strict: bool = True, tol: float = PLATEAU_TOL) -> Flag:
    """Limit flag of a ray, a record window, or a raw stack of tracking matrices."""
    G = getattr(ray, "graph", None) or getattr(ray, "space", None)
    ids = getattr(ray, "vertices", None)
    if isinstance(G, CuspGraph) and ids is not None:
        ids = np.asarray(ids)
        if _ends_in_cusp(G, ids):
            return parabolic_flag(G, int(ids[-1]))
        mats = G.base_matrices(ids)
    elif hasattr(ray, "tracking_matrices"):
        mats = ray.tracking_matrices()
    else:
        mats = np.asarray(ray)
    return limit_flag(mats, tol, strict)[0]


# ---------------------------------------------------------------------------
# geodesic records


@dataclass(frozen=True)
class Crossing:
    region: int
    entry: int
    exit: int
    open_start: bool = False
    open_end: bool = False

    @property
    def length(self) -> float:
        return math.inf if (self.open_start or self.open_end) else float(self.exit - self.entry)


@dataclass(frozen=True, eq=False)
class GeodesicRecord:
    """A finite geodesic window with its tracking and norm data.

    Vertex ``k`` sits at record time ``k - origin``; ``ell[k]`` is the
    log-scale of the fiber norm there.  Records are immutable: flowing,
    inverting and translating return new records.
    """

    space: object
    vertices: tuple
    matrices: np.ndarray
    crossings: tuple[Crossing, ...]
    xi: Flag
    eta: Flag
    form: LinearForm
    rate: float
    ell: np.ndarray
    coords: np.ndarray
    steps: np.ndarray
    tails: tuple[np.ndarray, np.ndarray]
    origin: float = 0.0
    xi_spread: float = 0.0
    eta_spread: float = 0.0
    translation: np.ndarray | None = None
    cusp_ends: tuple[bool, bool] = (False, False)

    # -- basic data
    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def t_min(self) -> float:
        return -self.origin

    @property
    def t_max(self) -> float:
        return self.length - self.origin

    @property
    def degenerate(self) -> bool:
        return any(c.open_start or c.open_end for c in self.crossings)

    @property
    def pair(self) -> FlagPair:
        return FlagPair(self.xi, self.eta)

    def covers(self, t: float) -> bool:
        return self.t_min - 1e-9 <= t <= self.t_max + 1e-9

    # -- derived records
    def shifted(self, s: float) -> "GeodesicRecord":
        """phi_s of the record (same window, origin moved forward by s)."""
        return replace(self, origin=self.origin + s)

    def inverted(self) -> "GeodesicRecord":
        n = len(self.vertices)
        verts = tuple(reversed(self.vertices))
        mats = self.matrices[::-1].copy()
        steps = inverse_matrices(self.steps[::-1])
        cross = tuple(
            Crossing(c.region, n - 1 - c.exit, n - 1 - c.entry, c.open_end, c.open_start)
            for c in reversed(self.crossings)
        )
        coords = busemann_track(mats, steps, self.eta, self.tails[1])
        ell = compute_logscale(coords, cross, self.form, self.rate)
        return replace(
            self, vertices=verts, matrices=mats, steps=steps, tails=self.tails[::-1],
            crossings=cross, xi=self.eta, eta=self.xi, coords=coords, ell=ell,
            origin=n - 1 - self.origin, xi_spread=self.eta_spread,
            eta_spread=self.xi_spread, cusp_ends=self.cusp_ends[::-1],
        )

    def translated(self, gamma) -> "GeodesicRecord":
        """gamma sigma; vertex handles are kept (distances are Gamma-invariant).

        Steps between consecutive tracked elements and the tail directions
        g_k^-1 xi are unchanged by the translation, so only the starting
        Busemann value is recomputed from the moved data.
        """
        g = _mats(gamma)
        mats = np.einsum("dij,ndjk->ndik", g, self.matrices)
        xi, eta = self.xi.moved(g), self.eta.moved(g)
        coords = busemann_track(mats, self.steps, xi, self.tails[0])
        ell = compute_logscale(coords, self.crossings, self.form, self.rate)
        tr = g if self.translation is None else np.einsum("dij,djk->dik", g, self.translation)
        return replace(self, matrices=mats, xi=xi, eta=eta, coords=coords, ell=ell, translation=tr)

    def with_form(self, form: LinearForm, rate: float | None = None) -> "GeodesicRecord":
        rate = self.rate if rate is None else rate
        return replace(self, form=form, rate=rate,
                       ell=compute_logscale(self.coords, self.crossings, form, rate))

    # -- evaluation
    def logscale(self, t: float | np.ndarray) -> np.ndarray | float:
        t = np.asarray(t, dtype=float)
        p = self.origin + t
        if np.any(p < -1e-9) or np.any(p > self.length + 1e-9):
            raise ValueError(f"time outside window [{self.t_min}, {self.t_max}]")
        out = np.interp(p, np.arange(len(self.ell), dtype=float), self.ell)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        verts = [
            word_to_str(v) if isinstance(v, tuple) else int(v) for v in self.vertices
        ]
        return {
            "vertices": verts,
            "origin": self.origin,
            "crossings": [
                {"region": c.region, "entry": c.entry, "exit": c.exit,
                 "open_start": c.open_start, "open_end": c.open_end}
                for c in self.crossings
            ],
            "ell": [float(x) for x in self.ell],
            "xi": self.xi.to_list(),
            "eta": self.eta.to_list(),
            "xi_spread": self.xi_spread,
            "eta_spread": self.eta_spread,
            "form": list(self.form.c),
            "rate": self.rate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _unit_rows(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.linalg.norm(w, axis=-1)
    return w / n[..., None], n


def busemann_track(mats: np.ndarray, steps: np.ndarray, xi: Flag, tail: np.ndarray) -> np.ndarray:
    """beta_xi(e, g_k) for a tracked sequence g_k = g_{k-1} steps[k-1], shape (N, d).

    Evaluating -log|g_k^-1 v_xi| directly cancels catastrophically once g_k
    is large.  Instead the directions u_k ~ g_k^-1 v_xi are propagated back
    from ``tail`` (u_N-1) with the contracting maps u -> step u, and only
    the first value is computed directly.
    """
    n = len(mats)
    d = xi.d
    logn = np.zeros((n, d))
    u = np.asarray(tail, dtype=float).reshape(d, 2)
    for k in range(n - 1, 0, -1):
        u, nk = _unit_rows(np.einsum("dij,dj->di", steps[k - 1], u))
        logn[k] = np.log(nk)
    first = busemann_batch(xi.v[None], mats[:1])[0]
    return first + np.cumsum(logn, axis=0)


def tail_direction(mats: np.ndarray, xi: Flag, singular: bool) -> np.ndarray:
    """Direction of g_last^-1 v_xi; the right singular vector when xi is g_last's own flag."""
    last = mats[-1]
    if singular:
        return top_left_singular_vectors(np.swapaxes(last, -1, -2))
    return _unit_rows(np.einsum("dij,dj->di", inverse_matrices(last), xi.v))[0]


def compute_logscale(coords: np.ndarray, cross: Sequence[Crossing], form: LinearForm,
                     rate: float) -> np.ndarray:
    """Per-vertex log-scale of the fiber norm from thick Busemann anchors."""
    n = len(coords)
    ell = np.asarray(form(coords), dtype=float).copy()
    for c in cross:
        if c.open_start and c.open_end:
            raise DegenerateCrossing("window lies inside a single horoball")
        if c.open_end:
            k = np.arange(c.entry + 1, n)
            ell[k] = ell[c.entry] + rate * (k - c.entry)
        elif c.open_start:
            k = np.arange(0, c.exit)
            ell[k] = ell[c.exit] - rate * (c.exit - k)
        else:
            T = float(c.exit - c.entry)
            k = np.arange(c.entry + 1, c.exit)
            ell[k] = crossing_logscale(k - c.entry, T, ell[c.entry], ell[c.exit], rate)
    return ell


def crossing_logscale(tau, T: float, ell_in: float, ell_out: float, rate: float) -> np.ndarray:
    """Log-scale at depth-time tau of a crossing of length T."""
    tau = np.asarray(tau, dtype=float)
    inward = ell_in + rate * tau
    outward = ell_out - rate * (T - tau)
    a, b = ell_in + rate * T / 3.0, ell_out - rate * T / 3.0
    w = 3.0 * tau / T
    middle = (2.0 - w) * a + (w - 1.0) * b
    return np.where(tau <= T / 3.0, inward, np.where(tau >= 2.0 * T / 3.0, outward, middle))


def _build_record(space, verts, mats, steps, cross, form, rate, origin, strict_flags,
                  xi=None, eta=None, cusp_ends=(False, False)):
    xs = es = 0.0
    fwd_sing, bwd_sing = xi is None, eta is None
    if xi is None:
        xi, xs = limit_flag(mats, strict=strict_flags)
    if eta is None:
        eta, es = limit_flag(mats[::-1], strict=strict_flags)
    if not general_position(xi, eta):
        raise DegenerateFlags("record endpoint flags are not in general position")
    tails = (tail_direction(mats, xi, fwd_sing), tail_direction(mats[::-1], eta, bwd_sing))
    coords = busemann_track(mats, steps, xi, tails[0])
    ell = compute_logscale(coords, cross, form, rate)
    return GeodesicRecord(space, tuple(verts), mats, tuple(cross), xi, eta, form, float(rate),
                          ell, coords, steps, tails, float(origin), xs, es, None, cusp_ends)


def record_from_path(G: CuspGraph, vertices: Sequence[int], form: LinearForm, rate: float,
                     origin: float = 0.0, strict_flags: bool = False) -> GeodesicRecord:
    """Record of a cusp-graph geodesic window.

    Endpoint flags come from the tracked base elements at the two ends, or
    from the parabolic fixed flag when an end runs straight into a cusp.
    """
    ids = np.asarray(vertices, dtype=np.int64)
    mats = G.base_matrices(ids)
    steps = np.einsum("ndij,ndjk->ndik", inverse_matrices(mats[:-1]), mats[1:])
    if G.preset.integral:
        steps = np.rint(steps)
    cross = [Crossing(*c) for c in crossings(G, ids)]
    fwd_cusp, bwd_cusp = _ends_in_cusp(G, ids), _ends_in_cusp(G, ids[::-1])
    xi = parabolic_flag(G, int(ids[-1])) if fwd_cusp else None
    eta = parabolic_flag(G, int(ids[0])) if bwd_cusp else None
    return _build_record(G, [int(v) for v in ids], mats, steps, cross, form, rate, origin, strict_flags,
                         xi, eta, (bwd_cusp, fwd_cusp))


def record_from_word(tree: FreeTree, word: Sequence[int], form: LinearForm, origin: float = 0.0,
                     start: Sequence[int] = (), strict_flags: bool = False) -> GeodesicRecord:
    """Record along the tree geodesic start, start.w1, start.w1w2, ...

    ``word`` must be reduced; ``start`` is any word (it is reduced here).
    Passing ``start = Y^-1`` and ``word = Y + F`` gives a window through e at
    index len(Y) whose backward end is resolved by the far vertex Y^-1.
    """
    preset = tree.preset
    word = tuple(word)
    if preset.rewrite(word) != word:
        raise ValueError("word is not reduced")
    start = preset.rewrite(tuple(start))
    verts = [preset.rewrite(start + word[:k]) for k in range(len(word) + 1)]
    # each vertex matrix comes from its own reduced word: multiplying on from
    # start^-1 would cancel catastrophically where the window passes near e
    mats = [preset.word_matrices(v) for v in verts]
    steps = [preset.letter_matrix(x) for x in word]
    steps = np.stack(steps) if steps else np.zeros((0,) + mats[0].shape)
    return _build_record(tree, verts, np.stack(mats), steps, [], form, 0.0, origin, strict_flags)


def random_reduced_word(preset, length: int, rng: np.random.Generator, first_avoid: int | None = None,
                        prefix: Sequence[int] = ()) -> tuple[int, ...]:
    """Uniform random reduced continuation of ``prefix`` in a free preset."""
    word = list(prefix)
    letters = list(preset.letters)
    while len(word) < len(prefix) + length:
        options = [x for x in letters if not word or x != preset.inverse_letter(word[-1])]
        if first_avoid is not None and len(word) == len(prefix):
            options = [x for x in options if x != first_avoid]
        word.append(int(rng.choice(options)))
    return tuple(word)


# ---------------------------------------------------------------------------
# norms, contraction and reparameterization


def norm_logscale(sigma: GeodesicRecord, t: float) -> float:
    return float(sigma.logscale(t))


def kappa(sigma: GeodesicRecord, t: float | np.ndarray):
    """kappa_t(sigma) = exp(ell(0) - ell(t))."""
    return np.exp(sigma.logscale(0.0) - sigma.logscale(t))


def log_kappa(sigma: GeodesicRecord, t: float | np.ndarray):
    return sigma.logscale(0.0) - sigma.logscale(t)


def reparam_cocycle(sigma: GeodesicRecord, s: float | np.ndarray):
    """t(sigma, s) = -log kappa_s(sigma)."""
    return sigma.logscale(s) - sigma.logscale(0.0)


def reparam_map(sigma: GeodesicRecord) -> FlowPoint:
    return FlowPoint(sigma.pair, float(sigma.logscale(0.0)), sigma.form)


def inversion_defect(sigma: GeodesicRecord) -> float:
    """ell_sigma(0) - ell_{I sigma}(0); zero would mean exact inversion symmetry."""
    return float(sigma.logscale(0.0) - sigma.inverted().logscale(0.0))


def dplus_flowspace(w1: FlowPoint, w2: FlowPoint, representatives, horizon: float) -> float:
    """Largest Hamenstadt surrogate over caller-supplied representative pairs."""
    reps = list(representatives)
    if not reps:
        raise NoRepresentative("at least one representative pair is required")
    if w1 == w2 and all(a is b for a, b in reps):
        return 0.0
    return max(hamenstadt_dplus(a, b, horizon) for a, b in reps)


def flow_time_for_shift(sigma: GeodesicRecord, target: float, lo: float | None = None,
                        hi: float | None = None) -> float:
    """Geodesic time u with ell_sigma(u) = target (ell is monotone on trees)."""
    lo = sigma.t_min if lo is None else lo
    hi = sigma.t_max if hi is None else hi
    flo, fhi = sigma.logscale(lo) - target, sigma.logscale(hi) - target
    if flo * fhi > 0:
        raise ValueError("target log-scale outside the window")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = sigma.logscale(mid) - target
        if (fm > 0) == (fhi > 0):
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)
