"""Experiment drivers shared by the CLI, the acceptance suite and the demos.

Each driver returns an :class:`Outcome` carrying a verdict, headline
metrics and CSV-ready rows.  Heavy objects (graphs, orbit tables, Patterson
measures) are cached per parameter tuple so repeated calls are cheap.
"""

from __future__ import annotations

import bisect
import math
import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .coarse import FreeTree, estimate_delta, hamenstadt_dplus
from .cusp import CuspGraph, gm_distance, gm_geodesic
from .flow import (
    flow_time_for_shift,
    log_kappa,
    random_reduced_word,
    record_from_path,
    record_from_word,
    reparam_cocycle,
    reparam_map,
    translate_flow,
    unstable_leaf_point,
)
from .groups import GroupPreset, get_preset
from .lie import LinearForm, cartan_array
from .measures import (
    Bump,
    OrbitTable,
    bms_sample,
    correlation,
    critical_exponent,
    entropy_drop_check,
    fit_slope,
    fold_modular,
    parabolic_tail_integral,
    patterson_measure,
    shadow_ratio,
    thin_mass_series,
    transport_tangent,
)

ALPHA = LinearForm((1.0,))
RECORD_RADIUS_CAP = 24


@dataclass
class Outcome:
    name: str
    passed: bool
    metrics: dict
    header: tuple = ()
    rows: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        keys = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {keys}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def preset(name: str) -> GroupPreset:
    p = get_preset(name)
    if p.radius_cap < RECORD_RADIUS_CAP:
        p.radius_cap = RECORD_RADIUS_CAP
    return p


@lru_cache(maxsize=8)
def cached_graph(name: str, word_radius: int, max_depth: int) -> CuspGraph:
    return CuspGraph(preset(name), word_radius, max_depth, vertex_cap=20_000_000)


# ---------------------------------------------------------------------------
# 1. soundness of the truncated cusp graph against a naive oracle


def _horoball_over_z(radius: int, depth: int):
    """Neighbour function of the combinatorial horoball over [-radius, radius], from its definition."""
    def neighbours(v, unvisited):
        n, k = v
        out = []
        if k > 1:
            out.append((n, k - 1))
        if k < depth:
            out.append((n, k + 1))
        reach = 2 ** (k - 1)
        row = unvisited[k]
        lo = bisect.bisect_left(row, n - reach)
        hi = bisect.bisect_right(row, n + reach)
        out.extend((m, k) for m in row[lo:hi] if m != n)
        return out
    return neighbours


def naive_horoball_distance(radius: int, depth: int, source, target) -> int:
    """Plain breadth-first search on (n, depth) pairs.

    Each level keeps a sorted list of unvisited positions so that the wide
    horizontal edges deep in the horoball are scanned only once.
    """
    neighbours = _horoball_over_z(radius, depth)
    unvisited = {k: list(range(-radius, radius + 1)) for k in range(1, depth + 1)}
    dist = {source: 0}
    unvisited[source[1]].remove(source[0])
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if v == target:
            return dist[v]
        for w in neighbours(v, unvisited):
            if w in dist:
                continue
            dist[w] = dist[v] + 1
            row = unvisited[w[1]]
            row.pop(bisect.bisect_left(row, w[0]))
            queue.append(w)
    raise ValueError("target unreachable")


def soundness(word_radius: int = 256, max_depth: int = 8, pairs: int = 200, seed: int = 0) -> Outcome:
    t0 = time.perf_counter()
    G = CuspGraph(preset("cyclic-parabolic"), word_radius, max_depth)
    rng = np.random.default_rng(seed)
    ids = rng.integers(0, G.n_vertices, size=(pairs, 2))
    ours = [gm_distance(G, int(a), int(b)) for a, b in ids]
    elapsed = time.perf_counter() - t0

    def coords(i):
        word = G.ball.word(int(G.base[i]))
        return (int(np.sign(word).sum()) if word else 0, int(G.depth[i]))

    rows, bad = [], 0
    for (a, b), d in zip(ids, ours):
        ref = naive_horoball_distance(word_radius, max_depth, coords(a), coords(b))
        bad += ref != d
        rows.append((*coords(a), *coords(b), d, ref))
    return Outcome("cusp-graph soundness", bad == 0 and elapsed < 10.0,
                   {"pairs": pairs, "mismatches": bad},
                   ("n1", "depth1", "n2", "depth2", "gm_distance", "oracle"), rows, elapsed)


# ---------------------------------------------------------------------------
# 2. distance comparison


@dataclass(frozen=True)
class DistanceFit:
    c: float
    c_prime: float
    C: float
    a: float
    a_prime: float
    n: int
    rows: tuple


@lru_cache(maxsize=16)
def distance_fit(name: str = "psl2z", word_radius: int = 10, max_depth: int = 8,
                 form: LinearForm = ALPHA, shell: float = 0.75) -> DistanceFit:
    """Linear envelopes of psi(mu(gamma)) against d_GM(e, gamma) over the Cayley ball.

    The identity pins both envelopes to the origin, so c and c' are
    least-squares slopes through 0 of the per-distance minima and maxima;
    C is the largest excursion of any element past either line.  a and a'
    are the liminf and 3 limsup of psi / d_GM, estimated on the shell
    d >= shell * max d.
    """
    G = cached_graph(name, word_radius, max_depth)
    ids = np.arange(G.n_cayley)
    d = G.bfs(G.vertex_id(0))[ids].astype(float)
    psi = np.asarray(form(cartan_array(G.base_matrices(ids))), dtype=float)
    levels = np.unique(d[d > 0])
    lo = np.array([psi[d == k].min() for k in levels])
    hi = np.array([psi[d == k].max() for k in levels])
    c = float((levels * lo).sum() / (levels * levels).sum())
    cp = float((levels * hi).sum() / (levels * levels).sum())
    C = float(max(np.max(c * d - psi), np.max(psi - cp * d), 0.0))
    outer = d >= shell * d.max()
    ratio = psi[outer] / d[outer]
    rows = tuple((int(k), float(a), float(b)) for k, a, b in zip(levels, lo, hi))
    return DistanceFit(c, cp, C, float(ratio.min()), 3.0 * float(ratio.max()), len(ids), rows)


def distance_comparison(radii=(10, 12), name: str = "psl2z", max_depth: int = 8) -> Outcome:
    t0 = time.perf_counter()
    fits = [distance_fit(name, r, max_depth) for r in radii]
    elapsed = time.perf_counter() - t0
    f0, f1 = fits[0], fits[-1]
    change = abs(f1.C - f0.C) / f0.C
    ok = all(f.c > 0 and f.c_prime > 0 and math.isfinite(f.C) for f in fits) and change < 0.15
    rows = [(r, f.c, f.c_prime, f.C, f.a, f.a_prime, f.n) for r, f in zip(radii, fits)]
    return Outcome("distance comparison", bool(ok and elapsed < 120.0),
                   {"c": f0.c, "c_prime": f0.c_prime, "C": f0.C, "C_next": f1.C,
                    "relative_change": change},
                   ("word_radius", "c", "c_prime", "C", "a", "a_prime", "elements"), rows, elapsed)


def rate_constant() -> float:
    """Slope c used inside horoball crossings (the lower envelope slope)."""
    return distance_fit("psl2z", 10, 8).c


# ---------------------------------------------------------------------------
# geodesic records on the psl2z cusp graph


RECORD_GRAPH = ("psl2z", 24, 6)


def parabolic_runs(G: CuspGraph) -> np.ndarray:
    """Longest run of a single peripheral letter in each Cayley vertex's word."""
    letters = {x for per in G.preset.peripherals for g in per.generators for x in (g, -g)}
    out = np.zeros(G.n_cayley, dtype=np.int64)
    for i in range(G.n_cayley):
        best = run = 0
        prev = None
        for x in G.ball.word(i):
            run = run + 1 if (x == prev and x in letters) else int(x in letters)
            best = max(best, run)
            prev = x
        out[i] = best
    return out


@lru_cache(maxsize=None)
def _cusp_targets(graph, min_run: int) -> np.ndarray:
    return parabolic_runs(cached_graph(*graph)) >= min_run


def sample_graph_records(n: int, seed: int = 0, min_length: int = 40, per_source: int = 10,
                         form: LinearForm = ALPHA, graph=RECORD_GRAPH, cusp_fraction: float = 0.5,
                         min_run: int = 12):
    """Records of geodesics x -> y between Cayley vertices with d(x, y) >= min_length.

    Far ends y are drawn from the outer part of the ball and each serves
    ``per_source`` distinct starts x, so one breadth-first search from y is
    reused while every record begins at its own vertex.  A ``cusp_fraction``
    of the starts carry a parabolic run of at least ``min_run`` letters, so
    that their geodesics cross horoballs; uniform starts almost never do.
    """
    G = cached_graph(*graph)
    rate = rate_constant()
    rng = np.random.default_rng(seed)
    de = G.bfs(G.vertex_id(0))[: G.n_cayley]
    outer = np.nonzero(de >= de.max() - 1)[0]
    deep = _cusp_targets(graph, min_run) if cusp_fraction > 0 else np.zeros(G.n_cayley, bool)
    n_deep = int(math.floor(per_source * cusp_fraction + 0.5))
    records, used = [], set()
    for y in rng.permutation(outer):
        if len(records) >= n:
            break
        dy = G.bfs(int(y))[: G.n_cayley]
        far = dy >= min_length
        pool_deep = np.nonzero(far & deep)[0]
        pool_any = np.nonzero(far & ~deep)[0]
        picks = list(rng.choice(pool_deep, size=min(n_deep, len(pool_deep)), replace=False))
        rest = per_source - len(picks)
        picks += list(rng.choice(pool_any, size=min(rest, len(pool_any)), replace=False))
        for x in picks:
            if int(x) in used or len(records) >= n:
                continue
            used.add(int(x))
            path = gm_geodesic(G, int(x), int(y)).vertices
            records.append(record_from_path(G, path, form, rate))
    if len(records) < n:
        raise ValueError(f"only {len(records)} records available")
    return records


# ---------------------------------------------------------------------------
# 3. kappa cocycle


def kappa_cocycle(records=None, triples: int = 1000, seed: int = 1, form: LinearForm = ALPHA) -> Outcome:
    t0 = time.perf_counter()
    records = sample_graph_records(50, seed=seed, form=form) if records is None else records
    rng = np.random.default_rng(seed)
    worst, zero_ok, rows = 0.0, True, []
    for _ in range(triples):
        sig = records[rng.integers(len(records))]
        t = rng.uniform(0, sig.t_max)
        s = rng.uniform(-t, sig.t_max - t)
        lhs = log_kappa(sig, t + s)
        rhs = log_kappa(sig.shifted(t), s) + log_kappa(sig, t)
        # relative error of kappa itself is |exp(lhs - rhs) - 1|
        err = abs(math.expm1(lhs - rhs))
        worst = max(worst, err)
        zero_ok &= math.exp(log_kappa(sig, 0.0)) == 1.0
        rows.append((t, s, math.exp(lhs), math.exp(rhs), err))
    elapsed = time.perf_counter() - t0
    return Outcome("kappa cocycle", worst < 1e-9 and zero_ok,
                   {"triples": triples, "max_relative_error": worst, "kappa_zero_exact": zero_ok},
                   ("t", "s", "kappa_t_plus_s", "product", "relative_error"), rows, elapsed)


# ---------------------------------------------------------------------------
# 4. contraction envelope


def envelope_constant(records, a: float, a_prime: float, t_max: float = 40.0, step: float = 0.5
                      ) -> tuple[float, list]:
    """Smallest b with -a' t - log b <= log kappa_t <= -a t + log b on a time grid."""
    worst, rows = 0.0, []
    grid = np.arange(0.0, t_max + 1e-9, step)
    for k, sig in enumerate(records):
        if sig.degenerate:
            continue
        lk = log_kappa(sig, grid[grid <= sig.t_max])
        tt = grid[: len(lk)]
        excess = np.maximum(lk + a * tt, -a_prime * tt - lk)
        worst = max(worst, float(excess.max()))
        rows.append((k, float(lk[-1]), float(excess.max())))
    return math.exp(max(worst, 0.0)), rows


def contraction_envelope(n: int = 200, seed: int = 0, t_max: float = 40.0, form: LinearForm = ALPHA) -> Outcome:
    t0 = time.perf_counter()
    fit = distance_fit(*RECORD_GRAPH, form=form)
    recs = sample_graph_records(2 * n, seed=seed, min_length=int(math.ceil(t_max)), form=form)
    b1, _ = envelope_constant(recs[:n], fit.a, fit.a_prime, t_max)
    b2, rows = envelope_constant(recs, fit.a, fit.a_prime, t_max)
    change = abs(b2 - b1) / b1
    elapsed = time.perf_counter() - t0
    return Outcome("contraction envelope", change < 0.10,
                   {"records": n, "a": fit.a, "a_prime": fit.a_prime, "b": b1, "b_doubled": b2,
                    "relative_change": change},
                   ("record", "log_kappa_at_end", "max_excess"), rows, elapsed)


# ---------------------------------------------------------------------------
# 5. reparameterization


def reparameterization(n: int = 200, samples: int = 2000, seed: int = 2, s_max: float = 40.0,
                       form: LinearForm = ALPHA) -> Outcome:
    t0 = time.perf_counter()
    fit = distance_fit(*RECORD_GRAPH, form=form)
    recs = sample_graph_records(n, seed=seed, min_length=int(math.ceil(s_max)), form=form)
    rng = np.random.default_rng(seed)
    inter, anti, B, rows = 0.0, 0.0, 0.0, []
    for _ in range(samples):
        sig = recs[rng.integers(len(recs))]
        s = float(rng.uniform(-s_max, s_max))
        if s < 0:
            sig = sig.shifted(sig.t_max)
        lhs = reparam_map(sig.shifted(s))
        rhs = translate_flow(reparam_cocycle(sig, s), reparam_map(sig))
        if not (lhs.pair == rhs.pair):
            inter = math.inf
        scale = max(abs(lhs.s), abs(rhs.s), abs(reparam_map(sig).s), 1.0)
        inter = max(inter, abs(lhs.s - rhs.s) / math.ulp(scale))
        a1 = reparam_cocycle(sig, s)
        a2 = reparam_cocycle(sig.shifted(s), -s)
        anti = max(anti, abs(a1 + a2))
        speed = abs(a1)
        B = max(B, fit.a * abs(s) - speed, speed - fit.a_prime * abs(s))
        rows.append((s, a1, a2, lhs.s, rhs.s))
    elapsed = time.perf_counter() - t0
    ok = inter <= 4 and anti < 1e-9 and math.isfinite(B)
    return Outcome("reparameterization", ok,
                   {"intertwining_ulps": inter, "antisymmetry": anti, "B": max(B, 0.0),
                    "a": fit.a, "a_prime": fit.a_prime},
                   ("s", "t_sigma_s", "t_shifted_minus_s", "psi_of_flowed", "flowed_psi"), rows, elapsed)


# ---------------------------------------------------------------------------
# 6. peripheral exponent and entropy drop


def peripheral_exponent(t_max: float = 20.0, name: str = "psl2z", form: LinearForm = ALPHA) -> Outcome:
    t0 = time.perf_counter()
    tab = OrbitTable.peripheral_powers(preset(name), t_max=t_max)
    est = critical_exponent(tab, form, t_max)
    drop = entropy_drop_check(tab, form, 1.0, t_max)
    elapsed = time.perf_counter() - t0
    ok = abs(est.delta - 0.5) <= 0.05 and drop.passed and elapsed < 30.0
    grid = np.linspace(0.0, t_max, 81)
    rows = list(zip(grid.tolist(), tab.counting_curve(form, grid).tolist()))
    return Outcome("peripheral exponent", ok,
                   {"delta": est.delta, "stderr": est.stderr, "elements": len(tab),
                    "entropy_drop": drop.passed},
                   ("T", "N(T)"), rows, elapsed)


# ---------------------------------------------------------------------------
# 7. shadow lemma


SHADOW_T = 12.0


@lru_cache(maxsize=2)
def modular_table(t_max: float = SHADOW_T) -> OrbitTable:
    return OrbitTable.sl2z_by_norm(t_max)


@lru_cache(maxsize=4)
def modular_patterson(t_max: float = SHADOW_T, atoms: str = "attracting", shell: float | None = None,
                      s_offset: float = 0.02):
    """Finite Patterson measure of PSL(2, Z) at s = fitted exponent + s_offset."""
    tab = modular_table(t_max)
    est = critical_exponent(tab, ALPHA)
    s = est.delta + s_offset
    return patterson_measure(tab, ALPHA, s, t_max, atoms=atoms, shell=shell), s


def shadow_band(n: int, seed: int, R: float = 2.0, psi_max: float = 6.0, t_max: float = SHADOW_T,
                s_offset: float = 0.02) -> tuple[float, list]:
    tab = modular_table(t_max)
    nu, s = modular_patterson(t_max, s_offset=s_offset)
    psi = tab.psi(ALPHA)
    cand = np.nonzero((psi > 0.5) & (psi <= psi_max))[0]
    idx = np.random.default_rng(seed).choice(cand, n, replace=False)
    rows = []
    for i in idx:
        r, empty = shadow_ratio(nu, tab.matrices[i], R, ALPHA, s)
        rows.append((int(i), float(psi[i]), r, empty))
    ratios = np.array([r[2] for r in rows])
    c0 = math.inf if ratios.min() <= 0 else float(max(ratios.max(), 1.0 / ratios.min()))
    return c0, rows


def shadow_lemma(n: int = 100, seed: int = 1, R: float = 2.0, t_max: float = SHADOW_T,
                 s_offset: float = 0.02) -> Outcome:
    t0 = time.perf_counter()
    c1, _ = shadow_band(n, seed, R, t_max=t_max, s_offset=s_offset)
    c2, rows = shadow_band(2 * n, seed, R, t_max=t_max, s_offset=s_offset)
    change = abs(c2 - c1) / c1
    elapsed = time.perf_counter() - t0
    return Outcome("shadow lemma", c1 < 50 and change < 0.20,
                   {"samples": n, "radius": R, "c0": c1, "c0_doubled": c2, "relative_change": change},
                   ("table_index", "psi", "ratio", "empty"), rows, elapsed)


# ---------------------------------------------------------------------------
# 8. thin-part finiteness


def thin_mass(level: float = 15.0, t_max: float = 20.0, form: LinearForm = ALPHA) -> Outcome:
    t0 = time.perf_counter()
    C = distance_fit("psl2z", 10, 8, form=form).C
    tab = OrbitTable.peripheral_powers(preset("psl2z"), t_max=t_max / form.c[0])
    series = thin_mass_series(tab, form, C)
    inc = series.max_increment_beyond(level)
    tail = series.tail_beyond(level)
    power = np.abs(tab.extra["power"])
    n_lo = int(power[tab.psi(form) <= level].max()) + 1
    closed = parabolic_tail_integral(C, n_lo, int(power.max()))
    ratio = tail / closed
    cauchy = series.value_at(t_max) - series.value_at(t_max / 2)
    elapsed = time.perf_counter() - t0
    rows = series.rows()[:: max(1, len(series.psi) // 2000)]
    return Outcome("thin-part finiteness", inc < 1e-4 and 0.5 <= ratio <= 2.0,
                   {"C": C, "max_increment_beyond": inc, "tail": tail, "closed_form": closed,
                    "ratio": ratio, "late_growth": cauchy},
                   ("psi", "increment", "partial_sum"), rows, elapsed)


# ---------------------------------------------------------------------------
# 9. expansion of the unstable semimetric on the Schottky tree


def leaf_pair(tree: FreeTree, rng, back: int = 14, fwd: int = 44, branch_max: int = 6):
    """Two tree records through e sharing their backward ray and the first k forward letters."""
    P = tree.preset
    Y = random_reduced_word(P, back, rng)
    k = int(rng.integers(0, branch_max + 1))
    common = random_reduced_word(P, k, rng, prefix=Y)
    F1 = random_reduced_word(P, fwd - k, rng, prefix=common)
    F2 = random_reduced_word(P, fwd - k, rng, first_avoid=F1[len(common)], prefix=common)
    start = tuple(P.inverse_letter(x) for x in reversed(Y))
    s1 = record_from_word(tree, F1, ALPHA, origin=back, start=start)
    s2 = record_from_word(tree, F2, ALPHA, origin=back, start=start)
    return s1, s2, k


def expansion_profile(s1, s2, times, horizon: float = 8.0):
    """d+ of phi_t w1, phi_t w2 with w2 on the unstable leaf of w1 = Psi(s1)."""
    w1 = reparam_map(s1)
    w2 = unstable_leaf_point(w1, s2.xi)
    out = []
    for t in times:
        u1 = flow_time_for_shift(s1, w1.s + t)
        u2 = flow_time_for_shift(s2, w2.s + t)
        out.append(hamenstadt_dplus(s1.shifted(u1), s2.shifted(u2), horizon))
    return np.array(out)


def expansion(pairs: int = 100, seed: int = 3, t_max: float = 20.0, horizon: float = 8.0) -> Outcome:
    t0 = time.perf_counter()
    tree = FreeTree(preset("schottky2"))
    times = np.arange(0.0, t_max + 1e-9, 1.0)

    def run(sd):
        rng = np.random.default_rng(sd)
        logs = []
        for _ in range(pairs):
            s1, s2, _ = leaf_pair(tree, rng)
            prof = expansion_profile(s1, s2, times, horizon)
            logs.append(np.log(prof / prof[0]))
        logs = np.array(logs)
        alpha_lo = fit_slope(times, logs.min(axis=0))[0]
        alpha_hi = fit_slope(times, logs.max(axis=0))[0]
        logb = max(float(np.max(alpha_lo * times - logs)), float(np.max(logs - alpha_hi * times)), 0.0)
        return alpha_lo, alpha_hi, logb, logs

    a1, ap1, lb1, logs = run(seed)
    a2, ap2, lb2, _ = run(seed + 1000)
    stable = abs(a2 - a1) <= 0.1 * a1 and abs(ap2 - ap1) <= 0.1 * ap1 and abs(lb2 - lb1) <= 0.25 * max(lb1, 1.0)
    elapsed = time.perf_counter() - t0
    rows = [(float(t), float(logs[:, k].min()), float(logs[:, k].max())) for k, t in enumerate(times)]
    return Outcome("expansion semimetric", a1 > 0 and ap1 > 0 and stable,
                   {"pairs": pairs, "alpha": a1, "alpha_prime": ap1, "b": math.exp(lb1),
                    "alpha_resample": a2, "alpha_prime_resample": ap2, "b_resample": math.exp(lb2)},
                   ("t", "min_log_ratio", "max_log_ratio"), rows, elapsed)


# ---------------------------------------------------------------------------
# 10. mixing probe


BUMP_PAIRS = (
    {"center": (0.2, 1.3), "direction": 0.4, "width": 0.5, "concentration": 2.0},
    {"center": (0.1, 2.0), "direction": 1.0, "width": 0.8, "concentration": 1.0},
)


def transported_bumps(center, direction, width, concentration, lag: float = 2.0):
    """(f1, f2) with f1 the bump f2 carried forward by ``lag`` and refolded."""
    z0 = complex(*center)
    z1, th1 = transport_tangent(z0, direction, lag)
    zf, thf = fold_modular(np.array([z1]), np.array([th1]))
    f2 = Bump(tuple(center), width, direction, concentration)
    f1 = Bump((float(zf[0].real), float(zf[0].imag)), width, float(thf[0]), concentration)
    return f1, f2


@lru_cache(maxsize=2)
def mixing_sample(n: int = 100_000, seed: int = 7, t_max: float = SHADOW_T, s_offset: float = 0.02):
    """BMS-weighted flow points on a compact window around the basepoint."""
    nu, _ = modular_patterson(t_max, "cartan", 2.0, s_offset)
    return bms_sample(nu, nu, n, seed, ALPHA, (-3.0, 3.0), max_gromov=4.0, centered=True, spread=True)


def mixing(n: int = 100_000, seed: int = 7, bump_pairs=BUMP_PAIRS, times=(2.0, 20.0),
           t_max: float = SHADOW_T, s_offset: float = 0.02) -> Outcome:
    t0 = time.perf_counter()
    sample = mixing_sample(n, seed, t_max, s_offset)
    rows, verdicts, metrics = [], [], {"samples": n, "effective": sample.effective_size}
    for k, cfg in enumerate(bump_pairs):
        f1, f2 = transported_bumps(**cfg)
        early, late = (correlation(sample, f1, f2, t) for t in times)
        margin = abs(early.value) - abs(late.value)
        sigma = math.hypot(early.stderr, late.stderr)
        verdicts.append(margin > 3.0 * sigma)
        metrics[f"pair{k}_early"] = early.value
        metrics[f"pair{k}_late"] = late.value
        metrics[f"pair{k}_sigmas"] = margin / sigma
        for c in (early, late):
            rows.append((k, c.t, c.value, c.stderr))
    elapsed = time.perf_counter() - t0
    return Outcome("mixing probe", all(verdicts), metrics, ("pair", "t", "correlation", "stderr"),
                   rows, elapsed)


# ---------------------------------------------------------------------------
# 11. homogeneity of the critical exponent


def homogeneity(scales=(0.5, 2.0, 3.0), radius: int = 10, name: str = "schottky2",
                form: LinearForm = ALPHA) -> Outcome:
    t0 = time.perf_counter()
    tab = OrbitTable.from_ball(preset(name), radius)
    base = critical_exponent(tab, form)
    rows, ok = [], True
    for t in scales:
        est = critical_exponent(tab, form.scaled(t))
        err = math.hypot(t * est.stderr, base.stderr)
        gap = abs(t * est.delta - base.delta)
        ok &= gap <= err
        rows.append((t, est.delta, t * est.delta, base.delta, gap, err))
    elapsed = time.perf_counter() - t0
    return Outcome("homogeneity", bool(ok),
                   {"delta": base.delta, "stderr": base.stderr,
                    "max_gap": max(r[4] for r in rows)},
                   ("scale", "delta_scaled", "scale_times_delta", "delta", "gap", "combined_stderr"),
                   rows, elapsed)


ACCEPTANCE = (
    soundness,
    distance_comparison,
    kappa_cocycle,
    contraction_envelope,
    reparameterization,
    peripheral_exponent,
    shadow_lemma,
    thin_mass,
    expansion,
    mixing,
    homogeneity,
)


def delta_of(name: str, word_radius: int, max_depth: int, samples: int, seed: int):
    if preset(name).peripherals:
        space = cached_graph(name, word_radius, max_depth)
    else:
        space = cached_graph(name, word_radius, 1)
    return estimate_delta(space, samples, seed)
