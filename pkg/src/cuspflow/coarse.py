"""Coarse geometry on cusp graphs: Gromov products, four-point estimates,
boundary rays, Busemann functions, shadows, visual and Hamenstadt-type
(semi)metrics.

Limits at infinity are replaced by tail-window stabilization: a sequence is
accepted when it is constant (within ``PLATEAU_TOL``) over the last quarter
of the available window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cusp import CuspGraph, gm_geodesic
from .groups import GroupPreset

PLATEAU_TOL = 1e-6
DPLUS_FLOOR = 1e-9


class NotStabilized(ValueError):
    def __init__(self, what: str, width: float):
        super().__init__(f"{what} did not stabilize (oscillation width {width:.3g})")
        self.width = width


class WindowTooShort(ValueError):
    pass


# ---------------------------------------------------------------------------
# metric spaces that tracks live in


class FreeTree:
    """Cayley tree of a free preset; vertices are reduced words.

    Distances are exact for arbitrarily long words, which makes this the
    space of choice for long-horizon experiments without cusps.
    """

    def __init__(self, preset: GroupPreset):
        if not preset.is_free or preset.peripherals:
            raise ValueError("FreeTree needs a free preset without peripherals")
        self.preset = preset

    @staticmethod
    def _lcp(u: tuple, v: tuple) -> int:
        n = min(len(u), len(v))
        k = 0
        while k < n and u[k] == v[k]:
            k += 1
        return k

    def distance(self, u, v) -> int:
        return len(u) + len(v) - 2 * self._lcp(u, v)

    def dist_matrix(self, a: Sequence, b: Sequence) -> np.ndarray:
        out = np.empty((len(a), len(b)), dtype=np.int64)
        for i, u in enumerate(a):
            for j, v in enumerate(b):
                out[i, j] = self.distance(u, v)
        return out

    def matrices(self, words: Sequence) -> np.ndarray:
        return np.stack([self.preset.word_matrices(w) for w in words])


def graph_dist_matrix(G: CuspGraph, a: Sequence[int], b: Sequence[int]) -> np.ndarray:
    b = np.asarray(b, dtype=np.int64)
    out = np.empty((len(a), len(b)), dtype=np.int64)
    for i, u in enumerate(a):
        out[i] = G.bfs(int(u))[b]
    return out


def dist_matrix(space, a, b) -> np.ndarray:
    if isinstance(space, CuspGraph):
        return graph_dist_matrix(space, a, b)
    return space.dist_matrix(a, b)


# ---------------------------------------------------------------------------
# Gromov products and the four-point estimate


def gromov_product(G: CuspGraph, x, p, q) -> float:
    x, p, q = G.vertex_id(x), G.vertex_id(p), G.vertex_id(q)
    dx = G.bfs(x)
    dpq = G.bfs(p)[q]
    return 0.5 * (float(dx[p]) + float(dx[q]) - float(dpq))


@dataclass(frozen=True)
class DeltaEstimate:
    delta: float
    n_samples: int
    max_defect: float
    mean_defect: float
    witness: tuple[int, int, int, int] | None = None


def four_point_defects(d: np.ndarray, quads: np.ndarray) -> np.ndarray:
    """Largest four-point defect over relabelings: (S1 - S2) / 2.

    With pair sums S1 >= S2 >= S3 of the three matchings, the best constant
    for a quadruple is (S1 - S2)/2, which equals the maximum over basepoint
    and labelling of min((x|y)_w, (y|z)_w) - (x|z)_w.
    """
    w, x, y, z = quads.T
    s = np.stack([d[w, x] + d[y, z], d[w, y] + d[x, z], d[w, z] + d[x, y]], axis=1).astype(float)
    s.sort(axis=1)
    return (s[:, 2] - s[:, 1]) / 2.0


def estimate_delta(
    G: CuspGraph,
    n_samples: int,
    seed: int,
    pool_size: int = 64,
    pool: Sequence[int] | None = None,
    core_margin: int = 0,
) -> DeltaEstimate:
    """Sampled four-point hyperbolicity constant.

    Quadruples are drawn from a pool of vertices whose pairwise distances
    come from one breadth-first search per pool vertex.  ``core_margin``
    keeps pool vertices at least that far from the truncation boundary.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    if pool is None:
        cand = np.arange(G.n_vertices)
        if core_margin > 0 and G.boundary.any():
            cand = cand[G.boundary_distance() >= core_margin]
        pool = rng.choice(cand, size=min(pool_size, len(cand)), replace=False)
    pool = np.asarray(sorted(int(v) for v in pool))
    if len(pool) < 4:
        return DeltaEstimate(0.0, 0, 0.0, 0.0)
    d = graph_dist_matrix(G, pool, pool)
    quads = np.stack([rng.choice(len(pool), size=4, replace=False) for _ in range(n_samples)])
    defects = four_point_defects(d, quads)
    k = int(np.argmax(defects))
    return DeltaEstimate(
        float(defects[k]), n_samples, float(defects[k]), float(defects.mean()),
        tuple(int(pool[i]) for i in quads[k]),
    )


# ---------------------------------------------------------------------------
# rays


@dataclass(frozen=True)
class BoundaryRay:
    graph: CuspGraph
    vertices: np.ndarray
    certified: bool = True

    @property
    def base(self) -> int:
        return int(self.vertices[0])

    def __len__(self):
        return len(self.vertices)

    def tracking_matrices(self) -> np.ndarray:
        return self.graph.base_matrices(self.vertices)

    def translate_ok(self) -> bool:
        return True


def ray_toward(G: CuspGraph, base, target) -> BoundaryRay:
    path = gm_geodesic(G, base, target)
    return BoundaryRay(G, np.asarray(path.vertices), path.certified)


def sample_rays(G: CuspGraph, base, n: int, seed: int, min_length: int | None = None,
                depth_one: bool = True) -> list[BoundaryRay]:
    """Geodesic rays from ``base`` to random far vertices of the truncation."""
    base = G.vertex_id(base)
    dist = G.bfs(base)
    if min_length is None:
        min_length = int(dist.max() * 0.75)
    far = np.nonzero(dist >= min_length)[0]
    if depth_one:
        far = far[G.depth[far] == 1] if np.any(G.depth[far] == 1) else far
    rng = np.random.default_rng(seed)
    pick = rng.choice(far, size=min(n, len(far)), replace=False)
    return [ray_toward(G, base, int(t)) for t in np.sort(pick)]


def _plateau(values: np.ndarray, what: str, tol: float = PLATEAU_TOL) -> float:
    tail = values[-max(2, len(values) // 4):]
    width = float(tail.max() - tail.min())
    if width > tol:
        raise NotStabilized(what, width)
    return float(tail[-1])


def gm_busemann(ray: BoundaryRay, p, q) -> float:
    G = ray.graph
    p, q = G.vertex_id(p), G.vertex_id(q)
    if p == q:
        return 0.0
    vals = G.bfs(p)[ray.vertices].astype(float) - G.bfs(q)[ray.vertices].astype(float)
    return _plateau(vals, "Busemann difference")


def gm_shadow_membership(G: CuspGraph, x, y, R: float, ray: BoundaryRay) -> bool:
    """True iff some vertex of the ray window lies within distance R of y."""
    if int(ray.vertices[0]) != G.vertex_id(x):
        raise ValueError("ray must be based at x")
    dy = G.bfs(G.vertex_id(y))[ray.vertices]
    return bool(np.any((dy >= 0) & (dy <= R)))


def boundary_gromov_product(ray1: BoundaryRay, ray2: BoundaryRay, x=None) -> float:
    """Stabilized (xi|eta)_x from vertex Gromov products along two rays.

    For rays based at x the products are nondecreasing in both indices, so
    the liminf is read off the far corner once the last quarter is flat.
    Returns inf when the rays agree on their whole windows.
    """
    G = ray1.graph
    x = ray1.base if x is None else G.vertex_id(x)
    a, b = ray1.vertices, ray2.vertices
    n = min(len(a), len(b))
    if np.array_equal(a[:n], b[:n]):
        return math.inf
    dx = G.bfs(x)
    dab = graph_dist_matrix(G, a[:n], b[:n])
    diag = 0.5 * (dx[a[:n]] + dx[b[:n]] - np.diagonal(dab))
    return _plateau(diag.astype(float), "boundary Gromov product")


def epsilon_max(delta: float) -> float:
    return math.log(2.0) / (4.0 * max(delta, 1.0))


def visual_distance(ray1: BoundaryRay, ray2: BoundaryRay, eps: float, basepoint=None,
                    delta: float | None = None) -> float:
    if delta is not None and eps > epsilon_max(delta) + 1e-15:
        raise ValueError(f"epsilon {eps} exceeds {epsilon_max(delta)}")
    g = boundary_gromov_product(ray1, ray2, basepoint)
    return 0.0 if math.isinf(g) else math.exp(-2.0 * eps * g)


# ---------------------------------------------------------------------------
# Hamenstadt-type semimetric on tracks


def _point(track, t: float):
    """(lower vertex index, upper vertex index, fraction) of track time t."""
    p = track.origin + t
    n = len(track.vertices)
    if p < -1e-9 or p > n - 1 + 1e-9:
        raise WindowTooShort(f"time {t} outside the window of length {n - 1}")
    p = min(max(p, 0.0), n - 1.0)
    a = int(math.floor(p + 1e-12))
    f = p - a
    if f < 1e-12 or a == n - 1:
        return a, a, 0.0
    return a, a + 1, f


def track_point_distance(track1, track2, times1, times2) -> np.ndarray:
    """Metric-graph distances between points of two tracks at real times."""
    pts1 = [_point(track1, t) for t in times1]
    pts2 = [_point(track2, t) for t in times2]
    idx1 = sorted({i for p in pts1 for i in p[:2]})
    idx2 = sorted({i for p in pts2 for i in p[:2]})
    h1 = [track1.vertices[i] for i in idx1]
    h2 = [track2.vertices[i] for i in idx2]
    D = dist_matrix(track1.space, h1, h2)
    r1 = {i: k for k, i in enumerate(idx1)}
    r2 = {i: k for k, i in enumerate(idx2)}
    out = np.empty(len(pts1))
    for k, ((a1, b1, f1), (a2, b2, f2)) in enumerate(zip(pts1, pts2)):
        ends1 = [(a1, f1), (b1, 1.0 - f1)] if b1 != a1 else [(a1, 0.0)]
        ends2 = [(a2, f2), (b2, 1.0 - f2)] if b2 != a2 else [(a2, 0.0)]
        best = min(o1 + D[r1[u], r2[v]] + o2 for u, o1 in ends1 for v, o2 in ends2)
        if b1 != a1 and b2 != a2:
            # interior points of one common edge
            e1 = (track1.vertices[a1], track1.vertices[b1])
            e2 = (track2.vertices[a2], track2.vertices[b2])
            if e1 == e2:
                best = min(best, abs(f1 - f2))
            elif e1 == e2[::-1]:
                best = min(best, abs(f1 - (1.0 - f2)))
        out[k] = best
    return out


@dataclass(frozen=True)
class DplusProfile:
    times: np.ndarray
    distances: np.ndarray
    surrogate: np.ndarray

    @property
    def value(self) -> float:
        v = float(self.surrogate.max()) if len(self.surrogate) else 0.0
        return 0.0 if v < DPLUS_FLOOR else v

    @property
    def stabilized(self) -> bool:
        """The surrogate is flat over the last quarter of the sampled times."""
        tail = self.surrogate[-max(2, len(self.surrogate) // 4):]
        return bool(np.ptp(np.log(np.maximum(tail, 1e-300))) < 1e-9)

    def rows(self):
        return list(zip(self.times.tolist(), self.distances.tolist(), self.surrogate.tolist()))


def dplus_profile(track1, track2, horizon: float) -> DplusProfile:
    lo = int(math.ceil(horizon / 2.0))
    times = np.arange(lo, int(math.floor(horizon)) + 1, dtype=float)
    if len(times) == 0:
        raise WindowTooShort("horizon too small")
    d = track_point_distance(track1, track2, times, times)
    return DplusProfile(times, d, np.exp(d - 2.0 * times))


def _same_track(t1, t2) -> bool:
    return (
        t1.space is t2.space
        and abs(t1.origin - t2.origin) < 1e-12
        and len(t1.vertices) == len(t2.vertices)
        and all(u == v for u, v in zip(t1.vertices, t2.vertices))
    )


def hamenstadt_dplus(track1, track2, horizon: float) -> float:
    """max over integer t in [T/2, T] of exp(d(s1(t), s2(t)) - 2t), floored at 1e-9."""
    if _same_track(track1, track2):
        return 0.0
    return dplus_profile(track1, track2, horizon).value


def hamenstadt_dminus(track1, track2, horizon: float) -> float:
    return hamenstadt_dplus(track1.inverted(), track2.inverted(), horizon)
