"""Truncated Groves-Manning cusp graphs.

The truncation keeps every vertex whose base group element lies in the
Cayley ball of radius ``word_radius`` and whose depth is at most
``max_depth``.  A horoball vertex is addressed by its base element g = gamma p,
its peripheral id and its depth; depth 1 is the Cayley vertex g itself.

Vertex ids are ordered by (kind, depth, peripheral, shortlex word of the
base), so "smallest id" is the deterministic tie-break for geodesics.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .groups import GroupPreset, inverse_matrices, word_to_str

DEFAULT_VERTEX_CAP = 2_000_000
MAX_DEPTH_LIMIT = 12
RIM_DEPTH = 2


class BudgetExceeded(RuntimeError):
    """The requested truncation would exceed the vertex budget."""


class VertexNotInGraph(KeyError):
    pass


@dataclass(frozen=True)
class CuspVertex:
    """Cayley vertex (peripheral None, depth 1) or horoball vertex (depth >= 2)."""

    word: tuple[int, ...]
    peripheral: str | None = None
    depth: int = 1

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.depth == 1 and self.peripheral is not None:
            object.__setattr__(self, "peripheral", None)

    @property
    def kind(self) -> str:
        return "cayley" if self.depth == 1 else "horoball"

    @classmethod
    def cayley(cls, word: Sequence[int] = ()) -> "CuspVertex":
        return cls(tuple(word))

    @classmethod
    def horoball(cls, word: Sequence[int], peripheral: str, depth: int) -> "CuspVertex":
        return cls(tuple(word), peripheral, depth)


@dataclass(frozen=True)
class Thick:
    def __bool__(self):
        return False


@dataclass(frozen=True)
class Thin:
    region: int


@dataclass(frozen=True)
class HoroballRegion:
    id: int
    peripheral: str
    representative: tuple[int, ...]
    interior: np.ndarray
    rim: np.ndarray


@dataclass(frozen=True)
class GeodesicPath:
    vertices: tuple[int, ...]
    certified: bool = True

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def __len__(self):
        return len(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]


@dataclass(frozen=True)
class EscapeTimes:
    entry: int
    exit: int
    unbounded: bool = False


@dataclass(frozen=True)
class DistanceReport:
    value: int
    possibly_truncated: bool
    trusted: bool


class CuspGraph:
    """Immutable truncated cusp graph with cached breadth-first distances."""

    def __init__(
        self,
        preset: GroupPreset,
        word_radius: int,
        max_depth: int = 8,
        vertex_cap: int = DEFAULT_VERTEX_CAP,
        cache_size: int | None = None,
    ):
        if max_depth > MAX_DEPTH_LIMIT or max_depth < 1:
            raise ValueError(f"max_depth must be in 1..{MAX_DEPTH_LIMIT}")
        self.preset = preset
        self.word_radius = int(word_radius)
        self.max_depth = int(max_depth) if preset.peripherals else 1
        ball = preset.ball(self.word_radius)
        n = ball.count(self.word_radius)
        self.ball = ball
        self.n_cayley = n
        npr = len(preset.peripherals)
        levels = max(self.max_depth - 1, 0)
        total = n * (1 + npr * levels)
        if total > vertex_cap:
            raise BudgetExceeded(f"{total} vertices exceed the cap {vertex_cap}")
        self.n_vertices = total
        self._build()
        if cache_size is None:
            cache_size = int(max(8, min(256, 4e8 // max(total * 4, 1))))
        self._cache: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_size = cache_size
        self._lock = threading.Lock()
        self._boundary_dist: np.ndarray | None = None

    # -- construction ------------------------------------------------------

    def vid(self, base: int | np.ndarray, pidx: int | np.ndarray, depth: int | np.ndarray):
        """Ids of (base ball index, peripheral index, depth); depth 1 ignores pidx."""
        base = np.asarray(base)
        depth = np.asarray(depth)
        npr = max(len(self.preset.peripherals), 1)
        horo = self.n_cayley + ((depth - 2) * npr + np.asarray(pidx)) * self.n_cayley + base
        return np.where(depth <= 1, base, horo)

    def _build(self):
        preset, n = self.preset, self.n_cayley
        mats = self.ball.matrices[:n]
        npr = len(preset.peripherals)
        D = self.max_depth
        boundary = np.zeros(self.n_vertices, dtype=bool)
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []

        def found(m):
            idx = self.ball.lookup(m)
            idx[idx >= n] = -1
            return idx

        src = np.arange(n)
        for x in preset.letters:
            nb = found(mats @ preset.letter_matrix(x))
            ok = nb >= 0
            boundary[:n] |= ~ok
            keep = ok & (src < nb)
            rows.append(src[keep])
            cols.append(nb[keep])

        self.depth = np.ones(self.n_vertices, dtype=np.int16)
        self.base = np.tile(np.arange(n), 1 + npr * max(D - 1, 0))
        self.pidx = np.full(self.n_vertices, -1, dtype=np.int16)
        self.coset = np.full(self.n_vertices, -1, dtype=np.int64)
        self._regions: list[tuple[int, int]] = []  # (peripheral index, representative ball index)
        self.horizontal_count = 0
        for j, per in enumerate(preset.peripherals):
            reach = 2 ** (D - 1) if D >= 2 else 1
            pball = preset.peripheral_ball(per, reach)
            qn = pball.count(reach)
            link_r: list[np.ndarray] = []
            link_c: list[np.ndarray] = []
            for k in range(1, qn):
                m = int(pball.lengths[k])
                nmin = max(2, 1 + int(np.ceil(np.log2(m))) if m > 1 else 2)
                nb = found(mats @ pball.matrices[k])
                ok = nb >= 0
                for depth in range(nmin, D + 1):
                    boundary[self.vid(src[~ok], j, depth)] = True
                keep = ok & (src < nb)
                a, b = src[keep], nb[keep]
                link_r.append(a)
                link_c.append(b)
                for depth in range(nmin, D + 1):
                    rows.append(self.vid(a, j, depth))
                    cols.append(self.vid(b, j, depth))
                    self.horizontal_count += len(a)
            for depth in range(2, D + 1):
                ids = self.vid(src, j, depth)
                self.depth[ids] = depth
                self.pidx[ids] = j
                rows.append(self.vid(src, j, depth - 1))
                cols.append(ids)
            if D >= 2:
                boundary[self.vid(src, j, D)] = True
            # cosets: components of the "same coset within reach" relation
            lr = np.concatenate(link_r) if link_r else np.zeros(0, dtype=int)
            lc = np.concatenate(link_c) if link_c else np.zeros(0, dtype=int)
            rel = sparse.coo_matrix((np.ones(len(lr), dtype=np.int8), (lr, lc)), shape=(n, n))
            ncomp, label = csgraph.connected_components(rel, directed=False)
            reps = np.full(ncomp, n, dtype=np.int64)
            np.minimum.at(reps, label, src)
            offset = len(self._regions)
            self._regions.extend((j, int(r)) for r in reps)
            if D >= 2:
                for depth in range(2, D + 1):
                    self.coset[self.vid(src, j, depth)] = offset + label
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        self.n_edges = len(r)
        adj = sparse.coo_matrix(
            (np.ones(2 * len(r), dtype=np.int8), (np.concatenate([r, c]), np.concatenate([c, r]))),
            shape=(self.n_vertices, self.n_vertices),
        ).tocsr()
        adj.sum_duplicates()
        adj.sort_indices()
        self.adjacency = adj
        self._indptr = adj.indptr.astype(np.int64)
        self.boundary = boundary

    # -- vertex bookkeeping -----------------------------------------------

    def vertex_id(self, v: CuspVertex | int) -> int:
        if isinstance(v, (int, np.integer)):
            if not 0 <= v < self.n_vertices:
                raise VertexNotInGraph(v)
            return int(v)
        mats = self.preset.word_matrices(v.word)
        i = int(self.ball.lookup(mats[None])[0])
        if i < 0 or i >= self.n_cayley:
            raise VertexNotInGraph(v)
        if v.depth == 1:
            return i
        if v.depth > self.max_depth:
            raise VertexNotInGraph(v)
        pids = [p.id for p in self.preset.peripherals]
        if v.peripheral not in pids:
            raise VertexNotInGraph(v)
        return int(self.vid(i, pids.index(v.peripheral), v.depth))

    def vertex(self, i: int) -> CuspVertex:
        i = self.vertex_id(int(i))
        word = self.ball.word(self.base[i])
        if self.depth[i] == 1:
            return CuspVertex(word)
        return CuspVertex(word, self.preset.peripherals[self.pidx[i]].id, int(self.depth[i]))

    def horoball_id(self, word: Sequence[int], depth: int, peripheral: int = 0) -> int:
        return self.vertex_id(CuspVertex(tuple(word), self.preset.peripherals[peripheral].id, depth)
                              if depth > 1 else CuspVertex(tuple(word)))

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]: a.indptr[i + 1]]

    def base_matrices(self, ids) -> np.ndarray:
        return self.ball.matrices[self.base[np.asarray(ids)]]

    def is_thin(self, ids) -> np.ndarray:
        return self.depth[np.asarray(ids)] > RIM_DEPTH

    def region(self, rid: int) -> HoroballRegion:
        j, rep = self._regions[rid]
        members = np.nonzero(self.coset == rid)[0]
        d = self.depth[members]
        return HoroballRegion(
            rid, self.preset.peripherals[j].id, self.ball.word(rep),
            members[d > RIM_DEPTH], members[d == RIM_DEPTH],
        )

    @property
    def n_regions(self) -> int:
        return len(self._regions)

    def coset_label(self, i: int) -> tuple[str, str]:
        """(coset representative / peripheral, point of P) for export."""
        rid = int(self.coset[i])
        j, rep = self._regions[rid]
        per = self.preset.peripherals[j]
        pm = inverse_matrices(self.ball.matrices[rep]) @ self.ball.matrices[self.base[i]]
        pball = self.preset.peripheral_ball(per, 2 ** (self.max_depth - 1))
        k = int(pball.lookup(pm[None])[0])
        point = word_to_str(pball.word(k)) if k >= 0 else "?"
        return f"{word_to_str(self.ball.word(rep))}/{per.id}", point

    # -- distances ---------------------------------------------------------

    def _frontier_bfs(self, sources: np.ndarray) -> np.ndarray:
        indptr, ind = self._indptr, self.adjacency.indices
        dist = np.full(self.n_vertices, -1, dtype=np.int32)
        dist[sources] = 0
        frontier = np.unique(sources)
        level = 0
        while frontier.size:
            level += 1
            start = indptr[frontier]
            cnt = indptr[frontier + 1] - start
            shift = np.repeat(start - (np.cumsum(cnt) - cnt), cnt)
            nb = ind[shift + np.arange(int(cnt.sum()))]
            nb = nb[dist[nb] < 0]
            if nb.size == 0:
                break
            dist[nb] = level
            frontier = np.unique(nb)
        return dist

    def bfs(self, source: int) -> np.ndarray:
        """Distances from one vertex (int32, -1 where unreachable), cached."""
        source = int(source)
        with self._lock:
            hit = self._cache.get(source)
            if hit is not None:
                self._cache.move_to_end(source)
                return hit
        out = self._frontier_bfs(np.array([source]))
        out.setflags(write=False)
        with self._lock:
            self._cache[source] = out
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return out

    def multi_source_distance(self, sources: Iterable[int]) -> np.ndarray:
        src = np.unique(np.asarray(list(sources), dtype=np.int64))
        if len(src) == 0:
            return np.full(self.n_vertices, -1, dtype=np.int32)
        return self._frontier_bfs(src)

    def boundary_distance(self) -> np.ndarray:
        if self._boundary_dist is None:
            bd = self.multi_source_distance(np.nonzero(self.boundary)[0])
            if not self.boundary.any():
                bd = np.full(self.n_vertices, np.iinfo(np.int32).max, dtype=np.int32)
            self._boundary_dist = bd
        return self._boundary_dist

    def distance(self, x, y) -> int:
        return gm_distance(self, x, y)

    def report(self, x, y, delta: float = 0.0) -> DistanceReport:
        x, y = self.vertex_id(x), self.vertex_id(y)
        dx, dy = self.bfs(x), self.bfs(y)
        d = int(dx[y])
        on_geo = (dx + dy == d) & (dx >= 0) & (dy >= 0)
        touched = bool(np.any(on_geo & self.boundary))
        bd = self.boundary_distance()
        trusted = min(bd[x], bd[y]) > d / 2 + 2 * delta
        return DistanceReport(d, touched, bool(trusted))

    def trusted(self, x, y, d: int, delta: float) -> bool:
        bd = self.boundary_distance()
        return bool(min(bd[self.vertex_id(x)], bd[self.vertex_id(y)]) > d / 2 + 2 * delta)

    # -- export ------------------------------------------------------------

    def _label(self, i: int) -> str:
        if self.depth[i] == 1:
            return f"C - {word_to_str(self.ball.word(self.base[i]))} 1"
        coset, point = self.coset_label(i)
        return f"H {coset} {point} {int(self.depth[i])}"

    def export_edges(self, path=None) -> list[str]:
        coo = sparse.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{self._label(a)} — {self._label(b)}" for a, b in zip(coo.row[order], coo.col[order])]
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + ("\n" if lines else ""))
        return lines

    def summary(self) -> dict:
        return {
            "preset": self.preset.name,
            "word_radius": self.word_radius,
            "max_depth": self.max_depth,
            "cayley_vertices": self.n_cayley,
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "regions": self.n_regions,
            "boundary_vertices": int(self.boundary.sum()),
        }


def build_cusp_graph(preset: GroupPreset, word_radius: int, max_depth: int = 8,
                     vertex_cap: int = DEFAULT_VERTEX_CAP) -> CuspGraph:
    return CuspGraph(preset, word_radius, max_depth, vertex_cap)


def gm_distance(G: CuspGraph, x, y) -> int:
    x, y = G.vertex_id(x), G.vertex_id(y)
    d = int(G.bfs(x)[y])
    if d < 0:
        raise VertexNotInGraph(f"{y} unreachable from {x}")
    return d


def gm_geodesic(G: CuspGraph, x, y) -> GeodesicPath:
    """Shortest path from x to y; each step takes the smallest admissible id."""
    x, y = G.vertex_id(x), G.vertex_id(y)
    dist = G.bfs(y)
    if dist[x] < 0:
        raise VertexNotInGraph(f"{x} unreachable from {y}")
    path = [x]
    cur = x
    while cur != y:
        nb = G.neighbors(cur)
        step = nb[dist[nb] == dist[cur] - 1]
        cur = int(step[0])
        path.append(cur)
    return GeodesicPath(tuple(path), certified=len(path) - 1 == dist[x])


def classify_thick_thin(G: CuspGraph, v) -> Thick | Thin:
    i = G.vertex_id(v)
    if G.depth[i] > RIM_DEPTH:
        return Thin(int(G.coset[i]))
    return Thick()


def escape_times(G: CuspGraph, path: GeodesicPath | Sequence[int], region: HoroballRegion | int):
    """(first interior index, first index after which the path stays out)."""
    rid = region.id if isinstance(region, HoroballRegion) else int(region)
    ids = np.asarray(path.vertices if isinstance(path, GeodesicPath) else path)
    inside = (G.coset[ids] == rid) & (G.depth[ids] > RIM_DEPTH)
    if not inside.any():
        return None
    hit = np.nonzero(inside)[0]
    last = int(hit[-1])
    if last == len(ids) - 1:
        return EscapeTimes(int(hit[0]), len(ids) - 1, unbounded=True)
    return EscapeTimes(int(hit[0]), last + 1)


def crossings(G: CuspGraph, ids: Sequence[int]) -> list[tuple[int, int, int, bool, bool]]:
    """Maximal runs inside horoball interiors along a vertex sequence.

    Returns (region, entry, exit, open_start, open_end) where entry/exit are
    the rim indices just before and after the run; open flags mark runs
    touching the window ends.
    """
    ids = np.asarray(ids)
    thin = G.depth[ids] > RIM_DEPTH
    reg = np.where(thin, G.coset[ids], -1)
    out = []
    i, n = 0, len(ids)
    while i < n:
        if reg[i] < 0:
            i += 1
            continue
        j = i
        while j + 1 < n and reg[j + 1] == reg[i]:
            j += 1
        out.append((int(reg[i]), i - 1, j + 1, i == 0, j == n - 1))
        i = j + 1
    return out
