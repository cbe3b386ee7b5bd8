"""Finitely generated subgroups of SL(2, R)^d, presets, and orbit balls.

Elements are stored projectively: every factor is sign-normalized so that
its first nonzero entry is positive.  Balls are enumerated breadth first in
shortlex order, so the stored word of every element is the shortlex-least
geodesic word for the preset's generating set.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DET_TOL = 1e-9
HASH_TOL = 1e-7
DEFAULT_RADIUS_CAP = 16

_MIX = np.uint64(0x9E3779B97F4A7C15)


class GroupError(ValueError):
    """Base class for group-core failures."""


class FactorMismatch(GroupError):
    pass


class RadiusCapExceeded(GroupError):
    pass


class HashCollision(GroupError):
    pass


# ---------------------------------------------------------------------------
# matrix helpers (arrays of shape (..., d, 2, 2))


def sign_normalize(m: np.ndarray) -> np.ndarray:
    """Flip each 2x2 factor so its first clearly nonzero entry is positive."""
    m = np.array(m, dtype=float, copy=True)
    flat = m.reshape(m.shape[:-2] + (4,))
    scale = np.maximum(np.abs(flat).max(axis=-1, keepdims=True), 1.0)
    nz = np.abs(flat) > HASH_TOL * scale
    first = np.argmax(nz, axis=-1)
    lead = np.take_along_axis(flat, first[..., None], axis=-1)[..., 0]
    flip = np.where(lead < 0, -1.0, 1.0)
    return m * flip[..., None, None]


def matrix_keys(m: np.ndarray, tol: float = HASH_TOL) -> np.ndarray:
    """Integer keys of sign-normalized matrices, shape (..., d, 5).

    The quantization step is ``tol`` times a power of two bounding the
    entries, so large matrices are compared with a relative tolerance.
    """
    flat = m.reshape(m.shape[:-2] + (4,))
    mx = np.maximum(np.abs(flat).max(axis=-1), 1.0)
    expo = np.ceil(np.log2(mx))
    q = tol * np.exp2(expo)
    ent = np.rint(flat / q[..., None]).astype(np.int64)
    return np.concatenate([expo.astype(np.int64)[..., None], ent], axis=-1)


def hash_keys(keys: np.ndarray) -> np.ndarray:
    """Collapse keys of shape (N, d, 5) into one uint64 per element."""
    k = keys.reshape(keys.shape[0], -1).astype(np.uint64)
    h = np.full(k.shape[0], np.uint64(1469598103934665603))
    with np.errstate(over="ignore"):
        for j in range(k.shape[1]):
            h = (h ^ k[:, j]) * _MIX
            h ^= h >> np.uint64(29)
    return h


def same_matrices(a: np.ndarray, b: np.ndarray, tol: float = HASH_TOL) -> np.ndarray:
    """Entrywise comparison at relative tolerance; reduces over (d, 2, 2)."""
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)).max(axis=(-1, -2, -3)), 1.0)
    diff = np.abs(a - b).max(axis=(-1, -2, -3))
    return diff <= 4.0 * tol * scale


def inverse_matrices(m: np.ndarray) -> np.ndarray:
    """Inverse of unimodular 2x2 factors: [[d, -b], [-c, a]]."""
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out


# ---------------------------------------------------------------------------
# words


def word_to_str(word: Sequence[int]) -> str:
    return ".".join(str(x) for x in word) if word else "e"


def word_from_str(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text in ("", "e"):
        return ()
    return tuple(int(x) for x in text.split("."))


def invert_word(word: Sequence[int], orders: dict[int, int]) -> tuple[int, ...]:
    out = []
    for x in reversed(word):
        out.append(x if orders.get(abs(x)) == 2 else -x)
    return tuple(out)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Generator:
    index: int
    matrices: np.ndarray
    order: int | None = None  # finite order in PSL, if any

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=float)
        if m.ndim == 2:
            m = m[None]
        if m.shape[1:] != (2, 2) or not 1 <= m.shape[0] <= 3:
            raise GroupError(f"generator {self.index}: expected d 2x2 matrices, got {m.shape}")
        det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
        if np.any(np.abs(det - 1.0) >= DET_TOL):
            raise GroupError(f"generator {self.index}: determinant {det} is not 1")
        m = sign_normalize(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def d(self) -> int:
        return self.matrices.shape[0]


@dataclass(frozen=True)
class PeripheralSubgroup:
    """A peripheral subgroup generated by a subset of the generators.

    ``generators`` holds positive indices; inverses are implied, so the
    letter set is closed under inversion by construction.
    """

    id: str
    generators: tuple[int, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def letters(self, orders: dict[int, int]) -> list[int]:
        out = []
        for g in self.generators:
            out.append(g)
            if orders.get(g) != 2:
                out.append(-g)
        return out


class GroupElement:
    """A group element: shortlex word plus sign-normalized factor matrices."""

    __slots__ = ("word", "matrices", "preset", "geodesic", "_key")

    def __init__(self, word, matrices, preset: "GroupPreset | None" = None, geodesic: bool = True):
        m = sign_normalize(np.asarray(matrices, dtype=float))
        m.setflags(write=False)
        self.word = tuple(int(x) for x in word)
        self.matrices = m
        self.preset = preset
        self.geodesic = geodesic
        self._key = None

    @property
    def d(self) -> int:
        return self.matrices.shape[0]

    def key(self) -> bytes:
        if self._key is None:
            self._key = matrix_keys(self.matrices).tobytes()
        return self._key

    def is_identity(self) -> bool:
        return bool(same_matrices(self.matrices, np.broadcast_to(np.eye(2), self.matrices.shape)))

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.d == other.d and bool(same_matrices(self.matrices, other.matrices))

    def __hash__(self):
        return hash(self.key())

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def inverse(self) -> "GroupElement":
        if self.preset is not None:
            return self.preset.element(invert_word(self.word, self.preset.orders))
        return GroupElement(invert_word(self.word, {}), inverse_matrices(self.matrices))

    def __repr__(self):
        return f"GroupElement({word_to_str(self.word)})"


def word_length(g: GroupElement) -> int:
    return len(g.word)


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    """Product with word reduction against the preset of ``a``."""
    if a.d != b.d:
        raise FactorMismatch(f"factor counts differ: {a.d} vs {b.d}")
    preset = a.preset or b.preset
    if preset is None:
        return GroupElement(a.word + b.word, a.matrices @ b.matrices)
    return preset.product(a, b)


# ---------------------------------------------------------------------------
# balls


class Ball:
    """A breadth-first Cayley ball stored as parallel arrays.

    ``parent[i]`` and ``letter[i]`` encode the shortlex word of element i as
    word(parent) + (letter,).  Lookup of arbitrary matrices goes through a
    sorted uint64 hash with matrix verification.
    """

    def __init__(self, preset: "GroupPreset", matrices, lengths, parent, letter):
        self.preset = preset
        self.matrices = matrices
        self.lengths = lengths
        self.parent = parent
        self.letter = letter
        self.radius = int(lengths.max()) if len(lengths) else 0
        h = hash_keys(matrix_keys(matrices))
        self._order = np.argsort(h, kind="stable")
        self._sorted = h[self._order]
        self._words: list | None = None

    def __len__(self):
        return len(self.lengths)

    def sphere_offsets(self) -> np.ndarray:
        """Index boundaries of the spheres: sphere r is [off[r], off[r+1])."""
        return np.searchsorted(self.lengths, np.arange(self.radius + 2))

    def count(self, radius: int) -> int:
        return int(np.searchsorted(self.lengths, radius, side="right"))

    def word(self, i: int) -> tuple[int, ...]:
        if self._words is not None:
            return self._words[i]
        out = []
        i = int(i)
        while self.parent[i] >= 0:
            out.append(int(self.letter[i]))
            i = int(self.parent[i])
        return tuple(reversed(out))

    def words(self) -> list[tuple[int, ...]]:
        if self._words is None:
            ws: list = [()] * len(self)
            for i in range(1, len(self)):
                ws[i] = ws[self.parent[i]] + (int(self.letter[i]),)
            self._words = ws
        return self._words

    def element(self, i: int) -> GroupElement:
        return GroupElement(self.word(i), self.matrices[i], self.preset)

    def lookup(self, mats: np.ndarray) -> np.ndarray:
        """Indices of the given matrices in the ball, -1 where absent."""
        mats = sign_normalize(mats)
        h = hash_keys(matrix_keys(mats))
        pos = np.searchsorted(self._sorted, h)
        pos = np.minimum(pos, len(self._sorted) - 1)
        hit = self._sorted[pos] == h
        idx = np.where(hit, self._order[pos], -1)
        ok = idx >= 0
        if ok.any():
            good = same_matrices(self.matrices[idx[ok]], mats[ok])
            sub = idx[ok]
            sub[~good] = -1
            idx[ok] = sub
        return idx


def _expand_ball(preset: "GroupPreset", radius: int) -> Ball:
    d = preset.d
    letters = preset.letters
    lmats = np.stack([preset.letter_matrix(x) for x in letters])
    inv_pos = [letters.index(preset.inverse_letter(x)) for x in letters]

    mats = [np.broadcast_to(np.eye(2), (1, d, 2, 2)).copy()]
    lengths = [np.zeros(1, dtype=np.int32)]
    parent = [np.full(1, -1, dtype=np.int64)]
    letter = [np.zeros(1, dtype=np.int32)]
    last_pos = np.full(1, -1, dtype=np.int64)  # position of last letter, -1 at identity
    seen_hash = hash_keys(matrix_keys(mats[0]))
    seen_mats = mats[0]
    start = 0
    free = preset.is_free
    for r in range(1, radius + 1):
        fm = mats[-1]
        nf = fm.shape[0]
        cand = (fm[:, None] @ lmats[None, :]).reshape(nf * len(letters), d, 2, 2)
        par = np.repeat(np.arange(start, start + nf), len(letters))
        pos = np.tile(np.arange(len(letters)), nf)
        # skip immediate backtracking
        back = np.asarray(inv_pos)[np.maximum(np.repeat(last_pos, len(letters)), 0)]
        keep = ~((np.repeat(last_pos, len(letters)) >= 0) & (pos == back))
        cand, par, pos = cand[keep], par[keep], pos[keep]
        cand = sign_normalize(cand)
        h = hash_keys(matrix_keys(cand))
        # first occurrence within this sphere
        _, first = np.unique(h, return_index=True)
        first.sort()
        dup_inside = np.ones(len(h), dtype=bool)
        dup_inside[first] = False
        if dup_inside.any():
            # verify the merged candidates really coincide
            order = np.argsort(h, kind="stable")
            hs = h[order]
            grp = np.searchsorted(hs, h)
            rep = order[grp]
            same = same_matrices(cand[rep[dup_inside]], cand[dup_inside])
            if free or not same.all():
                raise HashCollision(
                    f"radius {r}: {int((~same).sum()) if not free else int(dup_inside.sum())} "
                    "distinct words collide at hash tolerance"
                )
        cand, par, pos, h = cand[first], par[first], pos[first], h[first]
        # drop elements already in smaller spheres
        srt = np.argsort(seen_hash, kind="stable")
        sh = seen_hash[srt]
        p = np.minimum(np.searchsorted(sh, h), len(sh) - 1)
        old = sh[p] == h
        if old.any():
            same = same_matrices(seen_mats[srt[p[old]]], cand[old])
            if free or not same.all():
                raise HashCollision(f"radius {r}: new word collides with a shorter element")
        new = ~old
        cand, par, pos, h = cand[new], par[new], pos[new], h[new]
        if len(cand) == 0:
            break
        start += nf
        mats.append(cand)
        lengths.append(np.full(len(cand), r, dtype=np.int32))
        parent.append(par)
        letter.append(np.asarray(letters, dtype=np.int32)[pos])
        last_pos = pos.astype(np.int64)
        seen_hash = np.concatenate([seen_hash, h])
        seen_mats = np.concatenate([seen_mats, cand])
    return Ball(
        preset,
        np.concatenate(mats),
        np.concatenate(lengths),
        np.concatenate(parent),
        np.concatenate(letter),
    )


# ---------------------------------------------------------------------------
# presets


class GroupPreset:
    """Generators, peripheral subgroups and relators of a concrete group.

    The ball cache is grown lazily and guarded by a lock, so a preset may be
    shared between threads.
    """

    def __init__(
        self,
        name: str,
        generators: Sequence[Generator],
        peripherals: Sequence[PeripheralSubgroup] = (),
        relators: Sequence[Sequence[int]] = (),
        radius_cap: int = DEFAULT_RADIUS_CAP,
        integral: bool = False,
        description: str = "",
    ):
        if not generators:
            raise GroupError("a preset needs at least one generator")
        ds = {g.d for g in generators}
        if len(ds) != 1:
            raise FactorMismatch(f"generators disagree on factor count: {sorted(ds)}")
        idx = [g.index for g in generators]
        if sorted(idx) != list(range(1, len(idx) + 1)):
            raise GroupError("generator indices must be 1..n")
        self.name = name
        self.generators = sorted(generators, key=lambda g: g.index)
        self.d = ds.pop()
        self.orders = {g.index: g.order for g in self.generators if g.order}
        for p in peripherals:
            for i in p.generators:
                if i not in idx:
                    raise GroupError(f"peripheral {p.id}: unknown generator {i}")
        self.peripherals = list(peripherals)
        self.relators = [tuple(r) for r in relators]
        for i, o in self.orders.items():
            rel = (i,) * o
            if rel not in self.relators:
                self.relators.append(rel)
        self.radius_cap = radius_cap
        self.integral = integral
        self.description = description
        self.letters = []
        for g in self.generators:
            self.letters.append(g.index)
            if self.orders.get(g.index) != 2:
                self.letters.append(-g.index)
        self._ball: Ball | None = None
        self._ball_prefixes: dict[int, Ball] = {}
        self._lock = threading.Lock()
        self._peripheral_balls: dict = {}

    @property
    def is_free(self) -> bool:
        return not self.relators

    def inverse_letter(self, x: int) -> int:
        return x if self.orders.get(abs(x)) == 2 else -x

    def letter_matrix(self, x: int) -> np.ndarray:
        m = self.generators[abs(x) - 1].matrices
        return m if x > 0 else inverse_matrices(m)

    def word_matrices(self, word: Iterable[int]) -> np.ndarray:
        m = np.broadcast_to(np.eye(2), (self.d, 2, 2)).copy()
        for x in word:
            m = m @ self.letter_matrix(x)
        return sign_normalize(m)

    def identity(self) -> GroupElement:
        return GroupElement((), np.broadcast_to(np.eye(2), (self.d, 2, 2)), self)

    def generator(self, x: int) -> GroupElement:
        return GroupElement((x,), self.letter_matrix(x), self)

    def element(self, word: Sequence[int]) -> GroupElement:
        """Element for an arbitrary word, stored with its reduced form."""
        word = tuple(word)
        mats = self.word_matrices(word)
        if self.is_free:
            return GroupElement(self.rewrite(word), mats, self)
        if len(word) <= self.radius_cap:
            ball = self.ball(min(max(len(word), 1), self.radius_cap))
            i = ball.lookup(mats[None])[0]
            if i >= 0:
                return GroupElement(ball.word(i), mats, self)
        red = self.rewrite(word)
        return GroupElement(red, mats, self, geodesic=self.is_free)

    def product(self, a: GroupElement, b: GroupElement) -> GroupElement:
        mats = a.matrices @ b.matrices
        n = len(a.word) + len(b.word)
        if self.is_free:
            return GroupElement(self.rewrite(a.word + b.word), mats, self)
        if n <= self.radius_cap:
            ball = self.ball(max(n, 1))
            i = ball.lookup(sign_normalize(mats)[None])[0]
            if i >= 0:
                return GroupElement(ball.word(i), mats, self)
        return GroupElement(self.rewrite(a.word + b.word), mats, self, geodesic=False)

    def rewrite(self, word: Sequence[int]) -> tuple[int, ...]:
        """Free reduction plus deletion of relator subwords.

        Relator occurrences are matched cyclically and in both orientations.
        For free presets this is exact; otherwise the result is a
        shorter word for the same element but not necessarily geodesic.
        """
        w = [x if self.orders.get(abs(x)) != 2 else abs(x) for x in word]
        pats = set()
        for r in self.relators:
            for rr in (tuple(r), invert_word(r, self.orders)):
                for k in range(len(rr)):
                    pats.add(rr[k:] + rr[:k])
        changed = True
        while changed:
            changed = False
            out: list[int] = []
            for x in w:
                if out and out[-1] == self.inverse_letter(x) and self.orders.get(abs(x)) != 2:
                    out.pop()
                    changed = True
                else:
                    out.append(x)
            w = out
            for p in sorted(pats, key=len, reverse=True):
                n = len(p)
                for i in range(len(w) - n + 1):
                    if tuple(w[i : i + n]) == p:
                        del w[i : i + n]
                        changed = True
                        break
                if changed:
                    break
        return tuple(w)

    def ball(self, radius: int) -> Ball:
        if radius > self.radius_cap:
            raise RadiusCapExceeded(f"radius {radius} exceeds cap {self.radius_cap}")
        with self._lock:
            if self._ball is None or self._ball.radius < radius:
                self._ball = _expand_ball(self, radius)
                self._ball_prefixes = {}
            big = self._ball
            if big.radius == radius:
                return big
            # breadth-first order puts parents first, so a length prefix is itself a ball
            if radius not in self._ball_prefixes:
                n = big.count(radius)
                self._ball_prefixes[radius] = Ball(self, big.matrices[:n], big.lengths[:n],
                                                   big.parent[:n], big.letter[:n])
            return self._ball_prefixes[radius]

    def peripheral(self, pid: str) -> PeripheralSubgroup:
        for p in self.peripherals:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def peripheral_ball(self, p: PeripheralSubgroup, radius: int) -> Ball:
        """Ball of P in its own word metric (letters S ∩ P)."""
        with self._lock:
            b = self._peripheral_balls.get(p.id)
            if b is not None and b.radius >= radius:
                return b
        sub = GroupPreset(
            f"{self.name}:{p.id}",
            [Generator(k + 1, self.generators[g - 1].matrices, self.orders.get(g))
             for k, g in enumerate(p.generators)],
            radius_cap=max(radius, 1) + 1,
        )
        b = _expand_ball(sub, radius)
        # re-express letters in the ambient generator numbering
        b.letter = np.where(b.letter == 0, 0,
                            np.sign(b.letter) * np.asarray(p.generators)[np.abs(b.letter) - 1])
        b.preset = self
        with self._lock:
            self._peripheral_balls[p.id] = b
        return b

    def fixed_vectors(self, p: PeripheralSubgroup) -> np.ndarray:
        """Common fixed direction of a parabolic peripheral, shape (d, 2)."""
        m = self.generators[p.generators[0] - 1].matrices
        out = np.empty((self.d, 2))
        for i in range(self.d):
            a, b, c, dd = m[i].ravel()
            v = np.array([b, 1.0 - a]) if abs(b) + abs(1 - a) > abs(c) + abs(1 - dd) else np.array([1.0 - dd, c])
            if np.linalg.norm(v) < 1e-12:
                v = np.array([1.0, 0.0])
            out[i] = v / np.linalg.norm(v)
        return out

    def __repr__(self):
        return f"GroupPreset({self.name!r}, d={self.d}, gens={len(self.generators)})"


def enumerate_ball(preset: GroupPreset, radius: int) -> set[GroupElement]:
    ball = preset.ball(radius)
    return {ball.element(i) for i in range(ball.count(radius))}


# ---------------------------------------------------------------------------
# concrete presets

S_MAT = np.array([[0.0, -1.0], [1.0, 0.0]])
T_MAT = np.array([[1.0, 1.0], [0.0, 1.0]])


def _schottky_pair(trace_a: float, trace_b: float) -> tuple[np.ndarray, np.ndarray]:
    """Hyperbolic a with axis through +-1 and diagonal b; ping-pong for traces >= 6."""
    ha = trace_a / 2.0
    sa = np.sqrt(ha * ha - 1.0)
    a = np.array([[ha, sa], [sa, ha]])
    lb = (trace_b + np.sqrt(trace_b**2 - 4.0)) / 2.0
    b = np.diag([lb, 1.0 / lb])
    return a, b


def psl2z() -> GroupPreset:
    return GroupPreset(
        "psl2z",
        [Generator(1, S_MAT, order=2), Generator(2, T_MAT)],
        [PeripheralSubgroup("P", (2,))],
        relators=[(1, 1), (1, 2, 1, 2, 1, 2)],
        integral=True,
        description="modular group, s of order 2, st of order 3, cusp stabilizer <t>",
    )


def schottky2() -> GroupPreset:
    a, b = _schottky_pair(6.0, 6.0)
    return GroupPreset(
        "schottky2",
        [Generator(1, a), Generator(2, b)],
        description="rank-2 Schottky group; isometric discs of a centred at +-1.0607 radius 0.3536, "
        "b-discs |z|<0.5 and |z|>2",
    )


def selfjoin_schottky(trace_a: float = 6.0, trace_b: float = 8.0) -> GroupPreset:
    """Self-joining rho x (rho o tau) with tau the swap of the two generators.

    Swapping the two factors together with the two generators is a symmetry,
    so the Cartan vectors of the group are symmetric under coordinate swap.
    """
    a, b = _schottky_pair(trace_a, trace_b)
    return GroupPreset(
        "selfjoin-schottky",
        [Generator(1, np.stack([a, b])), Generator(2, np.stack([b, a]))],
        description=f"diagonal self-joining of a Schottky pair with traces ({trace_a}, {trace_b})",
    )


def cyclic_parabolic() -> GroupPreset:
    return GroupPreset(
        "cyclic-parabolic",
        [Generator(1, T_MAT)],
        [PeripheralSubgroup("P", (1,))],
        radius_cap=4096,
        description="infinite cyclic parabolic group; its cusp space is the horoball over Z",
    )


PRESETS = {
    "psl2z": psl2z,
    "schottky2": schottky2,
    "selfjoin-schottky": selfjoin_schottky,
    "cyclic-parabolic": cyclic_parabolic,
}

_preset_cache: dict[str, GroupPreset] = {}
_preset_lock = threading.Lock()


def get_preset(name: str) -> GroupPreset:
    """Shared preset instance (its ball cache is reused across callers)."""
    with _preset_lock:
        if name not in _preset_cache:
            if name not in PRESETS:
                raise GroupError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
            _preset_cache[name] = PRESETS[name]()
        return _preset_cache[name]


def load_custom(doc: dict | str | Path, name: str = "custom") -> GroupPreset:
    """Preset from ``{factors, generators, peripherals[, relators, orders]}``.

    ``generators`` is a list whose entries are lists of ``factors`` 2x2
    matrices.  ``peripherals`` is a list of generator-index lists (a flat
    index list is read as one peripheral per index).
    """
    if isinstance(doc, (str, Path)):
        p = Path(doc)
        doc = json.loads(p.read_text()) if p.exists() else json.loads(str(doc))
    d = int(doc["factors"])
    gens = []
    orders = doc.get("orders", {})
    for k, mats in enumerate(doc["generators"], start=1):
        m = np.asarray(mats, dtype=float)
        if m.shape == (2, 2):
            m = m[None]
        if m.shape[0] != d:
            raise FactorMismatch(f"generator {k} has {m.shape[0]} factors, expected {d}")
        gens.append(Generator(k, m, orders.get(str(k))))
    per = doc.get("peripherals", [])
    if per and all(isinstance(x, int) for x in per):
        per = [[x] for x in per]
    peripherals = [PeripheralSubgroup(f"P{j}", tuple(int(i) for i in grp)) for j, grp in enumerate(per)]
    return GroupPreset(doc.get("name", name), gens, peripherals, relators=doc.get("relators", ()))
