"""Exactly representable Z^k systems: quantized tori, subshifts, product shifts.

Site values are always small integers (indices into a finite site space), so
every action is an exact integer computation.  Configurations are only ever
handled through finite :class:`ConfigWindow` objects carrying a margin.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .lattice_metric import Box, CapExceeded, Window, norm, window_points

PATTERN_CAP = 5 * 10**6


class InsufficientMargin(ValueError):
    """The configuration window does not reach far enough for the request."""


# --------------------------------------------------------------------------
# Site spaces


@dataclass(frozen=True)
class QuantizedTorus:
    """The lattice ((1/q)Z / Z)^r with the quotient metric of a norm."""

    r: int
    q: int
    norm: str = "euclidean"

    def __post_init__(self):
        if self.r < 1 or self.q < 1:
            raise ValueError("need r >= 1 and q >= 1")
        if self.norm not in ("euclidean", "sup"):
            raise ValueError("norm must be 'euclidean' or 'sup'")

    @property
    def size(self) -> int:
        return self.q**self.r

    def coords(self, idx) -> np.ndarray:
        """Integer numerators (last axis of length r) of point indices."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape + (self.r,), dtype=np.int64)
        rem = idx.copy()
        for j in range(self.r - 1, -1, -1):
            out[..., j] = rem % self.q
            rem //= self.q
        return out

    def index(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64) % self.q
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        for j in range(self.r):
            idx = idx * self.q + coords[..., j]
        return idx

    def distance(self, a, b) -> np.ndarray:
        diff = np.abs(self.coords(a) - self.coords(b)) % self.q
        diff = np.minimum(diff, self.q - diff) / self.q
        if self.norm == "sup":
            return diff.max(axis=-1)
        return np.sqrt((diff**2).sum(axis=-1))

    @property
    def diameter(self) -> float:
        half = (self.q // 2) / self.q
        return half if self.norm == "sup" else half * math.sqrt(self.r)

    @property
    def min_gap(self) -> float:
        return 1.0 / self.q if self.q > 1 else math.inf


@dataclass(frozen=True)
class ToralAutomorphism:
    """An integer matrix with determinant +-1, acting on every 1/q lattice."""

    M: tuple

    def __post_init__(self):
        m = np.array(self.M, dtype=np.int64)
        object.__setattr__(self, "M", tuple(tuple(int(v) for v in row) for row in m))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if round(abs(np.linalg.det(m))) != 1:
            raise ValueError("toral automorphism needs |det M| = 1")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.M, dtype=np.int64)

    @property
    def inverse(self) -> np.ndarray:
        m = self.matrix
        if m.shape == (2, 2):
            det = int(round(np.linalg.det(m)))
            a, b, c, d = m.ravel()
            return det * np.array([[d, -b], [-c, a]], dtype=np.int64)
        return np.rint(np.linalg.inv(m)).astype(np.int64)

    def power(self, t: int, q: int) -> np.ndarray:
        """M^t reduced mod q (negative t uses the integer inverse)."""
        base = self.matrix if t >= 0 else self.inverse
        out = np.eye(base.shape[0], dtype=np.int64)
        b, e = base % q, abs(t)
        while e:
            if e & 1:
                out = (out @ b) % q
            b = (b @ b) % q
            e >>= 1
        return out

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix.astype(float))

    def is_hyperbolic(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(np.abs(self.eigenvalues()) - 1.0) > tol))


class AlphabetSite:
    """A finite alphabet with the unit discrete metric and a permutation h."""

    def __init__(self, size: int, perm: Sequence[int] | None = None):
        self.size = int(size)
        self.perm = np.arange(self.size) if perm is None else np.asarray(perm, dtype=np.int64)
        if sorted(self.perm.tolist()) != list(range(self.size)):
            raise ValueError("perm must be a permutation of the alphabet")
        self._inv = np.argsort(self.perm)

    diameter = 1.0
    min_gap = 1.0
    dimension = 0

    def distance(self, a, b) -> np.ndarray:
        return (np.asarray(a) != np.asarray(b)).astype(float)

    def apply_h(self, a, t: int = 1) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        p = self.perm if t >= 0 else self._inv
        for _ in range(abs(t)):
            a = p[a]
        return a

    def __repr__(self):
        return f"AlphabetSite({self.size})"


class TorusSite:
    """Quantized torus points (as indices) with an optional automorphism."""

    def __init__(self, torus: QuantizedTorus, auto: ToralAutomorphism | None = None):
        self.torus = torus
        self.auto = auto
        if auto is not None and len(auto.M) != torus.r:
            raise ValueError("automorphism size does not match torus dimension")
        self._pow_cache: dict[int, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.torus.size

    @property
    def diameter(self) -> float:
        return self.torus.diameter

    @property
    def min_gap(self) -> float:
        return self.torus.min_gap

    @property
    def dimension(self) -> int:
        return self.torus.r

    def distance(self, a, b) -> np.ndarray:
        return self.torus.distance(a, b)

    def apply_h(self, a, t: int = 1) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.auto is None or t == 0:
            return a
        if t not in self._pow_cache:
            self._pow_cache[t] = self.auto.power(t, self.torus.q)
        c = self.torus.coords(a)
        return self.torus.index((c @ self._pow_cache[t].T) % self.torus.q)

    def h_permutation(self, t: int = 1) -> np.ndarray:
        return self.apply_h(np.arange(self.size), t)

    def __repr__(self):
        return f"TorusSite(r={self.torus.r}, q={self.torus.q}, M={self.auto and self.auto.M})"


def orbit_lengths(perm: np.ndarray) -> np.ndarray:
    """Cycle length of every element under a permutation."""
    n = len(perm)
    out = np.zeros(n, dtype=np.int64)
    for s in range(n):
        if out[s]:
            continue
        cyc, x = [s], perm[s]
        while x != s:
            cyc.append(x)
            x = perm[x]
        out[cyc] = len(cyc)
    return out


# --------------------------------------------------------------------------
# Configurations


@dataclass
class ConfigWindow:
    """Values on the centred box of radius ``margin`` (``dims`` axes)."""

    values: np.ndarray
    margin: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if any(s != 2 * self.margin + 1 for s in self.values.shape):
            raise ValueError("values must cover the box [-margin, margin]^dims")

    @property
    def dims(self) -> int:
        return self.values.ndim

    def at(self, u) -> int:
        u = tuple(int(c) for c in np.atleast_1d(u))
        if norm(u) > self.margin:
            raise InsufficientMargin(f"{u} outside margin {self.margin}")
        return int(self.values[tuple(c + self.margin for c in u)])


# --------------------------------------------------------------------------
# Systems


@dataclass
class SftSystem:
    """Shift action of Z^k on site^(Z^k), cut out by one finite local rule.

    ``predicate`` receives an integer array of shape ``(P, len(shape))`` with
    the site values at each placement of ``shape`` and returns a boolean
    array of legal placements.
    """

    k: int
    site: object
    shape: tuple = ()
    predicate: Callable | None = None
    name: str = "sft"

    def __post_init__(self):
        self.shape = tuple(tuple(int(c) for c in s) for s in self.shape)
        if any(len(s) != self.k for s in self.shape):
            raise ValueError("rule shape offsets must have length k")

    def value_at(self, c: ConfigWindow, u) -> int:
        return c.at(u)

    def apply(self, u, c: ConfigWindow) -> ConfigWindow:
        u = tuple(int(x) for x in np.atleast_1d(u))
        s = norm(u)
        if s > c.margin:
            raise InsufficientMargin(f"shift {u} exceeds margin {c.margin}")
        R = c.margin - s
        sl = tuple(slice(c.margin + ui - R, c.margin + ui + R + 1) for ui in u)
        return ConfigWindow(c.values[sl].copy(), R)

    def is_legal(self, c: ConfigWindow) -> bool:
        if not self.shape:
            return True
        vals = _placements_legal(self, c.values)
        return bool(vals)


def _placements_legal(sys: SftSystem, values: np.ndarray) -> bool:
    shape = np.array(sys.shape)
    lo, hi = shape.min(axis=0), shape.max(axis=0)
    dims = values.shape
    anchors = [range(-lo[j], dims[j] - hi[j]) for j in range(sys.k)]
    rows = []
    for a in itertools.product(*anchors):
        rows.append([values[tuple(np.add(a, s))] for s in sys.shape])
    if not rows:
        return True
    return bool(np.all(sys.predicate(np.array(rows, dtype=np.int64))))


@dataclass
class ProductShiftSystem:
    """The Z^2 action (sigma, h_Z) on site^Z.

    A configuration window is a 1-d array of site values; the action of
    ``(a, t)`` is ``x -> h^t(sigma^a x)``.
    """

    site: object
    name: str = "product"
    k: int = 2

    def value_at(self, c: ConfigWindow, u) -> int:
        a, t = (int(v) for v in u)
        return int(self.site.apply_h(c.at((a,)), t))

    def apply(self, u, c: ConfigWindow) -> ConfigWindow:
        a, t = (int(v) for v in u)
        if abs(a) > c.margin:
            raise InsufficientMargin(f"shift {a} exceeds margin {c.margin}")
        R = c.margin - abs(a)
        vals = c.values[c.margin + a - R: c.margin + a + R + 1]
        return ConfigWindow(self.site.apply_h(vals, t), R)

    def generators(self):
        return [(1, 0), (0, 1)]


# --------------------------------------------------------------------------
# Metrics


def window_metric(sys, omega: Window, x: ConfigWindow, y: ConfigWindow) -> float:
    """``sup_{u in omega} d(T^u x, T^u y)`` with the base distance read at the origin."""
    best = 0.0
    for u in window_points(omega):
        d = float(sys.site.distance(sys.value_at(x, u), sys.value_at(y, u)))
        best = max(best, d)
    return best


def weighted_series_metric(x: ConfigWindow, y: ConfigWindow, site) -> tuple[float, float]:
    """Interval for ``sum_n 2^-|n| d(x_n, y_n)`` seen through a window [-N, N]."""
    if x.margin != y.margin or x.dims != 1:
        raise ValueError("windows must share a one-dimensional domain")
    N = x.margin
    n = np.arange(-N, N + 1)
    part = float(np.sum(2.0 ** -np.abs(n) * site.distance(x.values, y.values)))
    return part, part + 2.0 ** (1 - N) * site.diameter


# --------------------------------------------------------------------------
# Pattern enumeration


def _cell_order(w: Window) -> list[tuple[int, ...]]:
    pts = window_points(w)
    # rows (last coordinate) outermost so the frontier is one row wide
    return sorted(pts, key=lambda p: tuple(reversed(p)))


def _placement_schedule(sys: SftSystem, cells):
    """For each cell, the placements completed when that cell is assigned."""
    pos = {c: i for i, c in enumerate(cells)}
    sched = [[] for _ in cells]
    if not sys.shape:
        return sched, 0
    anchors = {tuple(np.subtract(c, s)) for c in cells for s in sys.shape}
    back = 0
    for a in anchors:
        idx = []
        for s in sys.shape:
            p = tuple(np.add(a, s))
            if p not in pos:
                break
            idx.append(pos[p])
        else:
            last = max(idx)
            sched[last].append(idx)
            back = max(back, last - min(idx))
    return sched, back


def enumerate_patterns(sys: SftSystem, w: Window, count_only: bool = False,
                       cap: int = PATTERN_CAP):
    """Legal patterns on ``w``: every fully contained rule placement holds.

    Returns an integer array ``(P, cells)`` (cells in row-major order with the
    last coordinate outermost), or just the count with ``count_only``.
    """
    cells = _cell_order(w)
    sched, back = _placement_schedule(sys, cells)
    s = sys.site.size
    if count_only:
        return _count_frontier(sys, cells, sched, back, s)
    partial = np.zeros((1, 0), dtype=np.int64)
    for i in range(len(cells)):
        if partial.shape[0] * s > cap:
            raise CapExceeded(f"pattern enumeration exceeds cap {cap}")
        sym = np.arange(s, dtype=np.int64)
        partial = np.concatenate(
            [np.repeat(partial, s, axis=0), np.tile(sym, partial.shape[0])[:, None]], axis=1)
        for idx in sched[i]:
            ok = sys.predicate(partial[:, idx])
            partial = partial[ok]
    return partial


def _count_frontier(sys, cells, sched, back, s) -> int:
    """Exact count by dynamic programming over the last ``back`` cells."""
    if not sys.shape:
        return s ** len(cells)
    states: dict[tuple, int] = {(): 1}
    for i in range(len(cells)):
        keys = list(states)
        arr = np.array(keys, dtype=np.int64).reshape(len(keys), -1)
        cnt = np.array([states[k] for k in keys], dtype=object)
        hist = arr.shape[1]
        full = np.concatenate(
            [np.repeat(arr, s, axis=0), np.tile(np.arange(s), len(keys))[:, None]], axis=1)
        weights = np.repeat(cnt, s)
        ok = np.ones(full.shape[0], dtype=bool)
        for idx in sched[i]:
            local = [j - (i - hist) for j in idx]
            ok &= sys.predicate(full[:, local])
        full, weights = full[ok], weights[ok]
        keep = min(back, full.shape[1])
        trimmed = full[:, full.shape[1] - keep:] if keep else full[:, :0]
        nxt: dict[tuple, int] = {}
        for row, wgt in zip(map(tuple, trimmed.tolist()), weights):
            nxt[row] = nxt.get(row, 0) + wgt
        states = nxt
    return int(sum(states.values()))


def full_shift(k: int, symbols: int, name: str = "full shift") -> SftSystem:
    return SftSystem(k, AlphabetSite(symbols), name=name)


def golden_mean_shift() -> SftSystem:
    """1-d subshift on {0,1} forbidding the word 11."""
    return SftSystem(1, AlphabetSite(2), shape=((0,), (1,)),
                     predicate=lambda v: ~((v[:, 0] == 1) & (v[:, 1] == 1)),
                     name="golden mean")


def build_linear_sft(q: int) -> SftSystem:
    """Z^2 subshift of ((1/q)Z/Z)^(Z^2) with 3 x_{m,n} + x_{m+1,n} + x_{m,n+1} = 0."""
    if q < 2:
        raise ValueError("q must be at least 2")
    site = TorusSite(QuantizedTorus(1, q))
    return SftSystem(
        2, site, shape=((0, 0), (1, 0), (0, 1)),
        predicate=lambda v: (3 * v[:, 0] + v[:, 1] + v[:, 2]) % q == 0,
        name=f"linear three-cell q={q}")


# --------------------------------------------------------------------------
# Index sets and the restricted system


@dataclass(frozen=True)
class ArithmeticUnion:
    """Union of residue classes ``residues + period Z``."""

    period: int
    residues: frozenset

    def __init__(self, period: int, residues):
        object.__setattr__(self, "period", int(period))
        object.__setattr__(self, "residues", frozenset(int(r) % int(period) for r in residues))

    def __contains__(self, n) -> bool:
        return int(n) % self.period in self.residues

    def offsets(self, lo: int, hi: int):
        return range(self.period)


@dataclass(frozen=True)
class FiniteSet:
    elements: frozenset

    def __init__(self, elements):
        object.__setattr__(self, "elements", frozenset(int(e) for e in elements))

    def __contains__(self, n) -> bool:
        return int(n) in self.elements

    def offsets(self, lo: int, hi: int):
        if not self.elements:
            return [0]
        a, b = min(self.elements), max(self.elements)
        # every placement touching [lo, hi] plus one far away
        return list(range(lo - b, hi - a + 1)) + [hi - a + 1]


@dataclass(frozen=True)
class ExplicitWindowFunction:
    """Membership given by a callable; ``period`` required for exact work."""

    member: Callable
    period: int | None = None

    def __contains__(self, n) -> bool:
        return bool(self.member(int(n)))

    def offsets(self, lo: int, hi: int):
        if self.period is None:
            raise ValueError("non-periodic index sets are not supported")
        return range(self.period)


IndexSetSpec = ArithmeticUnion | FiniteSet | ExplicitWindowFunction


@dataclass
class RestrictedSystem:
    """Closure of the shifts of Y0 = {x : x_n in A for n outside Lambda}.

    ``base`` is a :class:`ProductShiftSystem` over a finite site, or the
    Z^2 full shift read column by column (the symbolic analog, where the
    cellwise map is the vertical shift and ``A`` lists constant columns).
    """

    base: object
    Lambda: object
    A: tuple

    def column_counts(self, T: int) -> tuple[int, int]:
        """(all column patterns, A-column patterns) on the time window [-T, T]."""
        if isinstance(self.base, ProductShiftSystem):
            return self.base.site.size, len(self.A)
        return self.base.site.size ** (2 * T + 1), len(self.A)

    def generating_supports(self, cols: Sequence[int]) -> list[frozenset]:
        """Maximal sets (Lambda + l) meeting the given columns."""
        lo, hi = min(cols), max(cols)
        sets = {frozenset(c for c in cols if (c - l) in self.Lambda)
                for l in self.Lambda.offsets(lo, hi)}
        return [s for s in sets if not any(s < t for t in sets)]

    def pattern_count(self, cols: Sequence[int], T: int) -> int:
        """Exact number of patterns on columns ``cols`` x time window [-T, T]."""
        F, a = self.column_counts(T)
        supports = self.generating_supports(cols)
        if len(supports) > 20:
            raise CapExceeded("too many distinct offset classes for inclusion-exclusion")
        total = 0
        W = len(cols)
        for r in range(1, len(supports) + 1):
            for J in itertools.combinations(supports, r):
                g = len(reduce(frozenset.intersection, J))
                total += (-1) ** (r + 1) * F**g * a ** (W - g)
        return total

    def box_count(self, N: int) -> int:
        return self.pattern_count(list(range(-N, N + 1)), N)


def build_restricted_Y(base, Lambda, A) -> RestrictedSystem:
    """The restricted system over an eventually periodic Lambda and an h-closed A."""
    A = tuple(sorted(int(a) for a in A))
    if not A:
        raise ValueError("A must be nonempty")
    if isinstance(base, ProductShiftSystem):
        img = set(np.atleast_1d(base.site.apply_h(np.array(A), 1)).tolist())
        if img != set(A):
            raise ValueError("A is not invariant under h")
    return RestrictedSystem(base, Lambda, A)


def restricted_patterns_bruteforce(Y: RestrictedSystem, N: int) -> set:
    """Oracle: explicit union over offsets of the Y0 pattern sets on [-N, N]^2."""
    cols = list(range(-N, N + 1))
    if isinstance(Y.base, ProductShiftSystem):
        full = [(v,) for v in range(Y.base.site.size)]
        acol = [(v,) for v in Y.A]
    else:
        s = Y.base.site.size
        full = list(itertools.product(range(s), repeat=2 * N + 1))
        acol = [(v,) * (2 * N + 1) for v in Y.A]
    out = set()
    for l in Y.Lambda.offsets(-N, N):
        choices = [full if (c - l) in Y.Lambda else acol for c in cols]
        out.update(itertools.product(*choices))
    return out


def subgroup_box_density(basis, N: int) -> tuple[int, Fraction]:
    """Points of the subgroup spanned by ``basis`` in [-N, N]^k, and N^(k-1)/count."""
    B = np.atleast_2d(np.array(basis, dtype=np.int64))
    rank, k = B.shape
    if rank != k - 1 or np.linalg.matrix_rank(B) != rank:
        raise ValueError("need k-1 independent basis vectors in Z^k")
    pts = np.array(window_points(Box(N, k)), dtype=float)
    coef, *_ = np.linalg.lstsq(B.T.astype(float), pts.T, rcond=None)
    ci = np.rint(coef)
    member = np.all(np.abs(B.T @ ci - pts.T) < 1e-9, axis=0)
    count = int(member.sum())
    return count, Fraction(N ** (k - 1), count)


# --------------------------------------------------------------------------
# Sequence spaces with the weighted metric, and finite invariant samples


@dataclass
class SequenceSpace:
    """site^Z with D(x, y) = sum_n 2^-|n| d(x_n, y_n).

    The acting group is generated by the shift, plus the cellwise map
    ``h`` of the site when ``cellwise`` is set (a Z^2 action).
    """

    site: object
    cellwise: bool = True

    @property
    def k(self) -> int:
        return 2 if self.cellwise else 1

    @property
    def diameter(self) -> float:
        return 3.0 * self.site.diameter


def periodic_weights(p: int) -> np.ndarray:
    """``w_r = sum over n = r mod p of 2^-|n|`` for r in range(p)."""
    r = np.arange(p, dtype=float)
    return (2.0**-r + 2.0 ** (r - p)) / (1.0 - 2.0**-p)


class FiniteActionSystem:
    """A finite metric sample on which commuting generators act as permutations."""

    def __init__(self, dist, gens, points=None, check: bool = True):
        from .lattice_metric import MetricMatrix

        self.metric = dist if isinstance(dist, MetricMatrix) else MetricMatrix(dist)
        self.gens = [np.asarray(g, dtype=np.int64) for g in gens]
        self.points = points
        n = self.metric.n
        self._inv = [np.argsort(g) for g in self.gens]
        self._pow: dict[tuple[int, int], np.ndarray] = {}
        if check:
            for g in self.gens:
                if sorted(g.tolist()) != list(range(n)):
                    raise ValueError("generator is not a permutation of the sample")
            for a, b in itertools.combinations(self.gens, 2):
                if not np.array_equal(a[b], b[a]):
                    raise ValueError("generators do not commute")

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def k(self) -> int:
        return len(self.gens)

    def _gen_power(self, i: int, t: int) -> np.ndarray:
        key = (i, t)
        if key not in self._pow:
            if t == 0:
                self._pow[key] = np.arange(self.n)
            else:
                step = self.gens[i] if t > 0 else self._inv[i]
                prev = self._gen_power(i, t - 1 if t > 0 else t + 1)
                self._pow[key] = step[prev]
        return self._pow[key]

    def perm(self, u) -> np.ndarray:
        """Index map of T^u: point i goes to point perm[i]."""
        out = np.arange(self.n)
        for i, t in enumerate(u):
            out = self._gen_power(i, int(t))[out]
        return out

    def window_perms(self, omega: Window) -> list[np.ndarray]:
        seen, out = set(), []
        for u in window_points(omega):
            p = self.perm(u)
            key = p.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(p)
        return out

    def window_matrix(self, omega: Window) -> np.ndarray:
        """``d_omega(i, j)`` for all sample pairs."""
        d = self.metric.dist
        out = np.zeros_like(d)
        for p in self.window_perms(omega):
            np.maximum(out, d[np.ix_(p, p)], out=out)
        return out

    def restrict_generators(self, idx: Sequence[int]) -> "FiniteActionSystem":
        return FiniteActionSystem(self.metric, [self.gens[i] for i in idx], self.points, check=False)


def periodic_sample(space: SequenceSpace, p: int, max_points: int = 2000,
                    seeds: int = 64, rng: np.random.Generator | None = None,
                    seed_configs=None) -> FiniteActionSystem:
    """Spatially p-periodic configurations, closed under the action.

    All site^p configurations are used when that fits in ``max_points`` and
    no ``seed_configs`` are given; otherwise the orbit closure of the given
    configurations, or of ``seeds`` random ones.
    """
    site = space.site
    if seed_configs is None and site.size**p <= max_points:
        X = np.array(list(itertools.product(range(site.size), repeat=p)), dtype=np.int64)
    else:
        if seed_configs is None:
            rng = rng or np.random.default_rng(0)
            start = rng.integers(0, site.size, (seeds, p))
        else:
            start = np.asarray(seed_configs, dtype=np.int64).reshape(-1, p)
        found = {tuple(r) for r in start.tolist()}
        frontier = list(found)
        while frontier:
            nxt = []
            for x in frontier:
                arr = np.array(x)
                imgs = [np.roll(arr, -1), np.roll(arr, 1)]
                if space.cellwise:
                    imgs += [site.apply_h(arr, 1), site.apply_h(arr, -1)]
                for y in map(lambda a: tuple(a.tolist()), imgs):
                    if y not in found:
                        found.add(y)
                        nxt.append(y)
            if len(found) > max_points:
                raise CapExceeded(f"orbit closure exceeds {max_points} points")
            frontier = nxt
        X = np.array(sorted(found), dtype=np.int64)
    index = {tuple(r): i for i, r in enumerate(X.tolist())}
    w = periodic_weights(p)
    dist = np.zeros((len(X), len(X)))
    for r in range(p):
        dist += w[r] * site.distance(X[:, r][:, None], X[:, r][None, :])
    shift = np.array([index[tuple(np.roll(x, -1).tolist())] for x in X])
    gens = [shift]
    if space.cellwise:
        hx = site.apply_h(X, 1)
        gens.append(np.array([index[tuple(r)] for r in hx.tolist()]))
    return FiniteActionSystem(dist, gens, points=X)


def periodic_sft_sample(sys: SftSystem, p: int, cap: int = 10**6) -> FiniteActionSystem:
    """Legal configurations with period p along every axis.

    The metric is ``sum_u 2^-|u|_1 d(x_u, y_u)`` folded onto the period cell.
    """
    k, s = sys.k, sys.site.size
    cells = list(itertools.product(range(p), repeat=k))
    if s ** len(cells) > cap:
        raise CapExceeded(f"{s}^{len(cells)} candidate periodic configurations")
    X = np.array(list(itertools.product(range(s), repeat=len(cells))), dtype=np.int64)
    X = X.reshape((-1,) + (p,) * k)
    if sys.shape:
        ok = np.ones(len(X), dtype=bool)
        for a in cells:
            vals = np.stack([X[(slice(None),) + tuple((np.add(a, o)) % p)] for o in sys.shape], axis=1)
            ok &= sys.predicate(vals)
        X = X[ok]
    flat = X.reshape(len(X), -1)
    index = {r: i for i, r in enumerate(map(tuple, flat.tolist()))}
    w1 = periodic_weights(p) / 3.0
    w = reduce(np.multiply.outer, [w1] * k).ravel()
    dist = np.zeros((len(X), len(X)))
    for c in range(flat.shape[1]):
        dist += w[c] * sys.site.distance(flat[:, c][:, None], flat[:, c][None, :])
    gens = []
    for axis in range(k):
        moved = np.roll(X, -1, axis=axis + 1).reshape(len(X), -1)
        gens.append(np.array([index[tuple(r)] for r in moved.tolist()]))
    return FiniteActionSystem(dist, gens, points=X)


def near_pair_seeds(site, p: int, count: int, rng: np.random.Generator,
                    far: bool = True) -> np.ndarray:
    """Random p-periodic configurations plus copies changed at one coordinate.

    The changed coordinate sits far from the origin, so each pair is close
    in the weighted metric; orbit closure then moves the change everywhere.
    """
    base = rng.integers(0, site.size, (count, p))
    twin = base.copy()
    pos = p // 2 if far else rng.integers(0, p, count)
    for i in range(count):
        j = pos if far else pos[i]
        twin[i, j] = (twin[i, j] + 1 + rng.integers(0, site.size - 1)) % site.size
    return np.concatenate([base, twin])
