"""Lattice windows, finite metrics, covers, and covering/packing numbers.

Everything here works on finite samples: a :class:`MetricMatrix` is a table of
pairwise distances, and a :class:`Cover` is a family of index subsets of its
points.  Openness of covers is replaced by the mesh condition.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_WINDOW_CAP = 10**7
EXACT_COVER_CAP = 24


class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured size cap."""


def norm(u: Sequence[int]) -> int:
    """Sup norm of a lattice vector, the ``|u| <= n`` convention."""
    return max((abs(int(c)) for c in u), default=0)


@dataclass(frozen=True)
class Box:
    N: int
    k: int

    def size(self) -> int:
        return (2 * self.N + 1) ** self.k


@dataclass(frozen=True)
class Boundary:
    N: int
    k: int

    def size(self) -> int:
        if self.N == 0:
            return 1
        return (2 * self.N + 1) ** self.k - (2 * self.N - 1) ** self.k


@dataclass(frozen=True)
class Explicit:
    points: tuple

    def size(self) -> int:
        return len(self.points)


Window = Box | Boundary | Explicit


def window_points(w: Window, cap: int = DEFAULT_WINDOW_CAP) -> list[tuple[int, ...]]:
    """Enumerate the lattice points of a window in lexicographic order."""
    if w.size() > cap:
        raise CapExceeded(f"window has {w.size()} points, cap is {cap}")
    if isinstance(w, Explicit):
        return sorted(tuple(int(c) for c in p) for p in set(w.points))
    if w.N < 0 or w.k < 1:
        raise ValueError("window needs N >= 0 and k >= 1")
    rng = range(-w.N, w.N + 1)
    pts = itertools.product(rng, repeat=w.k)
    if isinstance(w, Boundary):
        return [p for p in pts if any(abs(c) == w.N for c in p)]
    return list(pts)


def window_array(w: Window, cap: int = DEFAULT_WINDOW_CAP) -> np.ndarray:
    """Window points as an ``(n, k)`` integer array."""
    pts = window_points(w, cap)
    k = w.k if not isinstance(w, Explicit) else (len(pts[0]) if pts else 1)
    return np.array(pts, dtype=np.int64).reshape(len(pts), k)


@dataclass
class MetricMatrix:
    """Pairwise distances on ``n`` sample points.

    ``tol`` is the slack allowed when checking the metric axioms on float data.
    """

    dist: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        self.dist = np.asarray(self.dist, dtype=float)
        if self.dist.ndim != 2 or self.dist.shape[0] != self.dist.shape[1]:
            raise ValueError("distance table must be square")

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @classmethod
    def from_points(cls, pts, metric="euclidean", tol=1e-12):
        from scipy.spatial.distance import cdist

        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(cdist(pts, pts, metric=metric), tol)

    def check_axioms(self) -> bool:
        d, t = self.dist, self.tol
        if np.any(np.abs(np.diag(d)) > t) or np.any(d < -t):
            return False
        if np.any(np.abs(d - d.T) > t):
            return False
        # d[i,k] <= d[i,j] + d[j,k], one middle point at a time
        for j in range(self.n):
            if np.any(d > d[:, j, None] + d[None, j, :] + t):
                return False
        return True

    def diameter(self, idx: Iterable[int] | None = None) -> float:
        if idx is None:
            return float(self.dist.max()) if self.n else 0.0
        idx = np.fromiter(idx, dtype=np.int64)
        if idx.size == 0:
            return 0.0
        return float(self.dist[np.ix_(idx, idx)].max())


@dataclass(frozen=True)
class Cover:
    """A cover of ``range(n)`` by index sets."""

    sets: tuple[frozenset, ...]
    n: int

    @classmethod
    def of(cls, sets, n):
        return cls(tuple(frozenset(int(i) for i in s) for s in sets), int(n))

    def is_valid(self) -> bool:
        covered = set().union(*self.sets) if self.sets else set()
        return covered == set(range(self.n))

    def multiplicity(self) -> np.ndarray:
        mult = np.zeros(self.n, dtype=np.int64)
        for s in self.sets:
            mult[list(s)] += 1
        return mult


def cover_order(c: Cover) -> int:
    """Largest number of cover elements sharing a point, minus one."""
    if not c.sets or c.n == 0:
        raise ValueError("empty cover")
    return int(c.multiplicity().max()) - 1


def mesh(c: Cover, m: MetricMatrix) -> float:
    return max((m.diameter(s) for s in c.sets), default=0.0)


def cover_join(u: Cover, v: Cover) -> Cover:
    """All nonempty pairwise intersections of two covers of the same points."""
    if u.n != v.n:
        raise ValueError("covers live on different point sets")
    out = []
    seen = set()
    for a in u.sets:
        for b in v.sets:
            s = a & b
            if s and s not in seen:
                seen.add(s)
                out.append(s)
    return Cover(tuple(out), u.n)


def trivial_cover(n: int) -> Cover:
    return Cover((frozenset(range(n)),), n)


@dataclass(frozen=True)
class CountBracket:
    """``lb <= #(X, d, eps) <= ub``; ``exact`` marks a solved instance."""

    lb: int
    ub: int
    exact: bool = False
    witness: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.lb > self.ub:
            raise ValueError(f"bracket lb {self.lb} > ub {self.ub}")


def _close_graph(m: MetricMatrix, eps: float) -> np.ndarray:
    close = m.dist < eps
    np.fill_diagonal(close, True)
    return close


def greedy_separated(m: MetricMatrix, eps: float) -> list[int]:
    """Maximal eps-separated subset, ties broken by point index."""
    n = m.n
    alive = np.ones(n, dtype=bool)
    chosen = []
    close = _close_graph(m, eps)
    for i in range(n):
        if alive[i]:
            chosen.append(i)
            alive &= ~close[i]
    return chosen


def greedy_cover(m: MetricMatrix, eps: float) -> list[list[int]]:
    """Cover by sets of diameter < eps, grown in index order."""
    close = _close_graph(m, eps)
    uncovered = np.ones(m.n, dtype=bool)
    sets = []
    for i in range(m.n):
        if not uncovered[i]:
            continue
        members = [i]
        ok = close[i].copy()
        for j in np.flatnonzero(uncovered & ok):
            if j != i and ok[j]:
                members.append(int(j))
                ok &= close[j]
        uncovered[members] = False
        sets.append(members)
    return sets


def _exact_min_clique_cover(close: np.ndarray, upper: int) -> list[list[int]]:
    """Branch and bound partition of the points into cliques of ``close``."""
    n = close.shape[0]
    # most constrained points first
    order = sorted(range(n), key=lambda i: close[i].sum())
    best: list = [None, upper + 1]
    groups: list[list[int]] = []

    def rec(pos):
        if len(groups) >= best[1]:
            return
        if pos == n:
            best[0] = [list(g) for g in groups]
            best[1] = len(groups)
            return
        p = order[pos]
        for g in groups:
            if all(close[p, q] for q in g):
                g.append(p)
                rec(pos + 1)
                g.pop()
        groups.append([p])
        rec(pos + 1)
        groups.pop()

    rec(0)
    return best[0]


def _exact_max_independent(close: np.ndarray) -> list[int]:
    n = close.shape[0]
    adj = [set(np.flatnonzero(close[i]).tolist()) - {i} for i in range(n)]
    best: list = [[]]

    def rec(cand: set, chosen: list):
        if len(chosen) + len(cand) <= len(best[0]):
            return
        if not cand:
            best[0] = list(chosen)
            return
        v = min(cand)
        rec(cand - {v} - adj[v], chosen + [v])
        rec(cand - {v}, chosen)

    rec(set(range(n)), [])
    return sorted(best[0])


def packing_number(m: MetricMatrix, eps: float, exact_cap: int = EXACT_COVER_CAP) -> int:
    """Size of a maximal eps-separated subset (maximum for small samples)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m.n == 0:
        return 0
    if m.n <= exact_cap:
        return len(_exact_max_independent(_close_graph(m, eps)))
    return len(greedy_separated(m, eps))


def covering_number_bracket(
    m: MetricMatrix, eps: float, exact_cap: int = EXACT_COVER_CAP
) -> CountBracket:
    """Bracket the minimal number of sets of diameter < eps covering the sample.

    Any set of diameter < eps holds at most one point of an eps-separated
    family, so a separated set gives the lower bound; a greedy cover gives
    the upper bound.  Up to ``exact_cap`` points the exact value is solved.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m.n == 0:
        return CountBracket(0, 0, True)
    cover = greedy_cover(m, eps)
    if m.n <= exact_cap:
        close = _close_graph(m, eps)
        best = _exact_min_clique_cover(close, len(cover))
        if best is not None:
            cover = best
        k = len(cover)
        return CountBracket(k, k, True, tuple(tuple(sorted(g)) for g in cover))
    sep = greedy_separated(m, eps)
    return CountBracket(len(sep), len(cover), len(sep) == len(cover),
                        tuple(tuple(sorted(g)) for g in cover))


def chain_component_split(c: Cover, m: MetricMatrix, threshold: float) -> Cover:
    """Split each cover element into classes of the chain relation ``d < threshold``."""
    from scipy.sparse.csgraph import connected_components

    if threshold <= 0:
        raise ValueError("threshold must be positive")
    out = []
    for s in c.sets:
        idx = np.array(sorted(s), dtype=np.int64)
        if idx.size == 0:
            continue
        sub = m.dist[np.ix_(idx, idx)] < threshold
        ncomp, labels = connected_components(sub, directed=False)
        for lab in range(ncomp):
            out.append(frozenset(idx[labels == lab].tolist()))
    return Cover(tuple(out), c.n)
