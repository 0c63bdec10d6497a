"""Expansivity certificates, moduli of expansivity, boundary gaps, coding constants.

Expansiveness quantifies over the whole acting group, which no finite
computation can see.  Certificates are therefore either analytic (symbolic
systems, where any difference shifted to the origin is at least the symbol
gap) or empirical over a recorded window.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice_metric import (
    Boundary,
    Box,
    Cover,
    MetricMatrix,
    chain_component_split,
    cover_join,
    cover_order,
    greedy_separated,
    mesh,
)
from .systems import (
    AlphabetSite,
    FiniteActionSystem,
    SequenceSpace,
    SftSystem,
    TorusSite,
    enumerate_patterns,
)

MAX_PAIRS = 10**6


class CounterexampleFound(Exception):
    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class Inconclusive(Exception):
    pass


class NotFoundWithin(Exception):
    pass


class GapCollapse(Exception):
    pass


class MeshViolation(AssertionError):
    pass


@dataclass(frozen=True)
class ExpansivityCertificate:
    """``c`` with 2c below the smallest separation seen (``separation``)."""

    c: float
    mode: str
    n_max: int
    separation: float
    evidence: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class BoundaryGap:
    """Smallest boundary distance among band pairs; ``delta`` is None for an empty band."""

    delta: float | None
    N_range: tuple
    band_pairs: int

    @property
    def band_empty(self) -> bool:
        return self.band_pairs == 0


@dataclass(frozen=True)
class CodingConstant:
    K: int
    eps: float
    evidence: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class WidimBound:
    order: int
    bound: int
    L: int
    mesh: float
    cover_size: int


# --------------------------------------------------------------------------
# helpers


def _torus_separation(site: TorusSite, n_max: int) -> tuple[float, int]:
    """min over nonzero v of max_{|t| <= n_max} |h^t v|, with a minimizer."""
    v = np.arange(1, site.size)
    best = np.zeros(len(v))
    for t in range(-n_max, n_max + 1):
        np.maximum(best, site.distance(site.apply_h(v, t), 0), out=best)
    i = int(np.argmin(best))
    return float(best[i]), int(v[i])


def _torus_orbit_radius(site: TorusSite, bound: float, m: int) -> float:
    """max |v| over v with |h^t v| <= bound for all |t| <= m."""
    v = np.arange(site.size)
    ok = np.ones(len(v), dtype=bool)
    for t in range(-m, m + 1):
        ok &= site.distance(site.apply_h(v, t), 0) <= bound + 1e-15
    return float(site.distance(v[ok], 0).max())


def _pair_indices(n: int, max_pairs: int, rng) -> tuple[np.ndarray, np.ndarray]:
    total = n * (n - 1) // 2
    if total <= max_pairs:
        i, j = np.triu_indices(n, 1)
        return i, j
    i = rng.integers(0, n, max_pairs)
    j = (i + rng.integers(1, n, max_pairs)) % n
    return i, j


def _mixed_pairs(W: np.ndarray, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Half uniform pairs, half nearest neighbours under ``W``.

    Uniform pairs of an expansive sample are almost never close, so the
    nearest neighbours keep closeness hypotheses from being vacuous.
    """
    n = W.shape[0]
    if n < 2:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    half = count // 2
    i, j = _pair_indices(n, count - half, rng)
    i, j = i[: count - half], j[: count - half]
    a = rng.integers(0, n, half)
    masked = W[a].copy()
    masked[np.arange(half), a] = np.inf
    b = np.argmin(masked, axis=1)
    return np.concatenate([i, a]), np.concatenate([j, b])


# --------------------------------------------------------------------------
# certificates


def certify_expansive(sys, c: float, n_max: int = 4, seed: int = 0,
                      max_pairs: int = MAX_PAIRS) -> ExpansivityCertificate:
    """Certify that ``2c`` is below the separation of distinct points.

    Raises :class:`CounterexampleFound` with a witnessing pair when some
    distinct pair stays within 2c over the tested window.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if isinstance(sys, SftSystem):
        return _certify_sft(sys, c, n_max, seed, max_pairs)
    if isinstance(sys, SequenceSpace):
        return _certify_sequence(sys, c, n_max)
    if isinstance(sys, FiniteActionSystem):
        return _certify_finite(sys, c, n_max, seed, max_pairs)
    raise Inconclusive(f"no certification route for {type(sys).__name__}")


def _certify_sft(sys: SftSystem, c, n_max, seed, max_pairs):
    gap = sys.site.min_gap
    if not 2 * c < gap:
        raise CounterexampleFound(
            f"two configurations differing at one site by the gap {gap} stay within 2c")
    # exhaustive confirmation on the largest small box that fits the pair budget
    checked = 0
    for r in range(min(n_max, 3), 0, -1):
        try:
            pats = enumerate_patterns(sys, Box(r, sys.k), cap=4000)
        except Exception:
            continue
        if len(pats) * (len(pats) - 1) // 2 > max_pairs:
            continue
        i, j = _pair_indices(len(pats), max_pairs, np.random.default_rng(seed))
        d = np.zeros(len(i))
        for col in range(pats.shape[1]):
            np.maximum(d, sys.site.distance(pats[i, col], pats[j, col]), out=d)
        bad = np.flatnonzero(d <= 2 * c)
        if bad.size:
            b = bad[0]
            raise CounterexampleFound("distinct patterns within 2c", (pats[i[b]], pats[j[b]]))
        checked = len(i)
        break
    return ExpansivityCertificate(c, "analytic-SFT", n_max, gap, {"pairs_checked": checked})


def _certify_sequence(space: SequenceSpace, c, n_max):
    site = space.site
    if isinstance(site, AlphabetSite):
        sep, mode = site.min_gap, "analytic-SFT"
    elif space.cellwise and getattr(site, "auto", None) is not None:
        sep, v = _torus_separation(site, n_max)
        mode = "empirical"
        if not sep > 2 * c:
            raise CounterexampleFound(
                f"site point {v} stays within {sep:.4g} under h^t, |t| <= {n_max}", (v, 0))
        return ExpansivityCertificate(c, mode, n_max, sep, {"site_points": site.size})
    else:
        # only the quantization separates points here
        sep, mode = site.min_gap, "empirical"
    if not sep > 2 * c:
        raise CounterexampleFound(f"a single-site difference of {sep} stays within 2c")
    return ExpansivityCertificate(c, mode, n_max, sep, {})


def _certify_finite(sys: FiniteActionSystem, c, n_max, seed, max_pairs):
    if sys.n < 2:
        return ExpansivityCertificate(c, "empirical", n_max, math.inf, {"pairs_checked": 0})
    W = sys.window_matrix(Box(n_max, sys.k))
    i, j = _pair_indices(sys.n, max_pairs, np.random.default_rng(seed))
    vals = W[i, j]
    b = int(np.argmin(vals))
    if not vals[b] > 2 * c:
        raise CounterexampleFound(
            f"points {i[b]}, {j[b]} stay within {vals[b]:.4g} on the window", (int(i[b]), int(j[b])))
    return ExpansivityCertificate(c, "empirical", n_max, float(vals[b]),
                                  {"pairs_checked": int(len(i)), "seed": seed})


# --------------------------------------------------------------------------
# modulus of expansivity


def sequence_modulus_bound(space: SequenceSpace, c: float, m: int) -> float:
    """Upper bound for D(x, y) given d_{[-m,m]^k}(x, y) <= 2c.

    Every coordinate |a| <= m is within s(m) of its partner, where s(m) is the
    largest site point keeping |h^t v| <= 2c for |t| <= m; the rest is tail.
    """
    site = space.site
    if 2 * c < site.min_gap:
        s = 0.0
    elif space.cellwise and getattr(site, "auto", None) is not None:
        s = _torus_orbit_radius(site, 2 * c, m)
    else:
        s = min(2 * c, site.diameter)
    return s * (3 - 2.0 ** (1 - m)) + site.diameter * 2.0 ** (1 - m)


def modulus_of_expansivity(sys, cert: ExpansivityCertificate, eps: float,
                           m_max: int = 64, seed: int = 0, max_pairs: int = MAX_PAIRS) -> int:
    """Smallest m >= 1 with d_{[-m,m]^k}(x, y) <= 2c forcing d(x, y) < eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = cert.c
    if isinstance(sys, SftSystem):
        # the metric reads the origin, which the window already pins to 0 < eps
        return 1
    if isinstance(sys, SequenceSpace):
        for m in range(1, m_max + 1):
            if sequence_modulus_bound(sys, c, m) < eps:
                return m
        raise NotFoundWithin(f"no m <= {m_max} for eps={eps}")
    if isinstance(sys, FiniteActionSystem):
        i, j = _pair_indices(sys.n, max_pairs, np.random.default_rng(seed))
        d = sys.metric.dist[i, j]
        prev = None
        for m in range(1, m_max + 1):
            W = sys.window_matrix(Box(m, sys.k))[i, j]
            if np.all(d[W <= 2 * c] < eps):
                return m
            key = W.tobytes()
            if key == prev:
                break  # the window sup has stabilized
            prev = key
        raise NotFoundWithin(f"no m <= {m_max} for eps={eps}")
    raise Inconclusive(f"no modulus route for {type(sys).__name__}")


def modulus_table(sys, cert, eps_values, **kw) -> dict[float, int]:
    return {float(e): modulus_of_expansivity(sys, cert, e, **kw) for e in sorted(eps_values)}


# --------------------------------------------------------------------------
# boundary gap


def boundary_gap(sys, cert: ExpansivityCertificate, N_range, seed: int = 0,
                 max_pairs: int = MAX_PAIRS) -> BoundaryGap:
    """min over band pairs (c <= d_box <= 2c) of the boundary-window distance."""
    c = cert.c
    N_range = tuple(int(N) for N in N_range)
    delta, count = math.inf, 0
    for N in N_range:
        if N < 1:
            raise ValueError("N must be at least 1")
        if isinstance(sys, FiniteActionSystem):
            i, j = _pair_indices(sys.n, max_pairs, np.random.default_rng(seed))
            box = sys.window_matrix(Box(N, sys.k))[i, j]
            bd = sys.window_matrix(Boundary(N, sys.k))[i, j]
        elif isinstance(sys, SftSystem):
            pats = enumerate_patterns(sys, Box(N, sys.k), cap=4000)
            i, j = _pair_indices(len(pats), max_pairs, np.random.default_rng(seed))
            cell = np.stack([sys.site.distance(pats[i, t], pats[j, t])
                             for t in range(pats.shape[1])], axis=1)
            from .lattice_metric import window_points
            pts = sorted(window_points(Box(N, sys.k)), key=lambda p: tuple(reversed(p)))
            on_bd = np.array([max(abs(x) for x in p) == N for p in pts])
            box, bd = cell.max(axis=1), cell[:, on_bd].max(axis=1)
        else:
            raise Inconclusive(f"no boundary scan for {type(sys).__name__}")
        band = (box >= c) & (box <= 2 * c)
        count += int(band.sum())
        if band.any():
            delta = min(delta, float(bd[band].min()))
    if count and delta <= 0:
        raise GapCollapse("a band pair agrees on the whole boundary")
    return BoundaryGap(None if count == 0 else delta, N_range, count)


# --------------------------------------------------------------------------
# coding constant


def _r_neighbourhood(R: FiniteActionSystem) -> list[np.ndarray]:
    r = R.k
    return [R.perm(u) for u in itertools.product((-1, 0, 1), repeat=r)]


def coding_constant(T, R: FiniteActionSystem, cert: ExpansivityCertificate,
                    sample: FiniteActionSystem, N_max: int = 5, pairs: int = 10**4,
                    seed: int = 0, lipschitz: float | None = None) -> CodingConstant:
    """Window inflation K with d^T_{[-KN,KN]^k} <= 2c forcing d^R_{[-N,N]^(k-1)} <= 2c.

    ``T`` is the system used for the modulus (a :class:`SequenceSpace` or the
    sample itself); ``R`` acts on the same sample points.  ``lipschitz``
    bounds the R-generators' Lipschitz constant when known analytically.
    """
    c = cert.c
    if R.n != sample.n:
        raise ValueError("R and the sample live on different points")
    for a in R.gens:
        for b in sample.gens:
            if not np.array_equal(a[b], b[a]):
                raise ValueError("R does not commute with T")
    d = sample.metric.dist
    rng = np.random.default_rng(seed)
    i, j = _mixed_pairs(sample.window_matrix(Box(1, sample.k)), pairs, rng)
    ident = np.arange(sample.n)
    if all(np.array_equal(g, ident) for g in R.gens):
        eps, K, eps_emp = math.inf, 1, math.inf
    else:
        moved = np.zeros_like(d)
        for p in _r_neighbourhood(R):
            np.maximum(moved, d[np.ix_(p, p)], out=moved)
        far = moved > 2 * c
        eps_emp = float(d[far].min()) if far.any() else math.inf
        eps = eps_emp if lipschitz is None else 2 * c / lipschitz
        if eps > eps_emp:
            raise AssertionError("analytic continuity modulus contradicted by the sample")
        K = modulus_of_expansivity(T, cert, eps)
    violations, tested = 0, 0
    for N in range(1, N_max + 1):
        tw = sample.window_matrix(Box(K * N, sample.k))[i, j]
        rw = R.window_matrix(Box(N, R.k))[i, j]
        hyp = tw <= 2 * c
        tested += int(hyp.sum())
        violations += int(np.sum(hyp & (rw > 2 * c)))
    ev = {"pairs": int(len(i)), "hypothesis_hits": tested, "violations": violations,
          "eps_empirical": eps_emp, "N_max": N_max, "seed": seed}
    if violations:
        raise AssertionError(f"coding implication failed on {violations} pairs")
    return CodingConstant(K, eps, ev)


# --------------------------------------------------------------------------
# width-dimension bound through boundary covers


def ball_cover(m: MetricMatrix, radius: float) -> Cover:
    """Open balls of the given radius around a maximal separated set."""
    centers = greedy_separated(m, radius)
    return Cover.of([np.flatnonzero(m.dist[c] < radius) for c in centers], m.n)


def widim_upper_via_boundary(sample: FiniteActionSystem, cert: ExpansivityCertificate,
                             N: int, delta: float | None = None) -> WidimBound:
    """Order of a 2c-mesh cover for d^T_{[-N,N]^k}, built from boundary data.

    A base cover of mesh < delta is pulled back along every boundary group
    element and joined; each element is then split into chains of
    d_{[-N,N]^k}-steps < c.  The mesh of the result is asserted <= 2c.
    """
    c, k = cert.c, sample.k
    if delta is None:
        gap = boundary_gap(sample, cert, [N])
        delta = gap.delta if gap.delta is not None else 2 * sample.metric.diameter() + 1
    m = sample.metric
    base = ball_cover(m, delta / 2) if sample.n else Cover((), 0)
    if mesh(base, m) >= delta:
        raise MeshViolation("base cover mesh is not below delta")
    L = len(base.sets)
    joined = None
    for p in sample.window_perms(Boundary(N, k)):
        # x lies in T^{-u} U iff T^u x lies in U
        pulled = Cover(tuple(frozenset(np.flatnonzero(np.isin(p, list(s))).tolist())
                             for s in base.sets), sample.n)
        joined = pulled if joined is None else cover_join(joined, pulled)
    W = sample.window_matrix(Box(N, k))
    wm = MetricMatrix(W)
    split = chain_component_split(joined, wm, c)
    mm = mesh(split, wm)
    if mm > 2 * c:
        raise MeshViolation(f"chain-split cover has mesh {mm} > 2c")
    bound = 2**k * (2 * N + 1) ** (k - 1) * L
    order = cover_order(split) if sample.n else 0
    return WidimBound(order, bound, L, mm, len(split.sets))
