"""Entropy and mean dimension estimates on finite grids.

Every limit is reported as an interval computed from a recorded finite
grid of windows and scales; nothing is extrapolated past the data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .lattice_metric import (
    Box,
    CapExceeded,
    CountBracket,
    MetricMatrix,
    covering_number_bracket,
    packing_number,
)
from .systems import (
    PATTERN_CAP,
    ArithmeticUnion,
    ExplicitWindowFunction,
    FiniteActionSystem,
    FiniteSet,
    ProductShiftSystem,
    RestrictedSystem,
    SequenceSpace,
    SftSystem,
    ToralAutomorphism,
    enumerate_patterns,
    periodic_weights,
)

DEFAULT_LADDER = tuple(2.0**-j for j in range(2, 9))


class WitnessViolation(AssertionError):
    """A sampled pair got closer under an embedding witness."""


@dataclass(frozen=True)
class DimensionEstimate:
    kind: str
    lb: float
    ub: float
    witness: str = ""
    grid: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.lb > self.ub + 1e-12:
            raise ValueError(f"{self.kind}: lb {self.lb} > ub {self.ub}")

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lb - tol <= value <= self.ub + tol


def _log(count: int) -> float:
    # math.log takes arbitrarily large ints
    return math.log(count) if count > 1 else 0.0


# --------------------------------------------------------------------------
# Scale entropy


@dataclass
class EntropyTable:
    """Covering brackets for ``#(X, d_[-N,N]^k, eps)`` on a grid."""

    k: int
    Ns: tuple
    ladder: tuple
    cells: dict

    def normalized(self, N: int, eps: float) -> tuple[float, float]:
        b = self.cells[(N, eps)]
        vol = (2 * N + 1) ** self.k
        return _log(b.lb) / vol, _log(b.ub) / vol

    def running_inf(self, eps: float) -> list[float]:
        """Running minimum of the normalized upper values along N."""
        out, best = [], math.inf
        for N in self.Ns:
            best = min(best, self.normalized(N, eps)[1])
            out.append(best)
        return out

    def S(self, eps: float) -> tuple[float, float]:
        vals = [self.normalized(N, eps) for N in self.Ns]
        return min(v[0] for v in vals), min(v[1] for v in vals)


def _site_matrix(site) -> MetricMatrix:
    a = np.arange(site.size)
    return MetricMatrix(site.distance(a[:, None], a[None, :]))


def _pattern_bracket(sys: SftSystem, N: int, eps: float, cap: int) -> CountBracket:
    site = sys.site
    w = Box(N, sys.k)
    if eps > site.diameter:
        return CountBracket(1, 1, True)
    if not sys.shape:
        # a product of site covers (separated sets) covers (separates) in the sup metric
        cells = w.size()
        if eps <= site.min_gap:
            n = site.size**cells
            return CountBracket(n, n, True)
        sm = _site_matrix(site)
        cov = covering_number_bracket(sm, eps)
        pack = packing_number(sm, eps)
        return CountBracket(pack**cells, cov.ub**cells, cov.exact and pack == cov.ub)
    if eps <= site.min_gap:
        n = enumerate_patterns(sys, w, count_only=True)
        return CountBracket(n, n, True)
    pats = enumerate_patterns(sys, w, cap=cap)
    if len(pats) ** 2 > cap:
        raise CapExceeded(f"{len(pats)} patterns is too many for a distance table")
    d = np.zeros((len(pats), len(pats)))
    for c in range(pats.shape[1]):
        np.maximum(d, site.distance(pats[:, c][:, None], pats[:, c][None, :]), out=d)
    return covering_number_bracket(MetricMatrix(d), eps)


def scale_entropy_table(sys, ladder: Sequence[float] = DEFAULT_LADDER,
                        Ns: Sequence[int] = (1, 2, 3), cap: int = PATTERN_CAP) -> EntropyTable:
    """Covering brackets on every (N, eps) cell of the grid.

    ``sys`` is a subshift (patterns read through the site metric) or a
    finite invariant sample with its own metric.
    """
    cells = {}
    for N in Ns:
        if isinstance(sys, FiniteActionSystem):
            W = MetricMatrix(sys.window_matrix(Box(N, sys.k)))
            for eps in ladder:
                cells[(N, eps)] = covering_number_bracket(W, eps)
        elif isinstance(sys, SftSystem):
            for eps in ladder:
                cells[(N, eps)] = _pattern_bracket(sys, N, eps, cap)
        else:
            raise TypeError(f"no entropy table for {type(sys).__name__}")
    return EntropyTable(sys.k, tuple(Ns), tuple(ladder), cells)


def topological_entropy_estimate(table: EntropyTable) -> DimensionEstimate:
    if not table.cells:
        raise ValueError("empty table")
    lb = max(table.S(e)[0] for e in table.ladder)
    ub = table.S(min(table.ladder))[1]
    return DimensionEstimate("topological entropy", lb, max(lb, ub),
                             "pattern counts / covers", {"N": table.Ns, "eps": table.ladder})


def metric_mean_dim_estimate(table: EntropyTable) -> DimensionEstimate:
    """Slope of S against log(1/eps) between the two finest scales.

    When the slope converges the ratio S(eps)/log(1/eps) has the same
    limit; the ratio at the finest scale is kept in the grid record.
    """
    eps = sorted(set(table.ladder))
    if len(eps) < 3 or eps[-1] / eps[0] < 4:
        raise ValueError("ladder needs three scales spanning two octaves")
    e1, e2 = eps[0], eps[1]
    s1, s2 = table.S(e1), table.S(e2)
    run = math.log(1 / e1) - math.log(1 / e2)
    lo = max(0.0, (s1[0] - s2[1]) / run)
    hi = max(lo, (s1[1] - s2[0]) / run)
    ratio = (s1[0] / math.log(1 / e1), s1[1] / math.log(1 / e1))
    return DimensionEstimate("metric mean dimension", lo, hi, "slope of S between finest scales",
                             {"eps": (e1, e2), "ratio": ratio, "N": table.Ns})


# --------------------------------------------------------------------------
# Embedding lower bounds


@dataclass
class EmbeddingWitness:
    """A map from free site coordinates into the system, read on a window.

    ``build`` takes an integer array ``(P, n_free)`` of site points and
    returns ``(P, window_cells)``: the site value seen at each window element.
    """

    site: object
    n_free: int
    window_cells: int
    build: Callable
    description: str


@dataclass(frozen=True)
class EmbeddingCertificate:
    free: int
    window: int
    per_site_dim: int
    description: str
    pairs_checked: int
    min_ratio: float


def _sample_inputs(site, n_free, pairs, rng):
    x = rng.integers(0, site.size, (pairs, n_free))
    y = rng.integers(0, site.size, (pairs, n_free))
    # half the pairs differ in one coordinate by a neighbouring site value
    half = pairs // 2
    y[:half] = x[:half]
    j = rng.integers(0, n_free, half)
    y[np.arange(half), j] = (x[np.arange(half), j] + 1) % site.size
    return x, y


def embedding_lower_bound(witness: EmbeddingWitness, per_site_dim: int,
                          pairs: int = 1000, seed: int = 0):
    """``per_site_dim * free / window`` after checking the witness never contracts."""
    if witness.n_free == 0:
        cert = EmbeddingCertificate(0, witness.window_cells, per_site_dim,
                                    witness.description, 0, math.inf)
        return DimensionEstimate("mdim lower", 0.0, 0.0, witness.description), cert
    rng = np.random.default_rng(seed)
    x, y = _sample_inputs(witness.site, witness.n_free, pairs, rng)
    d_in = witness.site.distance(x, y).max(axis=1)
    d_out = witness.site.distance(witness.build(x), witness.build(y)).max(axis=1)
    bad = np.flatnonzero(d_out < d_in - 1e-12)
    if bad.size:
        i = int(bad[0])
        raise WitnessViolation(f"pair {i}: input {d_in[i]} > output {d_out[i]}")
    moved = d_in > 0
    ratio = float((d_out[moved] / d_in[moved]).min()) if moved.any() else math.inf
    value = per_site_dim * witness.n_free / witness.window_cells
    cert = EmbeddingCertificate(witness.n_free, witness.window_cells, per_site_dim,
                                witness.description, pairs, ratio)
    return DimensionEstimate("mdim lower", value, value, witness.description), cert


def free_cell_witness(site, window_cells: int, free: Sequence[int], background: int = 0):
    free = np.asarray(free, dtype=np.int64)

    def build(vals):
        out = np.full((len(vals), window_cells), background, dtype=np.int64)
        out[:, free] = vals
        return out

    return EmbeddingWitness(site, len(free), window_cells, build,
                            f"{len(free)} free cells, background {background}")


def linear_sft_extension(q: int, row: np.ndarray) -> np.ndarray:
    """A legal square pattern for the three-cell linear rule with a given middle row.

    Rows above follow the rule forward; rows below are solved from the
    right edge using the inverse of 3 mod q.
    """
    if math.gcd(3, q) != 1:
        raise ValueError("3 must be invertible mod q")
    inv3 = pow(3, -1, q)
    L = len(row)
    N = L // 2
    vals = np.zeros((L, L), dtype=np.int64)  # vals[m, n], n index of the row
    vals[:, N] = np.asarray(row) % q
    for n in range(N, L - 1):
        vals[:-1, n + 1] = (-3 * vals[:-1, n] - vals[1:, n]) % q
    for n in range(N, 0, -1):
        for m in range(L - 2, -1, -1):
            vals[m, n - 1] = (-inv3 * (vals[m + 1, n - 1] + vals[m, n])) % q
    return vals


def linear_sft_row_witness(sys: SftSystem, N: int, check_legal: int = 20):
    """Row Z x {0} of the linear rule is free; read on [-N, N] x {0}."""
    q = sys.site.size
    L = 2 * N + 1
    from .systems import ConfigWindow

    def build(vals):
        out = np.empty_like(vals)
        for i, row in enumerate(vals):
            sq = linear_sft_extension(q, row)
            if i < check_legal and not sys.is_legal(ConfigWindow(sq, N)):
                raise WitnessViolation("extension breaks the local rule")
            out[i] = sq[:, N]
        return out

    return EmbeddingWitness(sys.site, L, L, build, f"free row of length {L}, q={q}")


def restricted_column_witness(Y: RestrictedSystem, N: int):
    """Free columns (Lambda + l) in [-N, N] for the best offset l, A elsewhere."""
    if not isinstance(Y.base, ProductShiftSystem):
        raise TypeError("needs a product base with a finite site")
    cols = list(range(-N, N + 1))
    best = max((tuple(i for i, c in enumerate(cols) if (c - l) in Y.Lambda)
                for l in Y.Lambda.offsets(-N, N)), key=len)
    w = free_cell_witness(Y.base.site, len(cols), best, Y.A[0])
    w.description = f"{len(best)} free columns of {len(cols)}, background {Y.A[0]}"
    return w


# --------------------------------------------------------------------------
# Banach density


@dataclass(frozen=True)
class DensityValue:
    lb: Fraction | float
    ub: Fraction | float
    exact: bool

    @property
    def value(self):
        if not self.exact:
            raise ValueError("density is only bracketed")
        return self.lb


def banach_density(Lam, Ns: Sequence[int] = (8, 16, 32, 64), offsets: int = 256) -> DensityValue:
    """Upper Banach density: exact for periodic or finite index sets."""
    if isinstance(Lam, FiniteSet):
        return DensityValue(Fraction(0), Fraction(0), True)
    if isinstance(Lam, ArithmeticUnion):
        d = Fraction(len(Lam.residues), Lam.period)
        return DensityValue(d, d, True)
    if isinstance(Lam, ExplicitWindowFunction) and Lam.period is not None:
        d = Fraction(sum(1 for r in range(Lam.period) if r in Lam), Lam.period)
        return DensityValue(d, d, True)
    # sup over sampled offsets only; the subadditive sequence s(N)/N decreases to D
    ratios = []
    for N in Ns:
        s = max(sum(1 for m in range(n, n + N) if m in Lam) for n in range(-offsets, offsets))
        ratios.append(s / N)
    return DensityValue(ratios[-1], min(ratios), False)


# --------------------------------------------------------------------------
# The restricted system: direct and column-projection entropies


def restricted_box_entropy(Y: RestrictedSystem, Ns: Sequence[int]) -> list[float]:
    """``log #patterns on [-N,N]^2 / (2N+1)^2`` for each N, from exact counts."""
    return [_log(Y.box_count(N)) / (2 * N + 1) ** 2 for N in Ns]


def pavlov_projection_entropy(Y: RestrictedSystem, Ns: Sequence[int],
                              Ts: Sequence[int] = (16, 32, 64, 128)) -> list[DimensionEstimate]:
    """``(1/N) h(pi_N(Y), h_N)`` on columns 1..N, bracketed over time windows.

    With F column patterns and a patterns per A-column, the count on W
    columns lies between F^g and |supports| F^g a^W, g the largest support,
    so log F^g/(2T+1) is pinned from both sides.
    """
    out = []
    for N in Ns:
        cols = list(range(1, N + 1))
        nsup = len(Y.generating_supports(cols))
        ub, lb = math.inf, 0.0
        for T in Ts:
            c = Y.pattern_count(cols, T)
            a = Y.column_counts(T)[1]
            ub = min(ub, _log(c) / (2 * T + 1))
            lb = max(lb, (_log(c) - math.log(nsup) - N * _log(a)) / (2 * T + 1))
        out.append(DimensionEstimate("column entropy / N", lb / N, max(lb, ub) / N,
                                     f"{nsup} supports", {"N": N, "T": tuple(Ts)}))
    return out


@dataclass
class ProductEntropyReport:
    ok: bool
    target: float
    direct: list
    pavlov: list
    detail: str


def product_entropy_check(Y: RestrictedSystem, h_site: float, Ns: Sequence[int],
                          rel_tol: float = 0.06) -> ProductEntropyReport:
    """Both upper estimates sit above h * D and approach it.

    The box estimate is subadditive and the column estimate is the limit
    of a subadditive sequence, so both decrease to the target; they agree
    when their gap is within the larger distance to the target.
    """
    D = banach_density(Y.Lambda)
    target = h_site * float(D.ub)
    direct = restricted_box_entropy(Y, Ns)
    pav = pavlov_projection_entropy(Y, Ns)
    tol = 1e-12
    ok = all(v >= target - tol for v in direct)
    ok &= all(e.ub >= target - tol and e.lb <= e.ub for e in pav)
    final = direct[-1]
    ok &= final <= target * (1 + rel_tol) + tol
    for v, e in zip(direct, pav):
        width = max(v - target, e.ub - target) + tol
        ok &= abs(v - e.ub) <= width
    detail = f"direct {final:.5f}, column {pav[-1].ub:.5f}, target {target:.5f}"
    return ProductEntropyReport(bool(ok), target, direct, pav, detail)


# --------------------------------------------------------------------------
# Hyperbolic toral automorphisms


def toral_entropy_bracket(M: ToralAutomorphism, eps: float, N: int) -> DimensionEstimate:
    """Bracket on log of the expanding eigenvalue from two-sided volume counts.

    A set of d_[-N,N]-diameter < eps has area at most that of the norm ball
    of radius eps/2 (isodiametric inequality in the Bowen norm), and that
    ball sits in a parallelogram along the eigenlines; a square grid cover
    with per-step expansion at most the operator norm gives the upper count.
    The eps-dependence cancels in log(count_N / count_0) / (2N).
    """
    A = M.matrix.astype(float)
    if A.shape != (2, 2):
        raise ValueError("only 2x2 automorphisms are supported")
    if not M.is_hyperbolic():
        raise ValueError("matrix is not hyperbolic")
    if N < 1 or not 0 < eps < 0.5:
        raise ValueError("need N >= 1 and 0 < eps < 1/2")
    w, V = np.linalg.eig(A)
    w, V = w.real, V.real
    lam = float(np.max(np.abs(w)))
    vu, vs = V[:, np.argmax(np.abs(w))], V[:, np.argmin(np.abs(w))]
    sin = abs(vu[0] * vs[1] - vu[1] * vs[0]) / (np.linalg.norm(vu) * np.linalg.norm(vs))
    op = max(np.linalg.norm(A, 2), np.linalg.norm(np.linalg.inv(A), 2))
    log_lb_N = math.log(sin) + 2 * N * math.log(lam) - 2 * math.log(eps)
    log_ub_N = 2 * math.log(math.ceil(math.sqrt(2) * op**N / eps))
    log_lb_0 = math.log(4 / (math.pi * eps**2))
    log_ub_0 = 2 * math.log(math.ceil(math.sqrt(2) / eps))
    lb = (log_lb_N - log_ub_0) / (2 * N)
    ub = (log_ub_N - log_lb_0) / (2 * N)
    return DimensionEstimate("topological entropy", lb, ub, "volume counts",
                             {"N": N, "eps": eps, "lambda": lam, "sin": sin, "op": op})


# --------------------------------------------------------------------------
# Directional mean dimension


@dataclass(frozen=True)
class DirectionalWindowSpec:
    direction: tuple
    r: float
    N: int

    def __post_init__(self):
        p, q = self.direction
        if (p, q) == (0, 0) or math.gcd(p, q) != 1:
            raise ValueError("direction must be a primitive integer vector")
        if self.r <= 1 / math.sqrt(2):
            raise ValueError("thickness must exceed 1/sqrt(2)")

    def cells(self) -> list[tuple[int, int]]:
        """Lattice points within distance < r of the line, inside (-N, N)^2."""
        p, q = self.direction
        h = math.hypot(p, q)
        rng = range(-self.N + 1, self.N)
        return [(m, n) for m in rng for n in rng if abs(q * m - p * n) / h < self.r]

    def length(self) -> float:
        """Length of the line segment inside (-N, N)^2."""
        p, q = self.direction
        return 2 * self.N * math.hypot(p, q) / max(abs(p), abs(q))


def directional_mdim_estimate(sys, spec: DirectionalWindowSpec, pairs: int = 1000,
                              seed: int = 0) -> DimensionEstimate:
    """Free columns of the directional window over its length.

    The witness sets column a to h^(-t_a)(w_a), with (a, t_a) the window
    cell of smallest |t| in that column, so the reading at that cell is w_a.
    The upper value is the dimension of the projection onto those columns.
    """
    cells = spec.cells()
    length = spec.length()
    if not isinstance(sys, ProductShiftSystem):
        if getattr(getattr(sys, "site", None), "size", 1) == 1:
            return DimensionEstimate("directional mdim", 0.0, 0.0, "one point")
        raise TypeError("directional estimates need a product shift system")
    site = sys.site
    cols = sorted({a for a, _ in cells})
    t_of = {a: min((t for b, t in cells if b == a), key=abs) for a in cols}
    pos = {a: i for i, a in enumerate(cols)}
    reads = [(pos[a], t) for a, t in cells]

    def build(vals):
        x = np.stack([site.apply_h(vals[:, pos[a]], -t_of[a]) for a in cols], axis=1)
        return np.stack([site.apply_h(x[:, i], t) for i, t in reads], axis=1)

    wit = EmbeddingWitness(site, len(cols), len(cells), build,
                           f"{len(cols)} columns along {spec.direction}")
    est, cert = embedding_lower_bound(wit, site.dimension, pairs, seed)
    value = site.dimension * len(cols) / length
    return DimensionEstimate("directional mdim", value, value, wit.description,
                             {"cells": len(cells), "length": length, "r": spec.r,
                              "N": spec.N, "pairs": cert.pairs_checked})


# --------------------------------------------------------------------------
# Inequality sentinels


@dataclass
class InequalityReport:
    ok: bool
    lhs: float
    rhs: float
    detail: str = ""


def lw_inequality_check(lower: DimensionEstimate, metric: DimensionEstimate,
                        tol: float = 1e-9) -> InequalityReport:
    """Embedding lower bound must not exceed the metric mean dimension estimate."""
    return InequalityReport(lower.lb <= metric.ub + tol, lower.lb, metric.ub,
                            f"{lower.witness} vs {metric.witness}")


@dataclass(frozen=True)
class CellwiseRule:
    """A shift-commuting map given by a local rule of some radius.

    ``fn`` maps an array ``(P, 2*radius+1)`` of site values to ``(P,)``.
    ``site_lipschitz`` bounds d(fn(a), fn(b)) / max d(a_i, b_i) at small scales.
    """

    radius: int
    fn: Callable
    site_lipschitz: float
    name: str = "rule"
    bijective: bool = False

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Apply to rows of spatially periodic configurations."""
        rho = self.radius
        nb = np.stack([np.roll(X, -i, axis=1) for i in range(-rho, rho + 1)], axis=-1)
        return self.fn(nb.reshape(-1, 2 * rho + 1)).reshape(X.shape)


def _periodic_D(site, X, Y, w):
    return (site.distance(X, Y) * w).sum(axis=1)


def _spacetime_count(site, rule: CellwiseRule, N: int, n: int, cap: int) -> int:
    """Distinct space-time patterns on [-N, N] x {0..n}."""
    rho = rule.radius
    if rho == 0 and rule.bijective:
        # each column's time series is fixed by its first value
        return site.size ** (2 * N + 1)
    L = 2 * N + 1 + 2 * rho * n
    if site.size**L > cap:
        raise CapExceeded(f"{site.size}^{L} initial rows")
    import itertools

    rows = np.array(list(itertools.product(range(site.size), repeat=L)), dtype=np.int64)
    layers = [rows[:, rho * n: rho * n + 2 * N + 1]]
    cur = rows
    for _ in range(n):
        nb = np.stack([cur[:, i:i + cur.shape[1] - 2 * rho] for i in range(2 * rho + 1)], axis=-1)
        cur = rule.fn(nb.reshape(-1, 2 * rho + 1)).reshape(len(rows), -1)
        off = (cur.shape[1] - (2 * N + 1)) // 2
        layers.append(cur[:, off: off + 2 * N + 1])
    diag = np.concatenate(layers, axis=1)
    return len(np.unique(diag, axis=0))


def lipschitz_endo_check(space: SequenceSpace, rule: CellwiseRule,
                         grid: Sequence[tuple[int, int]] = ((1, 1), (2, 2), (3, 3)),
                         p: int = 12, pairs: int = 2000, ladder=(2.0**-4, 2.0**-6, 2.0**-8),
                         seed: int = 0, cap: int = 2**16, tol: float = 1e-9) -> dict:
    """Space-time entropy of (shift, rule) against log+ L times metric mean dimension.

    L is bracketed by sampled quotients on periodic configurations (lower)
    and the rule's neighbourhood weights times its site constant (upper).
    On a finite site the space-time diagram is fixed by one row, so the
    box counts grow with the row alone and the entropy lower value is 0.
    """
    site = space.site
    rng = np.random.default_rng(seed)
    X = rng.integers(0, site.size, (pairs, p))
    fx = rule.apply(X)
    if not np.array_equal(rule.apply(np.roll(X, -1, axis=1)), np.roll(fx, -1, axis=1)):
        raise ValueError("rule does not commute with the shift")
    # one coordinate moved to a neighbouring site point, at a random position
    Y = X.copy()
    j = rng.integers(0, p, pairs)
    step = rng.integers(1, min(4, site.size), pairs)
    Y[np.arange(pairs), j] = (X[np.arange(pairs), j] + step) % site.size
    if hasattr(site, "torus") and site.torus.r > 1:
        # move along a random small integer vector instead
        c = site.torus.coords(X[np.arange(pairs), j])
        v = rng.integers(-3, 4, c.shape)
        v[np.all(v == 0, axis=1), 0] = 1
        Y[np.arange(pairs), j] = site.torus.index(c + v)
    w = periodic_weights(p)
    d0 = _periodic_D(site, X, Y, w)
    d1 = _periodic_D(site, fx, rule.apply(Y), w)
    L_lb = 1.0
    used = d0 > 0
    quot = np.where(used, d1 / np.where(used, d0, 1), 0)
    eps_used = None
    for e in sorted(ladder):
        sel = used & (d0 < e)
        if sel.any():
            L_lb, eps_used = float(quot[sel].max()), e
            break
    L_ub = sum(2.0 ** abs(i) for i in range(-rule.radius, rule.radius + 1)) * rule.site_lipschitz
    if rule.radius == 0:
        L_ub = rule.site_lipschitz
    L_lb = min(L_lb, L_ub)
    ub_h = math.inf
    counts = {}
    for N, n in grid:
        cnt = _spacetime_count(site, rule, N, n, cap)
        counts[(N, n)] = cnt
        ub_h = min(ub_h, _log(cnt) / ((n + 1) * (2 * N + 1)))
    h = DimensionEstimate("space-time entropy", 0.0, ub_h, "row-determined counts", counts)
    # scales kept above the quantization of the site
    fine = min(8 * site.min_gap, site.diameter / 2)
    table = scale_entropy_table(SftSystem(1, site), ladder=(4 * fine, 2 * fine, fine), Ns=(1, 2))
    mdim = metric_mean_dim_estimate(table)
    rhs = max(0.0, math.log(L_ub)) * mdim.ub
    return {"ok": h.lb <= rhs + tol, "entropy": h, "L": (L_lb, L_ub), "eps": eps_used,
            "mdim": mdim, "rhs": rhs}
