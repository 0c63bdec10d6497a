"""Quasi-metrics with the doubled-max triangle law and their chain-infimum metrics.

A quasi-metric here is a symmetric table rho with zero exactly on the
diagonal and ``rho(i,k) <= 2 max(rho(i,j), rho(j,k))``.  The chain infimum
``D`` is a genuine metric squeezed between rho/4 and rho.  The dynamical
quasi-metric ``alpha^-n(x,y)`` of an expansive action is built on finite
invariant samples, where every quantity is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice_metric import Box, MetricMatrix, covering_number_bracket
from .systems import FiniteActionSystem, SftSystem

SAMPLE_CAP = 512
NEVER = -1  # exponent sentinel for equal points (rho = 0)


class QuasiAxiomViolation(ValueError):
    pass


class Unresolved(RuntimeError):
    """Distinct points that no group element within the search window separates."""


@dataclass
class QuasiMetricMatrix:
    """Symmetric table of Fractions (exact) or floats (with ``tol`` slack)."""

    rho: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=object if self.exact_input(self.rho) else float)

    @staticmethod
    def exact_input(rho) -> bool:
        arr = np.asarray(rho, dtype=object)
        return arr.size > 0 and all(isinstance(v, (Fraction, int)) for v in arr.ravel())

    @property
    def exact(self) -> bool:
        return self.rho.dtype == object

    @property
    def n(self) -> int:
        return self.rho.shape[0]


@dataclass(frozen=True)
class QuasiCheck:
    ok: bool
    violation: tuple | None = None
    reason: str = ""


@dataclass
class FrinkMetric:
    D: np.ndarray
    source: QuasiMetricMatrix

    def metric(self) -> MetricMatrix:
        return MetricMatrix(np.asarray(self.D, dtype=float))


@dataclass(frozen=True)
class DynamicalQuasiParams:
    c: float
    l: int
    alpha: float
    n_max: int

    def __post_init__(self):
        if not (self.alpha > 1 and self.l >= 1 and self.alpha**self.l < 2):
            raise ValueError("need alpha > 1, l >= 1 and alpha^l < 2")


@dataclass
class DynamicalRho:
    """``rho = alpha^-n`` stored through its integer exponent table."""

    exponent: np.ndarray
    params: DynamicalQuasiParams
    quasi: QuasiMetricMatrix = field(init=False)

    def __post_init__(self):
        e = self.exponent
        rho = np.where(e == NEVER, 0.0, self.params.alpha ** (-e.astype(float)))
        self.quasi = QuasiMetricMatrix(rho)


# --------------------------------------------------------------------------
# checks


def verify_quasi_metric(q: QuasiMetricMatrix) -> QuasiCheck:
    """Check symmetry, zero-iff-diagonal and the doubled-max law on every triple."""
    rho, n = q.rho, q.n
    t = 0 if q.exact else q.tol
    for i in range(n):
        if rho[i, i] != 0:
            return QuasiCheck(False, (i, i), "nonzero diagonal")
        for j in range(i + 1, n):
            if abs(rho[i, j] - rho[j, i]) > t:
                return QuasiCheck(False, (i, j), "asymmetric")
            if rho[i, j] <= 0:
                return QuasiCheck(False, (i, j), "zero or negative off the diagonal")
    if q.exact:
        for j in range(n):
            for i in range(n):
                for k in range(n):
                    if rho[i, k] > 2 * max(rho[i, j], rho[j, k]):
                        return QuasiCheck(False, (i, j, k), "doubled-max law fails")
        return QuasiCheck(True)
    r = rho.astype(float)
    for j in range(n):
        bound = 2 * np.maximum(r[:, j, None], r[None, j, :])
        bad = np.argwhere(r > bound + t)
        if bad.size:
            i, k = bad[0]
            return QuasiCheck(False, (int(i), j, int(k)), "doubled-max law fails")
    return QuasiCheck(True)


def verify_exponents(rho: DynamicalRho) -> QuasiCheck:
    """Exact doubled-max law for alpha^-n with alpha = 2^(1/(l+1)).

    ``alpha^-a <= 2 alpha^-b`` is ``b <= a + l + 1`` for integer exponents.
    """
    e = rho.exponent.astype(np.int64)
    n = e.shape[0]
    if not np.array_equal(e, e.T):
        return QuasiCheck(False, None, "asymmetric")
    off = ~np.eye(n, dtype=bool)
    if np.any(e[off] == NEVER) or np.any(np.diag(e) != NEVER):
        return QuasiCheck(False, None, "zero pattern differs from the diagonal")
    slack = rho.params.l + 1
    big = np.where(e == NEVER, np.iinfo(np.int64).max // 4, e)
    for j in range(n):
        # max(rho_ij, rho_jk) corresponds to the smaller exponent
        m = np.minimum(big[:, j, None], big[None, j, :])
        bad = off & (m > big + slack)
        bad[j, :] = False
        bad[:, j] = False
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return QuasiCheck(False, (int(i), j, int(k)), "doubled-max law fails")
    return QuasiCheck(True)


def chain_inequality_check(q: QuasiMetricMatrix, chain: Sequence[int]) -> QuasiCheck:
    """rho(x0,xn) <= 2 rho(x0,x1) + 4 (middle links) + 2 rho(x_{n-1},xn), n >= 2."""
    if len(chain) < 3:
        raise ValueError("chain needs at least three points")
    r = q.rho
    links = [r[a, b] for a, b in zip(chain, chain[1:])]
    rhs = 2 * links[0] + 4 * sum(links[1:-1]) + 2 * links[-1]
    lhs = r[chain[0], chain[-1]]
    t = 0 if q.exact else q.tol
    if lhs > rhs + t:
        return QuasiCheck(False, tuple(chain), f"{lhs} > {rhs}")
    return QuasiCheck(True)


# --------------------------------------------------------------------------
# metrization


def _exact_floyd_warshall(rho: np.ndarray) -> np.ndarray:
    n = rho.shape[0]
    D = [[rho[i, j] for j in range(n)] for i in range(n)]
    for m in range(n):
        Dm = D[m]
        for i in range(n):
            dim = D[i][m]
            Di = D[i]
            for j in range(n):
                v = dim + Dm[j]
                if v < Di[j]:
                    Di[j] = v
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = D[i][j]
    return out


def frink_metrize(q: QuasiMetricMatrix, check: bool = True) -> FrinkMetric:
    """Chain-infimum metric: the shortest path in the complete graph weighted by rho."""
    if q.n > SAMPLE_CAP:
        raise ValueError(f"sample larger than {SAMPLE_CAP} points")
    if check:
        res = verify_quasi_metric(q)
        if not res.ok:
            raise QuasiAxiomViolation(f"{res.reason} at {res.violation}")
    if q.exact:
        D = _exact_floyd_warshall(q.rho)
    else:
        from scipy.sparse.csgraph import floyd_warshall

        D = floyd_warshall(np.asarray(q.rho, dtype=float), directed=False)
    fm = FrinkMetric(D, q)
    bad = sandwich_violations(fm)
    if bad:
        raise AssertionError(f"sandwich rho/4 <= D <= rho fails at {bad[0]}")
    return fm


def sandwich_violations(fm: FrinkMetric) -> list[tuple[int, int]]:
    rho, D = fm.source.rho, fm.D
    t = 0 if fm.source.exact else fm.source.tol
    out = []
    for i in range(rho.shape[0]):
        for j in range(rho.shape[0]):
            if D[i, j] > rho[i, j] + t or 4 * D[i, j] < rho[i, j] - 4 * t:
                out.append((i, j))
    return out


def metric_violations(D: np.ndarray, tol: float = 0) -> list[str]:
    """Symmetry, zero-iff-equal and triangle checks on a distance table."""
    n = D.shape[0]
    out = []
    for i in range(n):
        if D[i, i] != 0:
            out.append(f"D({i},{i}) != 0")
        for j in range(n):
            if abs(D[i, j] - D[j, i]) > tol:
                out.append(f"asymmetric at {i},{j}")
            if i != j and D[i, j] <= 0:
                out.append(f"zero distance between {i} and {j}")
            for k in range(n):
                if D[i, k] > D[i, j] + D[j, k] + tol:
                    out.append(f"triangle fails at {i},{j},{k}")
    return out


def random_quasi_metric(n: int, rng: np.random.Generator, mode: str = "mixed") -> QuasiMetricMatrix:
    """Random exact quasi-metric.

    ``closure`` draws dyadic rationals and lowers entries until the
    doubled-max law holds; ``ultra`` stretches a random ultrametric entrywise by factors
    in [1, 2], which keeps the law while breaking the triangle inequality.
    """
    if mode == "mixed":
        mode = "closure" if rng.random() < 0.5 else "ultra"
    rho = np.empty((n, n), dtype=object)
    if mode == "ultra":
        # ultrametric from a random merge tree: distance is the merge height
        heights = sorted(Fraction(int(h), 8) for h in rng.integers(1, 64, max(n - 1, 1)))
        label = list(range(n))
        for i in range(n):
            rho[i, i] = Fraction(0)
        for h in heights[: n - 1]:
            a, b = rng.choice(sorted(set(label)), 2, replace=False)
            ia = [i for i in range(n) if label[i] == a]
            ib = [i for i in range(n) if label[i] == b]
            for i in ia:
                for j in ib:
                    rho[i, j] = rho[j, i] = h
            label = [a if x == b else x for x in label]
        # rho <= 2u <= 2 max(u, u) <= 2 max(rho, rho), yet triangles can fail
        for i in range(n):
            for j in range(i + 1, n):
                f = 1 + Fraction(int(rng.integers(0, 9)), 8)
                rho[i, j] = rho[j, i] = rho[i, j] * f
        return QuasiMetricMatrix(rho)
    for i in range(n):
        rho[i, i] = Fraction(0)
        for j in range(i + 1, n):
            v = Fraction(int(rng.integers(1, 17)), 2 ** int(rng.integers(0, 6)))
            rho[i, j] = rho[j, i] = v
    changed = True
    while changed:
        changed = False
        for j in range(n):
            for i in range(n):
                for k in range(i + 1, n):
                    b = 2 * max(rho[i, j], rho[j, k])
                    if i != j != k and rho[i, k] > b:
                        rho[i, k] = rho[k, i] = b
                        changed = True
    return QuasiMetricMatrix(rho)


# --------------------------------------------------------------------------
# dynamical quasi-metric


def separation_index(sys, cert, x, y, n_max: int) -> float | int:
    """Least n with some |u| <= n and d(T^u x, T^u y) >= c; inf when x = y.

    ``sys`` is a :class:`FiniteActionSystem` (x, y are sample indices) or an
    :class:`SftSystem` (x, y are :class:`ConfigWindow` objects, and the base
    distance is read at the origin).
    """
    c = cert.c if hasattr(cert, "c") else float(cert)
    if isinstance(sys, FiniteActionSystem):
        if x == y:
            return math.inf
        d = sys.metric.dist
        for n in range(n_max + 1):
            for p in sys.window_perms(Box(n, sys.k)):
                if d[p[x], p[y]] >= c:
                    return n
        raise Unresolved(f"points {x}, {y} not separated within {n_max}")
    if isinstance(sys, SftSystem):
        if np.array_equal(x.values, y.values) and x.margin == y.margin:
            return math.inf
        reach = min(n_max, x.margin, y.margin)
        diff = sys.site.distance(x.values, y.values)
        R = x.margin
        for n in range(reach + 1):
            sl = tuple(slice(R - n, R + n + 1) for _ in range(x.dims))
            if np.any(diff[sl] >= c):
                return n
        raise Unresolved(f"no separation within {reach}")
    raise TypeError(f"unsupported system {type(sys).__name__}")


def separation_matrix(sample: FiniteActionSystem, c: float, n_max: int) -> np.ndarray:
    """n(x, y) for all sample pairs, NEVER on the diagonal."""
    n = sample.n
    out = np.full((n, n), NEVER, dtype=np.int64)
    todo = ~np.eye(n, dtype=bool)
    d = sample.metric.dist
    seen: set[bytes] = set()
    for r in range(n_max + 1):
        hit = np.zeros((n, n), dtype=bool)
        for p in sample.window_perms(Box(r, sample.k)):
            key = p.tobytes()
            if key in seen:
                continue
            seen.add(key)
            hit |= d[np.ix_(p, p)] >= c
        new = todo & hit
        out[new] = r
        todo &= ~new
        if not todo.any():
            return out
    i, j = np.argwhere(todo)[0]
    raise Unresolved(f"points {i}, {j} not separated within {n_max}")


def find_separation_radius(sample: FiniteActionSystem, c: float, l_max: int = 32) -> int:
    """Least l >= 1 such that every pair with d >= c/2 reaches d >= c within |u| <= l."""
    d = sample.metric.dist
    need = d >= c / 2
    np.fill_diagonal(need, False)
    reached = d >= c
    for l in range(1, l_max + 1):
        for p in sample.window_perms(Box(l, sample.k)):
            reached |= d[np.ix_(p, p)] >= c
        if not np.any(need & ~reached):
            return l
    raise Unresolved(f"no separation radius l <= {l_max}")


def dynamical_rho(sample: FiniteActionSystem, cert, n_max: int = 32,
                  l_max: int = 32) -> tuple[DynamicalRho, DynamicalQuasiParams]:
    """``rho = alpha^-n(x,y)`` with alpha = 2^(1/(l+1)), verified on every triple."""
    if sample.n > SAMPLE_CAP:
        raise ValueError(f"sample larger than {SAMPLE_CAP} points")
    c = cert.c if hasattr(cert, "c") else float(cert)
    l = find_separation_radius(sample, c, l_max)
    params = DynamicalQuasiParams(c, l, 2.0 ** (1.0 / (l + 1)), n_max)
    rho = DynamicalRho(separation_matrix(sample, c, n_max), params)
    res = verify_exponents(rho)
    if not res.ok:
        raise QuasiAxiomViolation(f"{res.reason} at {res.violation}")
    return rho, params


# --------------------------------------------------------------------------
# consequences for the metrized action


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    checked: int
    violations: int
    detail: dict = field(default_factory=dict)


def short_window_check(Dm: FrinkMetric, sample: FiniteActionSystem, n: int,
                    params: DynamicalQuasiParams) -> CheckReport:
    """max_{|u| < n} D(T^u x, T^u y) < 1/(4 alpha) should force D(x, y) < alpha^-n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    D = np.asarray(Dm.D, dtype=float)
    W = np.zeros_like(D)
    for p in sample.window_perms(Box(n - 1, sample.k)):
        np.maximum(W, D[np.ix_(p, p)], out=W)
    hyp = W < 1 / (4 * params.alpha)
    bad = hyp & ~(D < params.alpha ** (-n))
    return CheckReport(not bad.any(), int(hyp.sum()), int(bad.sum()), {"n": n})


def metrized_system(sample: FiniteActionSystem, Dm: FrinkMetric) -> FiniteActionSystem:
    return FiniteActionSystem(np.asarray(Dm.D, dtype=float), sample.gens, sample.points, check=False)


def covering_transfer_check(T: FiniteActionSystem, R: FiniteActionSystem, K: int,
                            params: DynamicalQuasiParams, N: int, n: int) -> CheckReport:
    """#(D^R on [-N,N]^(k-1), alpha^-n) against #(D^T on [-KN-n, KN+n]^k, 1/(4 alpha)).

    Both systems must already carry the metrized distance D.
    """
    a = params.alpha
    left = R.window_matrix(Box(N, R.k)) if R.k else T.metric.dist
    right = T.window_matrix(Box(K * N + n, T.k))
    lhs = covering_number_bracket(MetricMatrix(left), a ** (-n))
    rhs = covering_number_bracket(MetricMatrix(right), 1 / (4 * a))
    ok = lhs.lb <= rhs.ub
    return CheckReport(ok, 1, 0 if ok else 1,
                       {"lhs": (lhs.lb, lhs.ub), "rhs": (rhs.lb, rhs.ub), "N": N, "n": n, "K": K})


def main_bound_evaluate(lhs_estimate, K: int, k: int, alpha: float, htop_ub: float,
                        tol: float = 1e-9) -> CheckReport:
    """Upper metric mean dimension of (X, R, D) against 2 (K+1)^k h_top(T) / log alpha."""
    rhs = 2 * (K + 1) ** k * htop_ub / math.log(alpha)
    lhs = lhs_estimate.ub if hasattr(lhs_estimate, "ub") else float(lhs_estimate)
    ok = lhs <= rhs + tol
    return CheckReport(ok, 1, 0 if ok else 1, {"lhs": lhs, "rhs": rhs})
