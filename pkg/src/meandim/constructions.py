"""Tower constructions at finite stages.

A tower is a sequence of block sets A_n of length ``span(n) = 3^n L_0...L_n``
over a finite site with a permutation h.  Stage n+1 concatenates ``L_{n+1}``
units of A_n^3, pins some trailing units to members of an h-closed net B_n,
and closes under h.  Three templates are supported:

``sec5``        unit ``L - i`` holds ``y_i``
``sec5-remark`` units ``L - i b .. L - 1 - (i-1) b`` all hold ``y_i``
``sec6``        runs of ``a^2`` units hold ``y_i`` (tower A) or
                ``z_i`` x a, ``H z_i`` x a, ..., ``H^(a-1) z_i`` x a (tower A')
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice_metric import CapExceeded
from .systems import orbit_lengths

VARIANTS = ("sec5", "sec5-remark", "sec6")
INDEX_CAP = 10**8


class InvalidParams(ValueError):
    """Tower parameters break the variant's size condition."""


class TemplateMisfit(ValueError):
    """Forced blocks do not fit in the stage length."""


# --------------------------------------------------------------------------
# Index combinatorics


@dataclass(frozen=True)
class TowerParams:
    """``L = (1, L_1, ..., L_k)``, ``b = (b_0, ..., b_{k-1})``, ``a`` for sec6."""

    variant: str
    L: tuple
    b: tuple
    a: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(int(v) for v in self.L))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        if self.a is not None:
            object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        self.validate()

    @property
    def stages(self) -> int:
        return len(self.L) - 1

    def forced(self, n: int) -> int:
        """Number of A_n^3 units pinned in stage n+1."""
        if self.variant == "sec5":
            return self.b[n]
        if self.variant == "sec5-remark":
            return self.b[n] ** 2
        return self.a[n] ** 2 * self.b[n]

    def span(self, n: int) -> int:
        return 3**n * math.prod(self.L[: n + 1])

    def validate(self):
        if self.variant not in VARIANTS:
            raise InvalidParams(f"unknown variant {self.variant!r}")
        if not self.L or self.L[0] != 1:
            raise InvalidParams("L_0 must be 1")
        if len(self.b) < self.stages or any(v < 1 for v in self.b) or any(v < 1 for v in self.L):
            raise InvalidParams("need b_n >= 1 and L_n >= 1 for every stage")
        if self.variant == "sec6":
            if self.a is None or len(self.a) < self.stages:
                raise InvalidParams("sec6 needs a_n for every stage")
            if any(a < b for a, b in zip(self.a, self.b)):
                raise InvalidParams("sec6 needs a_n >= b_n")
        for n in range(self.stages):
            L, b = self.L[n + 1], self.b[n]
            if self.variant == "sec5-remark" and not L > 2 ** (n + 1) * b * b:
                raise InvalidParams(f"L_{n + 1} = {L} must exceed 2^{n + 1} b_{n}^2")
            if 3 * L - 3 * self.forced(n) < 1:
                raise InvalidParams(f"3 L_{n + 1} - 3 * {self.forced(n)} < 1")


@dataclass(frozen=True)
class FreeIndexSet:
    I: np.ndarray
    n: int
    span: int

    def __len__(self):
        return len(self.I)


def free_index_recursion(params: TowerParams, n: int, cap: int = INDEX_CAP) -> FreeIndexSet:
    """``I_0 = {0}``, ``I_{n+1} = union over m < 3 L_{n+1} - 3 f_n of (m span_n + I_n)``."""
    if not 0 <= n <= params.stages:
        raise InvalidParams(f"stage {n} outside 0..{params.stages}")
    I = np.zeros(1, dtype=np.int64)
    for j in range(n):
        mult = 3 * params.L[j + 1] - 3 * params.forced(j)
        if len(I) * mult > cap:
            raise CapExceeded(f"|I_{j + 1}| exceeds {cap}")
        I = (np.arange(mult, dtype=np.int64)[:, None] * params.span(j) + I[None, :]).ravel()
    return FreeIndexSet(I, n, params.span(n))


def free_fraction(params: TowerParams, n: int) -> Fraction:
    """``|I_n| / span_n``, by counting and by the product of ``1 - f_j / L_{j+1}``."""
    counted = Fraction(len(free_index_recursion(params, n)), params.span(n))
    product = Fraction(1)
    for j in range(n):
        product *= 1 - Fraction(params.forced(j), params.L[j + 1])
    if counted != product:
        raise AssertionError(f"fraction routes disagree: {counted} vs {product}")
    return counted


@dataclass
class QuarterReport:
    ok: bool
    failing_t: int | None
    cases: dict


def quarter_density_check(params: TowerParams, t_max: int) -> QuarterReport:
    """Exhaustively test ``|[0, t) cap I| > t / 4`` for ``1 <= t <= t_max``.

    Requires every stage to keep at least half of its cells free and the
    last stage to cover ``[0, t_max)``; ``I cap [0, span_n)`` is ``I_n``.
    """
    for j in range(params.stages + 1):
        if free_fraction(params, j) < Fraction(1, 2):
            raise InvalidParams(f"stage {j} keeps less than half of its cells free")
    top = params.stages
    if params.span(top) < t_max:
        raise InvalidParams(f"span {params.span(top)} does not reach t = {t_max}")
    I = free_index_recursion(params, top).I
    mark = np.zeros(t_max + 1, dtype=np.int64)
    mark[I[I < t_max]] = 1
    # cnt[t] = |[0, t) cap I|
    cnt = np.concatenate([[0], np.cumsum(mark[:t_max])])
    t = np.arange(1, t_max + 1)
    ok = 4 * cnt[1:] > t
    # the case each t falls under: span_n <= t < span_{n+1}
    spans = np.array([params.span(j) for j in range(top + 1)] + [np.iinfo(np.int64).max])
    n_of = np.searchsorted(spans, t, side="right") - 1
    s = spans[n_of]
    mult = np.array([3 * params.L[j + 1] - 3 * params.forced(j) if j < top else 0
                     for j in range(top + 1)])[n_of]
    case = np.where(t < 2 * s, 1, np.where(t <= mult * s, 2, 3))
    cases = {c: int((case == c).sum()) for c in (1, 2, 3)}
    bad = np.flatnonzero(~ok)
    return QuarterReport(bool(ok.all()), int(t[bad[0]]) if bad.size else None, cases)


# --------------------------------------------------------------------------
# Site powers and nets


class SitePowers:
    """Powers of the site map h as index permutations."""

    def __init__(self, site):
        self.site = site
        self.perm = np.asarray(site.apply_h(np.arange(site.size), 1), dtype=np.int64)
        self.lens = orbit_lengths(self.perm)
        self.period = int(np.lcm.reduce(self.lens)) if site.size else 1
        self._cache = {0: np.arange(site.size)}

    def power(self, t: int) -> np.ndarray:
        t %= self.period
        if t not in self._cache:
            out, base, e = np.arange(self.site.size), self.perm, t
            while e:
                if e & 1:
                    out = base[out]
                base = base[base]
                e >>= 1
            self._cache[t] = out
        return self._cache[t]

    def apply(self, vals, t: int) -> np.ndarray:
        return self.power(t)[np.asarray(vals, dtype=np.int64)]

    def block_period(self, block) -> int:
        lens = self.lens[np.asarray(block, dtype=np.int64)]
        return int(np.lcm.reduce(lens)) if len(lens) else 1


def sup_distance(site, X, Y) -> np.ndarray:
    """l-infinity distance between blocks along the last axis."""
    return site.distance(X, Y).max(axis=-1)


def periodic_net(site, target, radius: float, pool=None, cap: int = 5000):
    """An h-closed set of blocks that is radius-dense in ``target``.

    Candidates come from ``pool`` (default: the target itself) in order of
    increasing h-period; each chosen block brings its whole h-orbit.
    Returns ``(B, a)`` with ``a`` the lcm of the member periods.
    """
    hp = SitePowers(site)
    target = np.atleast_2d(np.asarray(target, dtype=np.int64))
    pool = target if pool is None else np.atleast_2d(np.asarray(pool, dtype=np.int64))
    order = sorted(range(len(pool)), key=lambda i: hp.block_period(pool[i]))
    covered = np.zeros(len(target), dtype=bool)
    members: list[np.ndarray] = []
    seen = set()
    for i in order:
        if covered.all():
            break
        cand = pool[i]
        if sup_distance(site, target[~covered], cand[None, :]).min() >= radius:
            continue
        orbit = [hp.apply(cand, t) for t in range(hp.block_period(cand))]
        for o in orbit:
            key = o.tobytes()
            if key not in seen:
                seen.add(key)
                members.append(o)
        if len(members) > cap:
            raise CapExceeded(f"net exceeds {cap} blocks")
        orb = np.array(orbit)
        covered |= (sup_distance(site, target[:, None, :], orb[None, :, :]) < radius).any(axis=1)
    if not covered.all():
        raise ValueError("pool cannot reach the requested density")
    B = np.array(members)
    a = int(np.lcm.reduce([hp.block_period(b) for b in B]))
    return B, a


def net_is_invariant(site, B) -> bool:
    hp = SitePowers(site)
    keys = {b.tobytes() for b in B}
    return {hp.apply(b, 1).tobytes() for b in B} == keys


def net_density(site, B, target) -> float:
    """Largest distance from a target block to its nearest net member."""
    return float(sup_distance(site, np.asarray(target)[:, None, :], np.asarray(B)[None, :, :])
                 .min(axis=1).max())


# --------------------------------------------------------------------------
# Stages


@dataclass
class TowerStage:
    """Stage n: net members and the forced units of the next stage.

    ``forced`` lists ``(unit, member, power)``: unit ``unit`` of an
    A_{n+1} block holds ``H^power`` of net member ``member``.
    """

    n: int
    variant: str
    L_next: int
    B: np.ndarray
    a: int
    forced: list
    B_prime: np.ndarray | None = None
    forced_prime: list | None = None
    target: np.ndarray | None = field(default=None, repr=False)
    target_prime: np.ndarray | None = field(default=None, repr=False)

    @property
    def b(self) -> int:
        return len(self.B)

    def forced_cells(self, unit_len: int) -> set:
        units = {u for u, _, _ in self.forced}
        if self.forced_prime:
            units |= {u for u, _, _ in self.forced_prime}
        return {u * unit_len + c for u in units for c in range(unit_len)}


def build_stage(n: int, L_next: int, B, variant: str, a: int | None = None,
                B_prime=None) -> TowerStage:
    """Instantiate the variant's template for a net of size b."""
    if variant not in VARIANTS:
        raise InvalidParams(f"unknown variant {variant!r}")
    B = np.atleast_2d(np.asarray(B, dtype=np.int64))
    b = len(B)
    a = 1 if a is None else int(a)
    L = int(L_next)
    forced, forced_p = [], None
    if variant == "sec5":
        if not L > b:
            raise TemplateMisfit(f"L = {L} must exceed b = {b}")
        forced = [(L - i, i - 1, 0) for i in range(1, b + 1)]
    elif variant == "sec5-remark":
        if not L > b * b:
            raise TemplateMisfit(f"L = {L} must exceed b^2 = {b * b}")
        forced = [(u, i - 1, 0) for i in range(1, b + 1)
                  for u in range(L - i * b, L - (i - 1) * b)]
    else:
        if a < b:
            raise InvalidParams("sec6 needs a >= b")
        if B_prime is None or len(B_prime) != b:
            raise InvalidParams("sec6 needs a second net of the same size")
        if not L > a * a * b:
            raise TemplateMisfit(f"L = {L} must exceed a^2 b = {a * a * b}")
        forced, forced_p = [], []
        for i in range(1, b + 1):
            start = L - i * a * a
            for k in range(a * a):
                forced.append((start + k, i - 1, 0))
                forced_p.append((start + k, i - 1, k // a))
    return TowerStage(n, variant, L, B, a, forced,
                      None if B_prime is None else np.atleast_2d(np.asarray(B_prime)), forced_p)


class Tower:
    """Stages of one construction over a finite site with a permutation h.

    ``L`` fixes stage lengths where given; missing ones take the smallest
    value the template allows once the net size is known.
    """

    def __init__(self, site, variant: str = "sec5", L: Sequence[int] = (1,),
                 target_size: int = 40, seed: int = 0):
        if variant not in VARIANTS:
            raise InvalidParams(f"unknown variant {variant!r}")
        if not L or L[0] != 1:
            raise InvalidParams("L_0 must be 1")
        self.site = site
        self.hp = SitePowers(site)
        self.variant = variant
        self.L = [int(v) for v in L]
        self.stages: list[TowerStage] = []
        self.target_size = target_size
        self.rng = np.random.default_rng(seed)

    def span(self, n: int) -> int:
        return 3**n * math.prod(self.L[: n + 1])

    def _min_L(self, b: int, a: int) -> int:
        return {"sec5": b + 1, "sec5-remark": b * b + 1, "sec6": a * a * b + 1}[self.variant]

    def sample_A(self, n: int, count: int, prime: bool = False, zero: bool = False) -> np.ndarray:
        """Random blocks of A_n (or A'_n); ``zero`` fills free cells with 0 and skips h."""
        if n == 0:
            if zero:
                return np.zeros((count, 1), dtype=np.int64)
            return self.rng.integers(0, self.site.size, (count, 1))
        st = self.stages[n - 1]
        unit = 3 * self.span(n - 1)
        L = st.L_next
        forced = st.forced_prime if prime else st.forced
        B = st.B_prime if prime else st.B
        pinned = {u for u, _, _ in forced}
        free_units = [u for u in range(L) if u not in pinned]
        out = np.empty((count, L * unit), dtype=np.int64)
        sub = self.sample_A(n - 1, 3 * len(free_units) * count, prime, zero)
        sub = sub.reshape(count, len(free_units), unit)
        for k, u in enumerate(free_units):
            out[:, u * unit:(u + 1) * unit] = sub[:, k]
        shifts = np.zeros(count, dtype=np.int64) if zero else self.rng.integers(0, st.a, count)
        for u, i, pw in forced:
            out[:, u * unit:(u + 1) * unit] = self.hp.apply(B[i], pw)
        # the finite union of h-images of C_n; free units stay in A_n^3
        for r in np.flatnonzero(shifts):
            out[r] = self.hp.apply(out[r], int(shifts[r]))
        return out

    def grow(self, n_stages: int, radius=None, cap: int = 5000) -> "Tower":
        """Build stages 0..n_stages-1: nets B_n and the templates they pin."""
        while len(self.stages) < n_stages:
            n = len(self.stages)
            rad = radius(n) if radius else 1.0 / max(n, 1)
            unit = 3 * self.span(n)
            nets = []
            for prime in ((False, True) if self.variant == "sec6" else (False,)):
                tgt = self.sample_A(n, 3 * self.target_size, prime).reshape(self.target_size, unit)
                pool = np.concatenate([self.sample_A(n, 3, prime, zero=True).reshape(1, unit), tgt])
                B, a = periodic_net(self.site, tgt, rad, pool=pool, cap=cap)
                nets.append((B, a, tgt))
            if self.variant == "sec6":
                (B, a1, tgt), (Bp, a2, tgtp) = nets
                b = max(len(B), len(Bp))
                # equal sizes: repeat members of the smaller net
                B = np.concatenate([B, B[: b - len(B)]]) if len(B) < b else B
                Bp = np.concatenate([Bp, Bp[: b - len(Bp)]]) if len(Bp) < b else Bp
                a = math.lcm(a1, a2)
                a *= -(-b // a)
            else:
                (B, a, tgt), = nets
                Bp, tgtp, b = None, None, len(B)
            if len(self.L) > n + 1:
                L_next = self.L[n + 1]
            else:
                L_next = self._min_L(b, a)
                self.L.append(L_next)
            st = build_stage(n, L_next, B, self.variant, a, Bp)
            st.target, st.target_prime = tgt, tgtp
            self.stages.append(st)
        return self

    def sample_X(self, n: int, R: int, prime: bool = False, insert=None):
        """A window [-R, R] of a point of X(A_n), blocks aligned at some l in (-2s, -s].

        ``insert`` (a block of A_n^3) is placed at l.  Returns ``(values, l)``.
        """
        s = self.span(n)
        l = int(self.rng.integers(-2 * s + 1, -s + 1))
        first = l - s * (-(-(R + l) // s) + 1)
        nblocks = (R - first) // s + 1
        vals = self.sample_A(n, nblocks, prime).reshape(-1)
        start = (l - first)
        if insert is not None:
            vals[start: start + 3 * s] = insert
        off = -R - first
        return vals[off: off + 2 * R + 1].copy(), l

    def host_window(self, n: int, R: int, prime: bool = False):
        """Values of a point of X(A_{n+1}) around one full A_{n+1} block.

        Returns ``(values, s0)``: the block occupies ``values[s0 : s0 + span]``.
        """
        S = self.span(n + 1)
        s = self.span(n)
        s0 = R + 3 * s
        length = s0 + S + 2 * s + R + 3 * s + 1
        first = s0 - S * (-(-s0 // S))
        nblocks = -(-(length - first) // S)
        vals = self.sample_A(n + 1, nblocks, prime).reshape(-1)
        return vals[-first: -first + length], s0


@dataclass
class GapReport:
    ok: bool
    max_gap: float
    bound: float
    pairs: int
    candidates: int


def _weighted_upper(site, x, y, R: int) -> float:
    w = 2.0 ** -np.abs(np.arange(-R, R + 1))
    return float((w * site.distance(x, y)).sum() + 2.0 ** (1 - R) * site.diameter)


def minimality_gap_check(tower: Tower, n: int, pairs: int = 10, R: int | None = None,
                         max_candidates: int = 10**5) -> GapReport:
    """Minimized distance from X(A_n) points to orbits of X(A_{n+1}) points.

    The x block at l is drawn from the sample the net was built on; the
    offsets tried are the ones that align a forced unit of the host with l.
    """
    if n < 1:
        raise ValueError("the bound 3/n needs n >= 1")
    tower.grow(n + 1)
    st = tower.stages[n]
    s = tower.span(n)
    unit = 3 * s
    R = R if R is not None else 4 * s
    if R < 3 * s:
        raise ValueError("window too short for the offset range")
    bound = 3 / n + 2.0 ** (1 - s)
    site = tower.site
    rng = tower.rng
    w = 2.0 ** -np.abs(np.arange(-R, R + 1))
    tail = 2.0 ** (1 - R) * site.diameter
    worst, ncand = 0.0, 0
    for _ in range(pairs):
        e = st.target[rng.integers(len(st.target))]
        x, l1 = tower.sample_X(n, R, insert=e)
        z, z0 = tower.host_window(n, R)
        starts_z = [z0 + u * unit for u, _, _ in st.forced]
        if tower.variant != "sec6":
            p = np.asarray(starts_z) - l1
            best = math.inf
            for chunk in np.array_split(p, -(-len(p) // 2000)):
                win = z[chunk[:, None] + np.arange(-R, R + 1)]
                best = min(best, float((site.distance(win, x[None, :]) @ w).min()) + tail)
            ncand += len(p)
        else:
            e2 = st.target_prime[rng.integers(len(st.target_prime))]
            y, l2 = tower.sample_X(n, R, prime=True, insert=e2)
            w, w0 = tower.host_window(n, R, prime=True)
            starts_w = [w0 + u * unit for u, _, _ in st.forced_prime]
            if len(starts_z) * len(starts_w) > max_candidates:
                raise CapExceeded("too many offset pairs")
            best = math.inf
            for c in starts_z:
                p = c - l1
                zs = z[p - R: p + R + 1]
                for cw in starts_w:
                    q = cw - l2 - p
                    dz = _weighted_upper(site, x, tower.hp.apply(zs, q), R)
                    if dz >= best:
                        continue
                    ws = w[p + q - R: p + q + R + 1]
                    best = min(best, max(dz, _weighted_upper(site, y, tower.hp.apply(ws, q), R)))
            ncand += len(starts_z) * len(starts_w)
        worst = max(worst, best)
    return GapReport(worst < bound, worst, bound, pairs, ncand)
