"""Acceptance suite: one test and one printed PASS/FAIL line per criterion."""
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from meandim.cli import bundled_configs, run_config, validate_config
from meandim.constructions import (
    Tower,
    TowerParams,
    free_fraction,
    free_index_recursion,
    minimality_gap_check,
    quarter_density_check,
)
from meandim.dimension import (
    banach_density,
    embedding_lower_bound,
    linear_sft_row_witness,
    metric_mean_dim_estimate,
    product_entropy_check,
    restricted_column_witness,
    scale_entropy_table,
    toral_entropy_bracket,
)
from meandim.expansiveness import certify_expansive, coding_constant
from meandim.frink import (
    chain_inequality_check,
    covering_transfer_check,
    dynamical_rho,
    frink_metrize,
    metric_violations,
    metrized_system,
    random_quasi_metric,
    sandwich_violations,
)
from meandim.lattice_metric import Explicit
from meandim.systems import (
    ArithmeticUnion,
    FiniteSet,
    ProductShiftSystem,
    QuantizedTorus,
    SequenceSpace,
    ToralAutomorphism,
    TorusSite,
    build_linear_sft,
    build_restricted_Y,
    enumerate_patterns,
    full_shift,
    golden_mean_shift,
    periodic_sample,
)

CAT = ToralAutomorphism(((2, 1), (1, 1)))
LOG2 = math.log(2)


@pytest.fixture
def verdict(capsys):
    def emit(num, title, ok, elapsed, budget, detail=""):
        ok = bool(ok) and (budget is None or elapsed < budget)
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} ({elapsed:.1f}s"
        line += f" / {budget:.0f}s)" if budget else ")"
        with capsys.disabled():
            print("\n" + line + (f" {detail}" if detail else ""))
        assert ok, line + " " + detail
    return emit


# --------------------------------------------------------------------------
# independent oracles


def all_chain_minimum(rho) -> np.ndarray:
    """Least total weight over every simple chain, by depth-first search."""
    n = rho.shape[0]
    den = math.lcm(*(Fraction(v).denominator for v in rho.ravel()))
    w = [[int(Fraction(rho[i, j]) * den) for j in range(n)] for i in range(n)]
    out = np.empty((n, n), dtype=object)
    for s in range(n):
        best = [math.inf] * n
        best[s] = 0

        def walk(v, used, total):
            for u in range(n):
                if not used >> u & 1:
                    t = total + w[v][u]
                    if t < best[u]:
                        best[u] = t
                    walk(u, used | 1 << u, t)

        walk(s, 1 << s, 0)
        for j in range(n):
            out[s, j] = Fraction(best[j], den)
    return out


def transfer_entropy(A) -> float:
    return math.log(max(abs(np.linalg.eigvals(np.array(A, dtype=float)))))


def linear_sft_brute(q: int, L: int) -> int:
    """Every L x L array over Z/q, kept when all rule placements vanish."""
    count = 0
    for flat in itertools.product(range(q), repeat=L * L):
        x = np.array(flat).reshape(L, L)
        if np.all((3 * x[:-1, :-1] + x[1:, :-1] + x[:-1, 1:]) % q == 0):
            count += 1
    return count


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


# --------------------------------------------------------------------------


def test_criterion_01_frink_suite(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    bad, brute_checked, brute_bad = 0, 0, 0
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        q = random_quasi_metric(n, rng)
        fm = frink_metrize(q)
        bad += len(sandwich_violations(fm)) + len(metric_violations(fm.D))
        if n <= 7:
            brute_checked += 1
            brute_bad += int(not np.array_equal(all_chain_minimum(q.rho), fm.D))
    el = time.perf_counter() - t0
    verdict(1, "Frink metrization on 1000 random quasi-metrics", bad == 0 and brute_bad == 0,
            el, 30, f"violations={bad}, brute-force mismatches={brute_bad}/{brute_checked}")


def test_criterion_02_chain_inequality(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    pool = [random_quasi_metric(int(rng.integers(3, 13)), rng) for _ in range(50)]
    bad = 0
    for i in range(10**4):
        q = pool[i % len(pool)]
        chain = rng.integers(0, q.n, int(rng.integers(3, 10))).tolist()
        bad += not chain_inequality_check(q, chain).ok
    verdict(2, "weighted chain inequality on 10^4 chains", bad == 0,
            time.perf_counter() - t0, 10, f"violations={bad}")


def test_criterion_03_full_shift(verdict):
    t0 = time.perf_counter()
    ladder = [2.0**-e for e in range(2, 9)]
    table = scale_entropy_table(full_shift(1, 2), ladder=ladder, Ns=range(1, 13))
    worst = max(abs(v - LOG2) for e in ladder for v in table.S(e))
    per_N = max(abs(v - LOG2) for (N, e) in table.cells for v in table.normalized(N, e))
    est = metric_mean_dim_estimate(table)
    ok = worst <= 1e-9 and per_N <= 1e-9 and est.ub <= 0.05
    verdict(3, "full 2-shift scale entropy and metric mean dimension", ok,
            time.perf_counter() - t0, 60,
            f"max |S - log2|={worst:.1e}, slope={est.ub:.3g}, ratio at 2^-8={est.grid['ratio']}")


def test_criterion_04_golden_mean(verdict):
    t0 = time.perf_counter()
    g = golden_mean_shift()
    counts_ok = all(
        enumerate_patterns(g, Explicit(tuple((i,) for i in range(L))), count_only=True) == fib(L + 2)
        for L in range(1, 34))
    table = scale_entropy_table(g, ladder=(0.5,), Ns=range(1, 17))
    target = transfer_entropy([[1, 1], [1, 0]])
    est = table.running_inf(0.5)[-1]
    ok = counts_ok and abs(est - target) <= 0.03 * target
    verdict(4, "golden-mean Fibonacci counts and entropy at N=16", ok,
            time.perf_counter() - t0, 60, f"estimate={est:.5f}, target={target:.5f}")


def test_criterion_05_linear_sft(verdict):
    t0 = time.perf_counter()
    mismatches = []
    for q in (2, 3, 5):
        sys_ = build_linear_sft(q)
        for L in (2, 3, 4):
            box = Explicit(tuple((m, n) for n in range(L) for m in range(L)))
            got = enumerate_patterns(sys_, box, count_only=True)
            want = linear_sft_brute(q, L) if q <= 3 and L <= 3 else q ** (2 * L - 1)
            if got != want or want != q ** (2 * L - 1):
                mismatches.append((q, L, got))
    bounds = {}
    for q in (2, 4, 5):
        est, _ = embedding_lower_bound(linear_sft_row_witness(build_linear_sft(q), 10), 1)
        bounds[q] = est.lb
    ok = not mismatches and all(v >= 0.9 for v in bounds.values())
    verdict(5, "linear SFT counts q^(2L-1) and row embedding", ok,
            time.perf_counter() - t0, 120, f"mismatches={mismatches}, bounds={bounds}")


def test_criterion_06_banach_density(verdict):
    t0 = time.perf_counter()
    cases = [(ArithmeticUnion(1, [0]), Fraction(1)), (FiniteSet([0]), Fraction(0)),
             (ArithmeticUnion(2, [0]), Fraction(1, 2)),
             (ArithmeticUnion(7, [0, 2, 3]), Fraction(3, 7))]
    got = [banach_density(lam) for lam, _ in cases]
    ok = all(d.exact and d.value == want for d, (_, want) in zip(got, cases))
    verdict(6, "exact upper Banach densities", ok, time.perf_counter() - t0, None,
            str([str(d.value) for d in got]))


def test_criterion_07_restricted(verdict):
    t0 = time.perf_counter()
    Y = build_restricted_Y(full_shift(2, 2), ArithmeticUnion(2, [0]), [0])
    rep = product_entropy_check(Y, LOG2, range(1, 21))
    target = 0.5 * LOG2
    above = all(v >= target - 1e-12 for v in rep.direct)
    decreasing = all(a >= b for a, b in zip(rep.direct, rep.direct[1:]))
    close = rep.direct[-1] <= 1.06 * target
    torus = ProductShiftSystem(TorusSite(QuantizedTorus(2, 64), CAT))
    Yt = build_restricted_Y(torus, ArithmeticUnion(2, [0]), [0])
    est, _ = embedding_lower_bound(restricted_column_witness(Yt, 20), 2, pairs=500)
    exact_form = est.lb == pytest.approx(2 * 21 / 41)
    ok = rep.ok and above and decreasing and close and exact_form and abs(est.lb - 1) <= 0.05
    verdict(7, "restricted systems: half-density entropy and torus embedding", ok,
            time.perf_counter() - t0, 180,
            f"N=20 estimate={rep.direct[-1]:.5f} vs {target:.5f}, torus bound={est.lb:.4f}")


def test_criterion_08_toral(verdict):
    t0 = time.perf_counter()
    est = toral_entropy_bracket(CAT, 2**-6, 6)
    target = math.log((3 + 5**0.5) / 2)
    ok = est.lb <= target <= est.ub and est.ub - est.lb <= 0.15
    verdict(8, "cat-map entropy bracket", ok, time.perf_counter() - t0, 60,
            f"[{est.lb:.5f}, {est.ub:.5f}] around {target:.5f}")


def test_criterion_09_coding(verdict):
    t0 = time.perf_counter()
    space = SequenceSpace(TorusSite(QuantizedTorus(2, 16), CAT))
    cert = certify_expansive(space, 0.1, n_max=4)
    S = periodic_sample(space, 2, max_points=600, seeds=20, rng=np.random.default_rng(0))
    cc = coding_constant(space, S.restrict_generators([0]), cert, S, N_max=5, pairs=10**4,
                         lipschitz=2.0)
    rho, params = dynamical_rho(S, cert)
    M = metrized_system(S, frink_metrize(rho.quasi))
    R = M.restrict_generators([0])
    transfer = [covering_transfer_check(M, R, cc.K, params, N, n).ok
                for N in range(1, 5) for n in range(0, 5)]
    ok = cc.evidence["violations"] == 0 and all(transfer)
    verdict(9, "coding constant for the shift and covering transfer", ok,
            time.perf_counter() - t0, 120,
            f"K={cc.K}, pairs={cc.evidence['pairs']}, hits={cc.evidence['hypothesis_hits']}, "
            f"transfer {sum(transfer)}/{len(transfer)}")


def test_criterion_10_towers(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    agree = 0
    for _ in range(100):
        variant = ["sec5", "sec5-remark", "sec6"][int(rng.integers(3))]
        k = int(rng.integers(1, 4))
        L, b, a = [1], [], []
        for n in range(k):
            bn = int(rng.integers(1, 3))
            an = int(rng.integers(bn, 3)) if variant == "sec6" else 1
            low = {"sec5": bn, "sec5-remark": 2 ** (n + 1) * bn * bn, "sec6": an * an * bn}[variant]
            L.append(int(rng.integers(low + 1, 51)))
            b.append(bn)
            a.append(an)
        p = TowerParams(variant, L, b, a if variant == "sec6" else None)
        counted = Fraction(len(free_index_recursion(p, k)), p.span(k))
        agree += counted == free_fraction(p, k)
    qp = TowerParams("sec6", (1, 8, 20, 40, 10), (1, 1, 1, 1), (1, 1, 1, 1))
    quarter = quarter_density_check(qp, 10**6)
    m = bundled_configs()["tower-minimality-small"]["params"]["minimality"]
    site = TorusSite(QuantizedTorus(2, m["site"]["q"]), ToralAutomorphism(tuple(map(tuple, m["site"]["matrix"]))))
    tower = Tower(site, "sec5", m["L"], target_size=m["target_size"], seed=0)
    gaps = [minimality_gap_check(tower, n, pairs=m["pairs"]) for n in (1, 2)]
    ok = agree == 100 and quarter.ok and all(g.ok for g in gaps)
    verdict(10, "tower fractions, quarter density to 10^6, minimality gaps", ok,
            time.perf_counter() - t0, 120,
            f"routes agree {agree}/100, quarter cases={quarter.cases}, "
            f"gaps={[(round(g.max_gap, 4), round(g.bound, 4)) for g in gaps]}")


SENTINELS = ("embedding bound below metric estimate", "endomorphism", "short window",
             "metric mean dimension bound", "covering transfer")


def test_criterion_11_sentinels(verdict):
    t0 = time.perf_counter()
    failed, sentinel_hits, sentinel_bad = [], 0, 0
    for name, cfg in bundled_configs().items():
        code, rep = run_config(validate_config(cfg))
        if code != 0:
            failed.append(name)
        for a in rep["assertions"]:
            if a["name"].startswith(SENTINELS):
                sentinel_hits += 1
                sentinel_bad += not a["ok"]
    ok = not failed and sentinel_bad == 0 and sentinel_hits > 0
    verdict(11, "inequality sentinels across the bundled suite", ok,
            time.perf_counter() - t0, None,
            f"sentinels={sentinel_hits}, violations={sentinel_bad}, failed configs={failed}")
