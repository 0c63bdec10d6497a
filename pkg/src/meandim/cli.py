"""Config-driven runner: ``meandim <task> --config cfg.json [--out dir]``.

Every task reads one JSON document, validates it, dispatches to the library
and writes ``<name>.csv`` (result rows) plus ``<name>.json`` (full report).
Exit status: 0 all assertions passed, 1 an assertion failed, 2 bad config,
3 a resource cap was hit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .constructions import (
    Tower,
    TowerParams,
    free_fraction,
    minimality_gap_check,
    quarter_density_check,
)
from .dimension import (
    CellwiseRule,
    DirectionalWindowSpec,
    WitnessViolation,
    banach_density,
    directional_mdim_estimate,
    embedding_lower_bound,
    free_cell_witness,
    lipschitz_endo_check,
    linear_sft_row_witness,
    lw_inequality_check,
    metric_mean_dim_estimate,
    product_entropy_check,
    restricted_column_witness,
    scale_entropy_table,
    toral_entropy_bracket,
)
from .expansiveness import certify_expansive, coding_constant
from .frink import (
    QuasiAxiomViolation,
    QuasiMetricMatrix,
    chain_inequality_check,
    covering_transfer_check,
    dynamical_rho,
    frink_metrize,
    main_bound_evaluate,
    metric_violations,
    metrized_system,
    random_quasi_metric,
    sandwich_violations,
    short_window_check,
    verify_quasi_metric,
)
from .lattice_metric import CapExceeded, Explicit
from .systems import (
    AlphabetSite,
    ArithmeticUnion,
    FiniteSet,
    ProductShiftSystem,
    QuantizedTorus,
    SequenceSpace,
    SftSystem,
    ToralAutomorphism,
    TorusSite,
    build_linear_sft,
    build_restricted_Y,
    enumerate_patterns,
    full_shift,
    golden_mean_shift,
    periodic_sample,
)

TASKS = ("entropy", "mdim", "metric-mdim", "directional", "frink", "expansive",
         "coding", "density", "tower")
EXIT_OK, EXIT_ASSERT, EXIT_SCHEMA, EXIT_CAP = 0, 1, 2, 3

_number = {"oneOf": [
    {"type": "number"},
    {"type": "string", "pattern": r"^-?\d+(/\d+)?$"},
    {"type": "object", "properties": {"log": {"type": "number", "exclusiveMinimum": 0},
                                      "times": {"type": "number"}},
     "required": ["log"], "additionalProperties": False},
]}

_site = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["alphabet", "torus"]},
        "size": {"type": "integer", "minimum": 1},
        "perm": {"type": "array", "items": {"type": "integer"}},
        "r": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 1},
        "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
    },
    "required": ["kind"],
}

_index_set = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["residues", "finite"]},
        "period": {"type": "integer", "minimum": 1},
        "residues": {"type": "array", "items": {"type": "integer"}},
        "elements": {"type": "array", "items": {"type": "integer"}},
    },
    "required": ["kind"],
}

_expect = {
    "type": "object",
    "properties": {
        "value": _number,
        "tol": {"type": "number", "minimum": 0},
        "rel_tol": {"type": "number", "minimum": 0},
        "min": _number,
        "max": _number,
        "max_width": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "pattern": r"^[a-z0-9][a-z0-9-]*$"},
        "anchor": {"type": "string"},
        "task": {"enum": list(TASKS)},
        "seed": {"type": "integer", "minimum": 0},
        "system": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["full_shift", "golden_mean", "linear_sft", "site_shift",
                                  "product_shift", "sequence_space", "restricted", "toral",
                                  "quasi_metric", "tower", "index_sets"]},
                "site": _site,
                "Lambda": _index_set,
                "A": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "base": {"enum": ["symbolic_columns", "product_shift"]},
            },
            "required": ["kind"],
        },
        "params": {"type": "object"},
        "expect": _expect,
        "caps": {
            "type": "object",
            "properties": {k: {"type": "integer", "minimum": 1}
                           for k in ("patterns", "pairs", "points")},
            "additionalProperties": False,
        },
        "budget_seconds": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["name", "task", "seed", "system"],
    "additionalProperties": False,
}

DEFAULT_CAPS = {"patterns": 10**6, "pairs": 10**4, "points": 2000}


class ConfigError(ValueError):
    pass


def _value(x) -> float | Fraction:
    if isinstance(x, dict):
        return x.get("times", 1.0) * math.log(x["log"])
    if isinstance(x, str):
        return Fraction(x)
    return x


def _need(params: dict, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigError(f"params missing {missing}")


def build_site(sysdef: dict):
    if sysdef["kind"] == "alphabet":
        return AlphabetSite(sysdef.get("size", 2), sysdef.get("perm"))
    if "q" not in sysdef:
        raise ConfigError("torus site needs q")
    torus = QuantizedTorus(sysdef.get("r", 2), sysdef["q"])
    auto = ToralAutomorphism(tuple(map(tuple, sysdef["matrix"]))) if "matrix" in sysdef else None
    return TorusSite(torus, auto)


def build_index_set(sysdef: dict):
    if sysdef["kind"] == "residues":
        if "period" not in sysdef or "residues" not in sysdef:
            raise ConfigError("residue set needs period and residues")
        return ArithmeticUnion(sysdef["period"], sysdef["residues"])
    return FiniteSet(sysdef.get("elements", []))


def build_system(sysdef: dict, params: dict):
    kind = sysdef["kind"]
    if kind == "full_shift":
        return full_shift(params.get("k", 1), params.get("symbols", 2))
    if kind == "golden_mean":
        return golden_mean_shift()
    if kind == "linear_sft":
        _need(params, "q")
        return build_linear_sft(params["q"])
    if kind == "site_shift":
        return SftSystem(1, build_site(sysdef["site"]))
    if kind == "product_shift":
        return ProductShiftSystem(build_site(sysdef["site"]))
    if kind == "sequence_space":
        return SequenceSpace(build_site(sysdef["site"]), cellwise=params.get("cellwise", True))
    if kind == "restricted":
        if "Lambda" not in sysdef or "A" not in sysdef:
            raise ConfigError("restricted system needs Lambda and A")
        lam = build_index_set(sysdef["Lambda"])
        if sysdef.get("base", "symbolic_columns") == "symbolic_columns":
            base = full_shift(2, 2)
        else:
            base = ProductShiftSystem(build_site(sysdef["site"]))
        return build_restricted_Y(base, lam, sysdef["A"])
    if kind == "toral":
        _need(params, "matrix")
        return ToralAutomorphism(tuple(map(tuple, params["matrix"])))
    return None


def _bracket_verdict(lb, ub, expect: dict) -> bool:
    ok = True
    if "value" in expect:
        v = float(_value(expect["value"]))
        tol = expect.get("tol", 0.0)
        if "rel_tol" in expect:
            ok &= abs(ub - v) <= expect["rel_tol"] * abs(v) + tol
            ok &= abs(lb - v) <= expect["rel_tol"] * abs(v) + tol
        else:
            ok &= lb - tol <= v <= ub + tol
    if "min" in expect:
        ok &= lb >= float(_value(expect["min"]))
    if "max" in expect:
        ok &= ub <= float(_value(expect["max"]))
    if "max_width" in expect:
        ok &= ub - lb <= expect["max_width"]
    return bool(ok)


class Run:
    """Rows and assertions gathered by one task."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.params = cfg.get("params", {})
        self.expect = cfg.get("expect", {})
        self.caps = {**DEFAULT_CAPS, **cfg.get("caps", {})}
        self.seed = cfg["seed"]
        self.rows: list[dict] = []
        self.assertions: list[dict] = []
        self.extra: dict = {}

    def row(self, grid: dict, lb, ub, verdict: bool):
        self.rows.append({**grid, "lb": lb, "ub": ub, "verdict": "pass" if verdict else "fail"})

    def check(self, name: str, ok: bool, **detail):
        self.assertions.append({"name": name, "ok": bool(ok), **_jsonable(detail)})


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


# --------------------------------------------------------------------------
# tasks


def task_entropy(run: Run):
    p, sysdef = run.params, run.cfg["system"]
    kind = sysdef["kind"]
    sysobj = build_system(sysdef, p)
    if kind == "toral":
        for eps in p.get("eps", [2.0**-6]):
            for N in p.get("Ns", [6]):
                est = toral_entropy_bracket(sysobj, eps, N)
                ok = _bracket_verdict(est.lb, est.ub, run.expect)
                run.row({"eps": eps, "N": N}, est.lb, est.ub, ok)
                run.check(f"toral bracket eps={eps} N={N}", ok, lb=est.lb, ub=est.ub)
        return
    if kind == "restricted":
        Ns = p.get("Ns", list(range(1, 21)))
        h_site = float(_value(p.get("h_site", {"log": 2})))
        rep = product_entropy_check(sysobj, h_site, Ns, rel_tol=p.get("rel_tol", 0.06))
        for N, v in zip(Ns, rep.direct):
            run.row({"N": N, "source": "direct"}, v, v, v >= rep.target - 1e-12)
        for N, e in zip(Ns, rep.pavlov):
            run.row({"N": N, "source": "column"}, e.lb, e.ub, e.ub >= rep.target - 1e-12)
        run.check("product entropy", rep.ok, target=rep.target, final=rep.direct[-1])
        return
    table = scale_entropy_table(sysobj, ladder=[2.0**-e for e in p.get("ladder_exponents", [2, 8])],
                                Ns=p.get("Ns", [1, 2, 3]), cap=run.caps["patterns"])
    if "fibonacci_up_to" in p:
        a, b = 0, 1
        fib = [a]
        for _ in range(2 * p["fibonacci_up_to"] + 4):
            a, b = b, a + b
            fib.append(a)
        for N in table.Ns:
            if N <= p["fibonacci_up_to"]:
                c = table.cells[(N, table.ladder[0])].lb
                run.check(f"golden count N={N}", c == fib[2 * N + 3], count=c)
    for eps in table.ladder:
        lb, ub = table.S(eps)
        ok = _bracket_verdict(lb, ub, run.expect)
        run.row({"eps": eps}, lb, ub, ok)
        run.check(f"S bracket eps={eps}", ok, lb=lb, ub=ub)


def task_mdim(run: Run):
    p, sysdef = run.params, run.cfg["system"]
    sysobj = build_system(sysdef, p)
    Ns = p.get("Ns", [10])
    pairs = min(p.get("pairs", 1000), run.caps["pairs"])
    if sysdef["kind"] == "linear_sft":
        for L in p.get("count_L", []):
            c = enumerate_patterns(sysobj, _square(L), count_only=True, cap=run.caps["patterns"])
            run.check(f"count L={L}", c == p["q"] ** (2 * L - 1), count=c)
            run.row({"N": L, "quantity": "count"}, c, c, c == p["q"] ** (2 * L - 1))
    for N in Ns:
        if sysdef["kind"] == "linear_sft":
            est, cert = embedding_lower_bound(linear_sft_row_witness(sysobj, N), 1,
                                              pairs=pairs, seed=run.seed)
        elif sysdef["kind"] == "restricted":
            est, cert = embedding_lower_bound(restricted_column_witness(sysobj, N),
                                              sysobj.base.site.dimension, pairs=pairs,
                                              seed=run.seed)
        else:
            raise ConfigError(f"no embedding witness for {sysdef['kind']}")
        ok = _bracket_verdict(est.lb, est.lb, run.expect)
        run.row({"N": N, "quantity": "embedding"}, est.lb, est.ub, ok)
        run.check(f"embedding N={N}", ok, lb=est.lb, pairs=cert.pairs_checked,
                  min_ratio=cert.min_ratio)


def _square(L: int):
    return Explicit(tuple((m, n) for n in range(L) for m in range(L)))


def task_metric_mdim(run: Run):
    p, sysdef = run.params, run.cfg["system"]
    sysobj = build_system(sysdef, p)
    ladder = [2.0**-e for e in p.get("ladder_exponents", [2, 3, 4, 5, 6, 7, 8])]
    table = scale_entropy_table(sysobj, ladder=ladder, Ns=p.get("Ns", [1]),
                                cap=run.caps["patterns"])
    est = metric_mean_dim_estimate(table)
    ok = _bracket_verdict(est.lb, est.ub, run.expect)
    run.row({"eps": min(ladder), "quantity": "slope"}, est.lb, est.ub, ok)
    ratio = np.atleast_1d(est.grid["ratio"]).astype(float)
    run.row({"eps": min(ladder), "quantity": "ratio"}, ratio.min(), ratio.max(), True)
    run.check("metric mean dimension", ok, lb=est.lb, ub=est.ub)
    site = sysobj.site
    free = range(2 * max(table.Ns) + 1) if site.dimension else []
    lower, _ = embedding_lower_bound(free_cell_witness(site, 2 * max(table.Ns) + 1, free),
                                     max(site.dimension, 1), pairs=min(200, run.caps["pairs"]),
                                     seed=run.seed)
    lw = lw_inequality_check(lower, est)
    run.check("embedding bound below metric estimate", lw.ok, lhs=lw.lhs, rhs=lw.rhs)
    if "endomorphism" in p:
        e = p["endomorphism"]
        space = SequenceSpace(site, cellwise=False)
        rule = _rule(e, site)
        rep = lipschitz_endo_check(space, rule, seed=run.seed)
        run.check(f"endomorphism {e['rule']}", rep["ok"], L=rep["L"], mdim=rep["mdim"],
                  rhs=rep["rhs"])


def _rule(e: dict, site) -> CellwiseRule:
    name = e["rule"]
    if name == "identity":
        return CellwiseRule(0, lambda v: v[:, 0], 1.0, name)
    if name == "site_map":
        auto = ToralAutomorphism(tuple(map(tuple, e["matrix"])))
        hsite = TorusSite(site.torus, auto)
        op = float(np.linalg.norm(auto.matrix.astype(float), 2))
        return CellwiseRule(0, lambda v: hsite.apply_h(v[:, 0], 1), op, name, bijective=True)
    if name == "xor":
        return CellwiseRule(1, lambda v: (v[:, 0] + v[:, 2]) % site.size, 1.0, name)
    raise ConfigError(f"unknown rule {name!r}")


def task_directional(run: Run):
    p, sysdef = run.params, run.cfg["system"]
    sysobj = build_system(sysdef, p)
    for d in p.get("directions", [[1, 0]]):
        for r in p.get("r", [1.0]):
            for N in p.get("Ns", [20]):
                est = directional_mdim_estimate(sysobj, DirectionalWindowSpec(tuple(d), r, N),
                                                pairs=min(p.get("pairs", 500), run.caps["pairs"]),
                                                seed=run.seed)
                exp = dict(run.expect)
                per_dir = p.get("expected", {}).get(f"{d[0]},{d[1]}")
                if per_dir is not None:
                    exp["value"] = per_dir
                ok = _bracket_verdict(est.lb, est.lb, exp)
                run.row({"direction": f"{d[0]},{d[1]}", "r": r, "N": N}, est.lb, est.ub, ok)
                run.check(f"directional {d} r={r} N={N}", ok, lb=est.lb, ub=est.ub)


def task_frink(run: Run):
    p = run.params
    rng = np.random.default_rng(run.seed)
    if "rho" in p:
        rho = np.array([[float(Fraction(str(v))) for v in row] for row in p["rho"]])
        q = QuasiMetricMatrix(rho)
        chk = verify_quasi_metric(q)
        if not chk.ok:
            run.check("2-max axiom", False, violation=chk.violation)
            run.row({"matrix": 0, "n": q.n}, 0, 0, False)
            return
        fm = frink_metrize(q)
        bad = sandwich_violations(fm) + metric_violations(np.asarray(fm.D, dtype=float), 1e-12)
        run.row({"matrix": 0, "n": q.n}, float(np.min(fm.D + np.eye(q.n))), float(np.max(fm.D)),
                not bad)
        run.check("metrization", not bad, violations=[str(b) for b in bad[:5]])
        return
    count, n_max = p.get("count", 100), p.get("n_max", 12)
    total = 0
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        q = random_quasi_metric(n, rng, p.get("mode", "mixed"))
        fm = frink_metrize(q)
        bad = sandwich_violations(fm) + metric_violations(np.asarray(fm.D, dtype=float), 1e-12)
        total += len(bad)
        run.row({"matrix": i, "n": n}, float(np.asarray(fm.D, dtype=float).max()),
                float(np.asarray(q.rho, dtype=float).max()), not bad)
    run.check("random metrizations", total == 0, matrices=count, violations=total)
    chains = p.get("chains", 0)
    bad_chains = 0
    for _ in range(chains):
        n = int(rng.integers(2, n_max + 1))
        q = random_quasi_metric(n, rng, p.get("mode", "mixed"))
        chain = rng.integers(0, n, int(rng.integers(3, 12))).tolist()
        bad_chains += not chain_inequality_check(q, chain).ok
    if chains:
        run.check("weighted chain inequality", bad_chains == 0, chains=chains,
                  violations=bad_chains)


def task_expansive(run: Run):
    p, sysdef = run.params, run.cfg["system"]
    sysobj = build_system(sysdef, p)
    for c in p.get("c", [0.1]):
        cert = certify_expansive(sysobj, c, n_max=p.get("n_max", 4), seed=run.seed,
                                 max_pairs=run.caps["pairs"])
        run.row({"c": c, "mode": cert.mode}, 2 * c, cert.separation, cert.separation > 2 * c)
        run.check(f"expansive c={c}", cert.separation > 2 * c, separation=cert.separation,
                  window=cert.n_max)


def task_coding(run: Run):
    p, sysdef = run.params, run.cfg["system"]
    space = build_system(sysdef, p)
    c = p.get("c", 0.1)
    cert = certify_expansive(space, c, n_max=p.get("n_max", 4), seed=run.seed)
    S = periodic_sample(space, p.get("period", 2), max_points=run.caps["points"],
                        seeds=p.get("seeds", 20), rng=np.random.default_rng(run.seed))
    R = S.restrict_generators([0])
    cc = coding_constant(space, R, cert, S, N_max=p.get("N_max", 5),
                         pairs=run.caps["pairs"], seed=run.seed, lipschitz=p.get("lipschitz"))
    run.row({"check": "coding", "N": cc.evidence["N_max"]}, cc.K, cc.K,
            cc.evidence["violations"] == 0)
    run.check("coding implication", cc.evidence["violations"] == 0, K=cc.K, **cc.evidence)
    rho, qp = dynamical_rho(S, cert)
    fm = frink_metrize(rho.quasi)
    for n in range(1, p.get("window_max", 4) + 1):
        rep = short_window_check(fm, S, n, qp)
        run.row({"check": "short-window", "N": n}, rep.checked, rep.violations, rep.ok)
        run.check(f"short window n={n}", rep.ok, checked=rep.checked)
    M = metrized_system(S, fm)
    RM = M.restrict_generators([0])
    for N in range(1, p.get("transfer_max", 4) + 1):
        for n in range(0, p.get("transfer_max", 4) + 1):
            rep = covering_transfer_check(M, RM, cc.K, qp, N, n)
            run.row({"check": "transfer", "N": N, "n": n}, rep.detail["lhs"][0],
                    rep.detail["rhs"][1], rep.ok)
            run.check(f"covering transfer N={N} n={n}", rep.ok, **rep.detail)
    if "htop_matrix" in p:
        auto = ToralAutomorphism(tuple(map(tuple, p["htop_matrix"])))
        h = toral_entropy_bracket(auto, 2.0**-6, 6).ub
        table = scale_entropy_table(RM, ladder=[2.0**-e for e in (2, 3, 4)], Ns=(1, 2))
        lhs = metric_mean_dim_estimate(table)
        rep = main_bound_evaluate(lhs, cc.K, space.k, qp.alpha, h)
        run.row({"check": "main-bound", "N": 0}, rep.detail["lhs"], rep.detail["rhs"], rep.ok)
        run.check("metric mean dimension bound", rep.ok, **rep.detail)


def task_density(run: Run):
    for i, entry in enumerate(run.params.get("sets", [])):
        lam = build_index_set(entry["set"])
        d = banach_density(lam)
        want = Fraction(str(entry["expect"]))
        ok = d.exact and d.value == want
        run.row({"set": i, "exact": d.exact}, str(d.lb), str(d.ub), ok)
        run.check(f"density set {i}", ok, value=d.value, expected=want)


def task_tower(run: Run):
    p = run.params
    rng = np.random.default_rng(run.seed)
    if "params" in p:
        tp = TowerParams(p["variant"], p["params"]["L"], p["params"]["b"], p["params"].get("a"))
        for n in range(tp.stages + 1):
            f = free_fraction(tp, n)
            run.row({"check": "fraction", "stage": n}, str(f), str(f), True)
        if "t_max" in p:
            rep = quarter_density_check(tp, p["t_max"])
            run.row({"check": "quarter", "stage": tp.stages}, p["t_max"], rep.failing_t or 0,
                    rep.ok)
            run.check("quarter density", rep.ok, failing_t=rep.failing_t, cases=rep.cases)
    if p.get("random_sets"):
        agree = 0
        for _ in range(p["random_sets"]):
            tp = _random_params(rng, p.get("variant", "sec5"), p.get("max_stages", 3),
                                p.get("max_L", 50))
            try:
                [free_fraction(tp, n) for n in range(tp.stages + 1)]
                agree += 1
            except AssertionError:
                pass
        run.row({"check": "routes", "stage": -1}, agree, p["random_sets"],
                agree == p["random_sets"])
        run.check("fraction routes agree", agree == p["random_sets"], sets=p["random_sets"])
    if "minimality" in p:
        m = p["minimality"]
        tower = Tower(build_site(m["site"]), p.get("variant", "sec5"), m.get("L", [1]),
                      target_size=m.get("target_size", 40), seed=run.seed)
        for n in m.get("stages", [1, 2]):
            rep = minimality_gap_check(tower, n, pairs=m.get("pairs", 5))
            run.row({"check": "minimality", "stage": n}, rep.max_gap, rep.bound, rep.ok)
            run.check(f"minimality gap n={n}", rep.ok, gap=rep.max_gap, bound=rep.bound,
                      offsets=rep.candidates)


def _random_params(rng, variant: str, max_stages: int, max_L: int) -> TowerParams:
    k = int(rng.integers(1, max_stages + 1))
    L, b, a = [1], [], []
    for n in range(k):
        bn = int(rng.integers(1, 4))
        an = int(rng.integers(bn, 4)) if variant == "sec6" else 1
        low = {"sec5": bn, "sec5-remark": 2 ** (n + 1) * bn * bn, "sec6": an * an * bn}[variant]
        if low >= max_L:
            bn = an = 1
            low = {"sec5": 1, "sec5-remark": 2 ** (n + 1), "sec6": 1}[variant]
        L.append(int(rng.integers(low + 1, max_L + 1)))
        b.append(bn)
        a.append(an)
    return TowerParams(variant, L, b, a if variant == "sec6" else None)


RUNNERS = {
    "entropy": task_entropy,
    "mdim": task_mdim,
    "metric-mdim": task_metric_mdim,
    "directional": task_directional,
    "frink": task_frink,
    "expansive": task_expansive,
    "coding": task_coding,
    "density": task_density,
    "tower": task_tower,
}


# --------------------------------------------------------------------------
# plumbing


def validate_config(cfg) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}")
    return cfg


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(str(e))
    return validate_config(cfg)


def rows_to_csv(rows: list[dict]) -> str:
    keys: list[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys and k not in ("lb", "ub", "verdict")]
    cols = keys + ["lb", "ub", "verdict"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run_config(cfg: dict, seed: int | None = None) -> tuple[int, dict]:
    """Run one validated config; returns ``(exit_code, report)``."""
    cfg = dict(cfg)
    if seed is not None:
        cfg["seed"] = seed
    run = Run(cfg)
    start = time.perf_counter()
    code, error = EXIT_OK, None
    try:
        RUNNERS[cfg["task"]](run)
    except ConfigError as e:
        code, error = EXIT_SCHEMA, str(e)
    except CapExceeded as e:
        code, error = EXIT_CAP, f"cap exceeded: {e}"
    except (AssertionError, QuasiAxiomViolation, WitnessViolation) as e:
        code, error = EXIT_ASSERT, f"{type(e).__name__}: {e}"
        run.check("raised", False, error=str(e), violation=getattr(e, "violation", None))
    except (ValueError, TypeError, KeyError) as e:
        # parameters the schema admits but the library rejects
        code, error = EXIT_SCHEMA, f"{type(e).__name__}: {e}"
    if code == EXIT_OK and not all(a["ok"] for a in run.assertions):
        code = EXIT_ASSERT
    wall = time.perf_counter() - start
    report = {
        "task": cfg,
        "rows": run.rows,
        "assertions": run.assertions,
        "error": error,
        "exit_code": code,
        "provenance": {"seed": cfg["seed"], "caps": run.caps, "wall_seconds": wall,
                       "version": __version__},
    }
    budget = cfg.get("budget_seconds")
    if budget is not None and code == EXIT_OK and wall > budget:
        report["assertions"].append({"name": "runtime budget", "ok": False, "wall": wall,
                                     "budget": budget})
        report["exit_code"] = code = EXIT_ASSERT
    return code, _jsonable(report)


def write_report(report: dict, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    name = report["task"]["name"]
    (out / f"{name}.csv").write_text(rows_to_csv(report["rows"]))
    (out / f"{name}.json").write_text(json.dumps(report, indent=2, default=str))


def bundled_configs() -> dict[str, dict]:
    root = resources.files("meandim") / "configs"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            cfg = json.loads(entry.read_text())
            out[cfg["name"]] = cfg
    return out


def list_examples() -> list[tuple[str, str, str]]:
    return [(n, c["task"], c.get("anchor", "")) for n, c in bundled_configs().items()]


def _summary_line(report: dict) -> str:
    ok = report["exit_code"] == 0
    return (f"{'PASS' if ok else 'FAIL'} {report['task']['name']} "
            f"({report['task']['task']}, {report['provenance']['wall_seconds']:.1f}s)"
            + ("" if ok or not report["error"] else f": {report['error']}"))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="meandim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    for t in TASKS:
        sp = sub.add_parser(t, help=f"run a {t} config")
        sp.add_argument("--config", required=True, help="JSON config path or bundled name")
        sp.add_argument("--out", default="meandim-out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, default=1)
    sp = sub.add_parser("check-all", help="run every bundled config")
    sp.add_argument("--out", default="meandim-out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--only", nargs="*", help="restrict to these config names")
    sub.add_parser("list-examples", help="print the bundled configs")
    args = ap.parse_args(argv)

    if args.cmd == "list-examples":
        for name, task, anchor in list_examples():
            print(f"{name:40s} {task:12s} {anchor}")
        return EXIT_OK

    if args.cmd == "check-all":
        cfgs = bundled_configs()
        names = args.only or list(cfgs)
        unknown = [n for n in names if n not in cfgs]
        if unknown:
            print(f"unknown configs: {unknown}", file=sys.stderr)
            return EXIT_SCHEMA
        with ThreadPoolExecutor(max(1, args.threads)) as pool:
            results = list(pool.map(lambda n: run_config(validate_config(cfgs[n]), args.seed),
                                    names))
        worst = EXIT_OK
        for code, report in results:
            write_report(report, Path(args.out))
            print(_summary_line(report))
            worst = max(worst, code)
        return worst

    try:
        path = Path(args.config)
        if path.exists():
            cfg = load_config(path)
        elif args.config in bundled_configs():
            cfg = validate_config(bundled_configs()[args.config])
        else:
            raise ConfigError(f"no such config {args.config!r}")
        if cfg["task"] != args.cmd:
            raise ConfigError(f"config is a {cfg['task']!r} task, not {args.cmd!r}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    code, report = run_config(cfg, args.seed)
    write_report(report, Path(args.out))
    print(_summary_line(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
