"""Named diagnostics with default parameters, each returning a ``DiagnosticReport``."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..ladder import CoefficientModel, ScaleLadder
from ..noise import SeedKey, generator
from .brownian import small_ball_mc, small_ball_series
from .common import DiagnosticReport, combined_stderr
from .gci import gci_check_mc, random_pairs
from .lindeberg import (ACCEPTANCE_CONSTANT, dyadic_block_instance, lindeberg_discrepancy,
                        random_polynomial)
from .probability import (GOLDEN_ANGLE, event_E1_frequency, event_E2_frequency,
                          one_point_probability_mc, stay_small_sweep)
from .sieve import (equispaced_instance, large_sieve_check, load_instances, random_instance,
                    rho_correlation_count)

BUNDLED_SIEVE = Path(__file__).resolve().parent.parent / "presets" / "sieve_instances.json"

DEFAULTS = {
    "large_sieve": {"random": 1000, "R_max": 256, "n_max": 256, "instances_file": "bundled",
                    "equispaced_n": 64},
    "correlation": {"k": 1, "rho": 0.5, "subset": 32},
    "one_point": {"k": 2, "theta": GOLDEN_ANGLE, "trials": 2000, "deltas": [0.1, 0.2, 0.4, 0.8]},
    "stay_small": {"N": 100, "eps": 0.25, "deltas": [0.1, 0.2, 0.4, 1.0], "trials": 10000,
                   "mode": "sup"},
    "lindeberg": {"trials": 100000, "instances": 10, "poly_degrees": [1, 2]},
    "gci": {"instances": 50, "trials": 10000, "d_max": 6},
    "brownian": {"a_values": [0.5, 1.0, 2.0], "steps": 1000, "paths": 100000, "rel_tol": 0.05},
    "event_e1": {"k": 1, "trials": 50, "sweeps": 20, "threshold": None},
    "event_e2": {"k": 1, "trials": 50, "sweeps": 20, "threshold": None},
}
DIAGNOSTICS = tuple(DEFAULTS)


def _params(name: str, overrides: dict) -> dict:
    extra = set(overrides) - set(DEFAULTS[name])
    if extra:
        raise ValueError(f"unknown parameters for {name}: {sorted(extra)}")
    return {**DEFAULTS[name], **overrides}


def _sieve(ladder, coeffs, key, p) -> DiagnosticReport:
    rows = []
    rng = generator(key, "diag:large_sieve")
    sources = [("random", random_instance(rng, p["R_max"], p["n_max"])) for _ in range(p["random"])]
    if p["instances_file"]:
        path = BUNDLED_SIEVE if p["instances_file"] == "bundled" else Path(p["instances_file"])
        sources += [("file", inst) for inst in load_instances(path)]
    violations = 0
    for i, (src, inst) in enumerate(sources):
        r = large_sieve_check(inst)
        violations += r.verdict == "violation"
        rows.append({"source": src, "index": i, "R": inst.R, "n": inst.n, "M": inst.M,
                     "lhs": r.lhs, "rhs": r.rhs, "verdict": r.verdict})
    eq = large_sieve_check(equispaced_instance(p["equispaced_n"]))
    rel = abs(eq.lhs - eq.rhs) / eq.rhs
    rows.append({"source": "equispaced", "index": len(sources), "R": p["equispaced_n"],
                 "n": p["equispaced_n"], "M": 0, "lhs": eq.lhs, "rhs": eq.rhs, "verdict": eq.verdict})
    ok = violations == 0 and rel <= 1e-9
    return DiagnosticReport("large_sieve", p, float(violations), None, rel, ok, rows)


def _correlation(ladder, coeffs, key, p) -> DiagnosticReport:
    k = p["k"]
    size = ladder.N_at(k + 1)
    angles = np.arange(min(p["subset"], size)) / size
    rep = rho_correlation_count(ladder, coeffs, k, p["rho"], angles)
    symmetric = bool(np.array_equal(rep.value, rep.value.T))
    rows = [{"theta": float(a), "correlated": int(c)} for a, c in zip(rep.angles, rep.counts)]
    return DiagnosticReport("correlation", p, float(rep.counts.max(initial=0)), None, rep.bound,
                            symmetric, rows)


def _one_point(ladder, coeffs, key, p) -> DiagnosticReport:
    rows, est = [], []
    for d in p["deltas"]:
        r = one_point_probability_mc(ladder, CoefficientModel.scaled_sqrt(d), p["k"], p["theta"],
                                     p["trials"], key=key)
        est.append(r.rademacher)
        rows.append({"delta0": d, "rademacher": r.rademacher.estimate,
                     "rademacher_stderr": r.rademacher.stderr, "gaussian": r.gaussian.estimate,
                     "gaussian_stderr": r.gaussian.stderr})
    ok = all(b.estimate <= a.estimate + 3 * combined_stderr(a.stderr, b.stderr)
             for a, b in zip(est, est[1:]))
    return DiagnosticReport("one_point", p, est[0].estimate, est[0].stderr, None, ok, rows)


def _stay_small(ladder, coeffs, key, p) -> DiagnosticReport:
    est = stay_small_sweep(p["N"], p["eps"], p["deltas"], p["trials"], mode=p["mode"], key=key)
    rows = [{"delta0": d, "estimate": e.estimate, "stderr": e.stderr} for d, e in zip(p["deltas"], est)]
    lo, hi = est[0], est[-1]
    contrast = lo.estimate - hi.estimate >= 3 * combined_stderr(lo.stderr, hi.stderr)
    monotone = all(b.estimate <= a.estimate + 2 * combined_stderr(a.stderr, b.stderr)
                   for a, b in zip(est, est[1:]))
    return DiagnosticReport("stay_small", p, lo.estimate - hi.estimate,
                            combined_stderr(lo.stderr, hi.stderr), None, contrast and monotone, rows)


def _lindeberg(ladder, coeffs, key, p) -> DiagnosticReport:
    rng = generator(key, "diag:lindeberg")
    rows, ok = [], True
    for i in range(p["instances"]):
        a, b, f = dyadic_block_instance(rng)
        r = lindeberg_discrepancy(a, b, f, p["trials"], key, f"lindeberg:ind:{i}")
        passed = r.gap <= ACCEPTANCE_CONSTANT * r.bound
        ok &= passed
        rows.append({"functional": "smooth_indicator", "instance": i, "gap": r.gap,
                     "stderr": r.stderr, "limit": ACCEPTANCE_CONSTANT * r.bound, "pass": passed})
        for deg in p["poly_degrees"]:
            poly = random_polynomial(rng, deg)
            r = lindeberg_discrepancy(a, b, poly, p["trials"], key, f"lindeberg:poly{deg}:{i}")
            passed = r.gap <= 4 * r.stderr
            ok &= passed
            rows.append({"functional": f"poly{deg}", "instance": i, "gap": r.gap, "stderr": r.stderr,
                         "limit": 4 * r.stderr, "pass": passed})
    worst = max(r["gap"] / r["limit"] if r["limit"] > 0 else 0.0 for r in rows)
    return DiagnosticReport("lindeberg", p, worst, None, 1.0, bool(ok), rows)


def _gci(ladder, coeffs, key, p) -> DiagnosticReport:
    rng = generator(key, "diag:gci")
    rows, ok = [], True
    for i, (d, K, L) in enumerate(random_pairs(rng, p["instances"], p["d_max"])):
        r = gci_check_mc(d, K, L, p["trials"], key, f"gci:{i}")
        ok &= r.holds
        rows.append({"instance": i, "d": d, "K": type(K).__name__, "L": type(L).__name__,
                     "pKL": r.pKL, "pK": r.pK, "pL": r.pL, "margin": r.margin, "stderr": r.stderr,
                     "holds": r.holds})
    worst = min((r["margin"] / r["stderr"] if r["stderr"] > 0 else 0.0 for r in rows), default=0.0)
    return DiagnosticReport("gci", p, worst, None, -3.0, bool(ok), rows)


def _brownian(ladder, coeffs, key, p) -> DiagnosticReport:
    mc = small_ball_mc(p["a_values"], p["steps"], p["paths"], key)
    rows, ok = [], True
    for a, e in zip(p["a_values"], mc):
        s = small_ball_series(a)
        rel = abs(e.estimate - s) / s
        # the tolerance widens by the sampling error when fewer paths are used
        tol = p["rel_tol"] + 3 * e.stderr / s
        ok &= rel <= tol
        rows.append({"a": a, "series": s, "monte_carlo": e.estimate, "stderr": e.stderr,
                     "relative_gap": rel, "tolerance": tol})
    return DiagnosticReport("brownian", p, max(r["relative_gap"] for r in rows), None, p["rel_tol"],
                            bool(ok), rows)


def _events(which: str):
    fn = event_E1_frequency if which == "event_e1" else event_E2_frequency

    def run(ladder, coeffs, key, p) -> DiagnosticReport:
        rows = []
        for i in range(p["sweeps"]):
            sk = SeedKey((key.seed + i) % (1 << 64))
            r = fn(ladder, coeffs, p["k"], p["trials"], sk, p["threshold"])
            rows.append({"sweep": i, "seed": sk.seed, "frequency": r.frequency.estimate,
                         "stderr": r.frequency.stderr, "threshold": r.threshold,
                         "union_bound": r.union_bound,
                         "within_bound": r.frequency.estimate <= r.union_bound})
        share = sum(r["within_bound"] for r in rows) / len(rows)
        freq = float(np.mean([r["frequency"] for r in rows]))
        return DiagnosticReport(which, p, freq, None, rows[0]["union_bound"], share >= 0.95, rows)

    return run


RUNNERS = {
    "large_sieve": _sieve, "correlation": _correlation, "one_point": _one_point,
    "stay_small": _stay_small, "lindeberg": _lindeberg, "gci": _gci, "brownian": _brownian,
    "event_e1": _events("event_e1"), "event_e2": _events("event_e2"),
}


def run_one(name: str, ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey,
            overrides: dict | None = None) -> DiagnosticReport:
    if name not in RUNNERS:
        raise ValueError(f"unknown diagnostic {name!r}; choose from {DIAGNOSTICS}")
    p = _params(name, overrides or {})
    rep = RUNNERS[name](ladder, coeffs, key, p)
    if math.isnan(rep.estimate if rep.estimate is not None else 0.0):
        rep.verdict = False
    return rep
