"""Run configuration, orchestration, and archived outputs."""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .branching import GoodParams, build_tree
from .construct import Construction, measure_checks, run_construction
from .dimension import dimension_fit, dyadic_grid, frostman_exponent_check
from .ladder import CoefficientModel, LadderConfig, build_ladder, validate_ladder
from .noise import GENERATOR_VERSION, SeedKey, parse_seed

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_EXTINCT, EXIT_NESTING = 0, 1, 2, 3
EXPERIMENTS = ("construct", "diagnose", "dimension", "sweep")
SWEEP_VARIABLES = ("delta0", "tau", "beta_child", "N1")
SEED_ENV = "CONVPOINTS_SEED"


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    ladder: LadderConfig
    coefficients: CoefficientModel
    good: GoodParams = field(default_factory=GoodParams)
    tau: float = 0.9
    noise: str = "rademacher"
    seeds: list = field(default_factory=lambda: [0])
    experiment: str = "construct"
    diagnostics: list = field(default_factory=list)
    diagnostic_params: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)
    threads: int = 1
    name: str = "run"

    def validate(self) -> None:
        self.ladder.validate()
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if self.noise not in ("rademacher", "gaussian"):
            raise ValueError("noise must be rademacher or gaussian")
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must lie in [0, 1]")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.experiment == "sweep":
            if not self.sweep:
                raise ValueError('sweep needs a "sweep" block: {"variable": ..., "values": [...]}')
            if self.sweep.get("variable") not in SWEEP_VARIABLES:
                raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}")
            if not self.sweep.get("values"):
                raise ValueError("sweep needs a list of values")
            extra = set(self.sweep) - {"variable", "values"}
            if extra:
                raise ValueError(f"unknown sweep keys: {sorted(extra)}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ladder": asdict(self.ladder),
            "coefficients": self.coefficients.to_dict(),
            "good": self.good.to_dict(),
            "tau": self.tau,
            "noise": self.noise,
            "seeds": [int(s) for s in self.seeds],
            "experiment": self.experiment,
            "diagnostics": list(self.diagnostics),
            "diagnostic_params": self.diagnostic_params,
            "sweep": self.sweep,
            "caps": self.caps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "ladder" not in d or "coefficients" not in d:
            raise ValueError("config needs 'ladder' and 'coefficients'")
        kw = dict(d)
        kw["ladder"] = LadderConfig.from_dict(d["ladder"])
        kw["coefficients"] = CoefficientModel.from_dict(d["coefficients"])
        kw["good"] = GoodParams.from_dict(d.get("good", {}))
        kw["seeds"] = [parse_seed(s) for s in d.get("seeds", [0])]
        cfg = cls(**kw)
        cfg.validate()
        return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return RunConfig.from_dict(json.load(fh))


def preset_path(name: str) -> Path:
    return Path(__file__).with_name("presets") / (name if name.endswith(".json") else f"{name}.json")


def resolve_config(spec: str) -> RunConfig:
    """A path to a JSON file, or the name of a bundled preset."""
    p = Path(spec)
    return load_config(p if p.exists() else preset_path(spec))


# --------------------------------------------------------------------------
# output writing
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


class OutputTree:
    """Writes files atomically (temp file then rename) and records their hashes."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.hashes: dict = {}

    def write_text(self, rel: str, text: str) -> None:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".partial")
        data = text.encode("utf-8")
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
        self.hashes[rel] = hashlib.sha256(data).hexdigest()

    def write_csv(self, rel: str, header, rows) -> None:
        self.write_text(rel, csv_text(header, rows))

    def write_json(self, rel: str, obj) -> None:
        self.write_text(rel, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def write_manifest(self, manifest: dict) -> None:
        manifest = dict(manifest)
        manifest["outputs"] = dict(sorted(self.hashes.items()))
        manifest["content_hash"] = hashlib.sha256(
            json.dumps(manifest["outputs"], sort_keys=True).encode()).hexdigest()
        text = json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"
        path = self.root / "manifest.json"
        tmp = path.with_name("manifest.json.partial")
        tmp.write_text(text)
        os.replace(tmp, path)


def _json_default(o):
    if isinstance(o, Fraction):
        return [o.numerator, o.denominator]
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def base_manifest(cfg: RunConfig, seed_source: str) -> dict:
    # thread count and wall time are left out so the tree depends only on inputs
    return {
        "artifact_version": __version__,
        "generator_version": GENERATOR_VERSION,
        "config": cfg.to_dict(),
        "seed_source": seed_source,
        "complete": False,
    }


# --------------------------------------------------------------------------
# construct
# --------------------------------------------------------------------------

def survivor_eps_grid(ladder) -> np.ndarray:
    return dyadic_grid(max(1, int(math.log2(ladder.N_at(1)))), int(math.log2(ladder.N_at(ladder.K))))


def construction_summary(c: Construction) -> dict:
    fit = dimension_fit(c.survivors, survivor_eps_grid(c.ladder))
    checks = measure_checks(c)
    return {
        "seed": c.seed,
        "start_scale": 1,
        "end_scale": c.survival_depth,
        "extinct": c.extinct,
        "alive": c.alive_counts(),
        "healthy": [int(r.healthy.sum()) for r in c.scales if r.healthy is not None],
        "sink_mass": c.measure.sink if c.measure else Fraction(0),
        "nesting_margins": [float(m) for m in c.nesting],
        "nesting_ok": c.nesting_ok,
        "box_slope": fit.slope if fit.defined else None,
        "measure": checks,
    }


def write_construction(out: OutputTree, prefix: str, c: Construction) -> dict:
    L = c.ladder
    out.write_text(f"{prefix}ladder.json", L.to_json() + "\n")
    m = c.measure
    rows = []
    for rec in c.scales:
        k = rec.k
        lev = m.levels[k - 1] if m and k - 1 < len(m.levels) else None
        mass = lev.total() if lev else None
        sink = sum(m.sink_by_level[:k], Fraction(0)) if lev else None
        frac = [mass.numerator, mass.denominator, sink.numerator, sink.denominator] if lev else [None] * 4
        rows.append([k, rec.N, L.M_at(k), L.ell_at(k) if k < L.K else 0, L.delta_at(k),
                     rec.thresholds[0], rec.thresholds[1],
                     int(rec.good.sum()), int(rec.alive.sum()),
                     int(rec.healthy.sum()) if rec.healthy is not None else None,
                     len(lev.masses) if lev else None, *frac,
                     c.nesting[k - 1] if k < L.K else None])
    out.write_csv(f"{prefix}scales.csv",
                  ["k", "N", "M", "ell", "delta", "sup_threshold", "endpoint_threshold", "good",
                   "alive", "healthy", "measure_support", "measure_mass_num", "measure_mass_den",
                   "sink_mass_num", "sink_mass_den", "nesting_margin"], rows)
    out.write_csv(f"{prefix}alive.csv", ["k", "t", "theta"],
                  [[r.k, int(t), int(t) / r.N] for r in c.scales for t in np.flatnonzero(r.alive)])
    child_rows = []
    for lv, rec, nxt in zip(build_tree(L), c.scales, c.scales[1:]):
        par, ok = lv.parents()
        kids = np.bincount(par[ok], minlength=lv.Np)
        good = np.bincount(par[ok & nxt.good], minlength=lv.Np)
        alive = np.bincount(par[ok & nxt.alive], minlength=lv.Np)
        for t in np.flatnonzero(rec.alive):
            child_rows.append([rec.k, int(t), int(kids[t]), int(good[t]), int(alive[t])])
    out.write_csv(f"{prefix}children.csv", ["k", "parent", "children", "good_children", "alive_children"],
                  child_rows)
    mrows = []
    if m:
        for lev in m.levels:
            for t, mass in sorted(lev.masses.items()):
                mrows.append([lev.scale, t, t / lev.net_size, lev.halfwidth, mass.numerator, mass.denominator])
    out.write_csv(f"{prefix}measure.csv", ["scale", "t", "center", "halfwidth", "mass_num", "mass_den"], mrows)
    out.write_text(f"{prefix}measure_events.txt", "".join(e + "\n" for e in (m.events if m else [])))
    out.write_csv(f"{prefix}survivors.csv", ["lo", "hi"], c.survivors.to_rows())
    fit = dimension_fit(c.survivors, survivor_eps_grid(L))
    out.write_csv(f"{prefix}box_counts.csv", ["eps", "count"], zip(fit.eps.tolist(), fit.counts.tolist()))
    return construction_summary(c)


def construct_exit_code(summaries: list) -> int:
    if any(not s["nesting_ok"] for s in summaries):
        return EXIT_NESTING
    if any(s["extinct"] for s in summaries):
        return EXIT_EXTINCT
    return EXIT_OK


def run_construct(cfg: RunConfig, out_dir, seed_source: str = "config") -> tuple[dict, int]:
    out = OutputTree(out_dir)
    manifest = base_manifest(cfg, seed_source)
    out.write_manifest(manifest)  # marks the tree incomplete until the end
    ladder = build_ladder(cfg.ladder, cfg.coefficients)
    manifest["ladder_warnings"] = validate_ladder(ladder)
    summaries = []
    for seed in cfg.seeds:
        c = run_construction(ladder, cfg.coefficients, SeedKey(seed), cfg.good, cfg.tau, cfg.noise,
                             cfg.threads)
        summaries.append(write_construction(out, f"seed_{seed}/", c))
    code = construct_exit_code(summaries)
    manifest.update(per_seed=summaries, exit_code=code, complete=True)
    out.write_manifest(manifest)
    return manifest, code


# --------------------------------------------------------------------------
# dimension
# --------------------------------------------------------------------------

def run_dimension(cfg: RunConfig, out_dir, seed_source: str = "config") -> tuple[dict, int]:
    out = OutputTree(out_dir)
    manifest = base_manifest(cfg, seed_source)
    out.write_manifest(manifest)
    ladder = build_ladder(cfg.ladder, cfg.coefficients)
    results = []
    for seed in cfg.seeds:
        c = run_construction(ladder, cfg.coefficients, SeedKey(seed), cfg.good, cfg.tau, cfg.noise,
                             cfg.threads)
        fit = dimension_fit(c.survivors, survivor_eps_grid(ladder))
        out.write_csv(f"seed_{seed}/box_counts.csv", ["eps", "count"],
                      zip(fit.eps.tolist(), fit.counts.tolist()))
        entry = {"seed": seed, "fit": fit.to_dict(), "survival_depth": c.survival_depth}
        if c.measure and c.measure.finest.masses:
            chk = frostman_exponent_check(c.measure, cfg.tau)
            exact = chk.exact_C()
            entry["frostman"] = {"tau": cfg.tau, "C": chk.C, "witness": list(chk.witness),
                                 "witness_mass": chk.witness_mass,
                                 "C_exact": exact if exact is not None else None}
        out.write_json(f"seed_{seed}/dimension.json", entry)
        results.append(entry)
    manifest.update(per_seed=results, exit_code=EXIT_OK, complete=True)
    out.write_manifest(manifest)
    return manifest, EXIT_OK


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def apply_sweep_value(cfg: RunConfig, variable: str, value) -> RunConfig:
    cfg = copy.deepcopy(cfg)
    if variable == "tau":
        cfg.tau = float(value)
    elif variable == "beta_child":
        cfg.ladder = replace(cfg.ladder, beta_child=float(value))
    elif variable == "N1":
        cfg.ladder = replace(cfg.ladder, N1=int(value))
    else:
        co = cfg.coefficients
        if co.kind == "scaled_sqrt":
            cfg.coefficients = CoefficientModel.scaled_sqrt(float(value))
        elif co.kind == "zero_prefix" and co.inner.kind == "scaled_sqrt":
            cfg.coefficients = CoefficientModel.zero_prefix(CoefficientModel.scaled_sqrt(float(value)), co.n0)
        else:
            raise ValueError("delta0 sweeps need scaled_sqrt coefficients")
    return cfg


def sweep_metrics(K: int) -> list:
    return ["survival_depth"] + [f"alive_k{k}" for k in range(1, K + 1)] + ["box_slope", "sink_mass"]


def _cell(cfg: RunConfig, variable: str, value, seed: int) -> dict:
    cell = apply_sweep_value(cfg, variable, value)
    ladder = build_ladder(cell.ladder, cell.coefficients)
    c = run_construction(ladder, cell.coefficients, SeedKey(seed), cell.good, cell.tau, cell.noise)
    s = construction_summary(c)
    vals = {"survival_depth": s["end_scale"], "box_slope": s["box_slope"],
            "sink_mass": float(s["sink_mass"])}
    for k, a in enumerate(s["alive"], start=1):
        vals[f"alive_k{k}"] = a
    return vals


def run_sweep(cfg: RunConfig, out_dir, seed_source: str = "config") -> tuple[dict, int]:
    variable, values = cfg.sweep["variable"], list(cfg.sweep["values"])
    if len(values) < 2 or len(cfg.seeds) < 3:
        log.warning("sweep with fewer than 2 values or 3 seeds gives no trend information")
    out = OutputTree(out_dir)
    manifest = base_manifest(cfg, seed_source)
    out.write_manifest(manifest)
    cells = [(v, s) for v in values for s in cfg.seeds]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda vs: _cell(cfg, variable, *vs), cells))
    else:
        results = [_cell(cfg, variable, v, s) for v, s in cells]
    K = cfg.ladder.depth
    metrics = sweep_metrics(K)
    rows = []
    for (v, s), res in zip(cells, results):
        for m in metrics:
            rows.append([variable, v, s, m, res.get(m)])
    out.write_csv("sweep.csv", ["variable", "value", "seed", "metric", "metric_value"], rows)
    summary = []
    for v in values:
        cell = [r for (vv, _), r in zip(cells, results) if vv == v]
        slopes = [r["box_slope"] if r["box_slope"] is not None else 0.0 for r in cell]
        summary.append({"value": v,
                        "median_survival_depth": statistics.median(r["survival_depth"] for r in cell),
                        "full_depth_fraction": sum(r["survival_depth"] == K for r in cell) / len(cell),
                        "median_box_slope": statistics.median(slopes)})
    out.write_json("sweep_summary.json", summary)
    manifest.update(summary=summary, exit_code=EXIT_OK, complete=True)
    out.write_manifest(manifest)
    return manifest, EXIT_OK


# --------------------------------------------------------------------------
# diagnose
# --------------------------------------------------------------------------

def run_diagnose(cfg: RunConfig, out_dir, seed_source: str = "config") -> tuple[dict, int]:
    from .diagnostics.suite import DIAGNOSTICS, run_one

    unknown = [d for d in cfg.diagnostics if d not in DIAGNOSTICS]
    if unknown:
        raise ValueError(f"unknown diagnostics: {unknown}")
    out = OutputTree(out_dir)
    manifest = base_manifest(cfg, seed_source)
    out.write_manifest(manifest)
    ladder = build_ladder(cfg.ladder, cfg.coefficients)
    key = SeedKey(cfg.seeds[0])
    verdicts = {}
    for name in cfg.diagnostics:
        rep = run_one(name, ladder, cfg.coefficients, key, cfg.diagnostic_params.get(name, {}))
        if rep.rows:
            out.write_csv(f"{name}.csv", list(rep.rows[0].keys()), [list(r.values()) for r in rep.rows])
        else:
            out.write_csv(f"{name}.csv", [], [])
        out.write_json(f"{name}.json", rep.summary())
        verdicts[name] = rep.verdict
    ok = all(verdicts.values())
    manifest.update(verdicts=verdicts, verdict=ok, exit_code=EXIT_OK if ok else EXIT_FAIL, complete=True)
    out.write_manifest(manifest)
    return manifest, manifest["exit_code"]


RUNNERS = {"construct": run_construct, "diagnose": run_diagnose, "dimension": run_dimension,
           "sweep": run_sweep}


def run(cfg: RunConfig, out_dir, seed_source: str = "config") -> tuple[dict, int]:
    t0 = time.perf_counter()
    manifest, code = RUNNERS[cfg.experiment](cfg, out_dir, seed_source)
    log.info("%s finished in %.2f s with exit code %d", cfg.experiment, time.perf_counter() - t0, code)
    return manifest, code
