"""One full construction: envelopes, good sets, alive and healthy sets, the
push-down measure, and survivor intervals for a single seed."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .branching import (FrostmanMeasure, GoodParams, alive_step, build_tree, frostman_push,
                        good_mask, healthy_refine, initial_measure, nesting_check, product_bound,
                        survivor_intervals)
from .dimension import IntervalSet
from .ladder import CoefficientModel, ScaleLadder
from .noise import SeedKey
from .partial_sums import scale_envelope


@dataclass
class ScaleRecord:
    k: int
    N: int
    thresholds: tuple  # (sup, endpoint); (inf, inf) at the first scale
    good: np.ndarray
    alive: np.ndarray
    healthy: np.ndarray | None = None


@dataclass
class Construction:
    ladder: ScaleLadder
    seed: int
    tau: float
    scales: list
    measure: FrostmanMeasure | None
    survivors_by_scale: list
    survivors: IntervalSet
    nesting: list
    events: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.ladder.K

    @property
    def survival_depth(self) -> int:
        depth = 0
        for rec in self.scales:
            if not rec.alive.any():
                break
            depth = rec.k
        return depth

    @property
    def extinct(self) -> bool:
        return self.survival_depth < self.K

    @property
    def nesting_ok(self) -> bool:
        return all(m >= 0 for m in self.nesting)

    def alive_counts(self) -> list:
        return [int(r.alive.sum()) for r in self.scales]


def good_masks(ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey, params: GoodParams,
               noise_kind: str = "rademacher", threads: int = 1) -> list:
    """``(thresholds, mask)`` for scales 1..K; scale 1 is all good by convention."""

    def one(k):
        env = scale_envelope(ladder, coeffs, key, k - 1, noise_kind)
        thr = params.thresholds(ladder, k)
        return thr, good_mask(env, *thr)

    ks = list(range(2, ladder.K + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rest = list(pool.map(one, ks))
    else:
        rest = [one(k) for k in ks]
    first = ((math.inf, math.inf), np.ones(ladder.N_at(1), dtype=bool))
    return [first] + rest


def run_construction(ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey,
                     params: GoodParams | None = None, tau: float = 0.9,
                     noise_kind: str = "rademacher", threads: int = 1,
                     with_measure: bool = True) -> Construction:
    params = params or GoodParams()
    masks = good_masks(ladder, coeffs, key, params, noise_kind, threads)
    tree = build_tree(ladder)
    K = ladder.K

    alive = [np.ones(ladder.N_at(1), dtype=bool)]
    for k in range(2, K + 1):
        alive.append(alive_step(alive[-1], masks[k - 1][1], tree[k - 2]))

    # healthy sets need good masks two scales ahead: scales 1..K-2
    healthy: list = []
    for l in range(1, K - 1):
        if l == 1:
            h = healthy_refine(None, None, tree[0], tree[1], None, masks[1][1], masks[2][1],
                               ladder.M_at(2), ladder.M_at(3), tau)
        else:
            h = healthy_refine(healthy[-1], tree[l - 2], tree[l - 1], tree[l], masks[l - 1][1],
                               masks[l][1], masks[l + 1][1], ladder.M_at(l + 1), ladder.M_at(l + 2), tau)
        healthy.append(h)

    measure = None
    if with_measure and healthy:
        measure = initial_measure(ladder, healthy[0])
        for l in range(1, len(healthy)):
            frostman_push(measure, ladder, tree[l - 1], tree[l], masks[l + 1][1], healthy[l], tau)

    scales = [ScaleRecord(k, ladder.N_at(k), masks[k - 1][0], masks[k - 1][1], alive[k - 1],
                          healthy[k - 1] if k - 1 < len(healthy) else None)
              for k in range(1, K + 1)]
    per_scale, survivors = survivor_intervals(ladder, alive)
    return Construction(ladder, key.seed, tau, scales, measure, per_scale, survivors,
                        nesting_check(ladder), list(measure.events) if measure else [])


def measure_checks(c: Construction) -> dict:
    """Exact mass conservation and the per-interval product bound at every level."""
    m = c.measure
    if m is None:
        return {"levels": 0, "mass_conserved": True, "product_bound": True}
    conserved, bounded = True, True
    for i, lev in enumerate(m.levels):
        total = lev.total() + sum(m.sink_by_level[: i + 1])
        conserved &= total == 1
        cap = product_bound(c.ladder, lev.scale, c.tau)
        bounded &= all(v <= cap for v in lev.masses.values())
    return {"levels": len(m.levels), "mass_conserved": bool(conserved), "product_bound": bool(bounded)}
