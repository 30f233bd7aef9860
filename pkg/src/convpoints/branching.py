"""Goodness tests, alive sets, the parent/child tree, healthy sets, the
push-down measure with its sink, and the smooth windows H and G.

Net points are integer indices ``t`` with angle ``t / N``.  Distances between
points of consecutive nets ``S_k`` (size ``Np``) and ``S_{k+1}`` (size ``Nc``)
are compared exactly in units of ``1 / (Np * Nc)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dimension import IntervalSet, intersect_all
from .ladder import ScaleLadder
from .partial_sums import PrefixEnvelope

log = logging.getLogger(__name__)

GOOD_MODES = ("paper", "constant_L", "custom")


# --------------------------------------------------------------------------
# goodness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodParams:
    """Thresholds for the scale-``k`` good set.

    paper:      sup <= sup_factor * delta_{k-1}**0.5, endpoint <= endpoint_factor * k**-2
    constant_L: the sup threshold is the constant ``L``
    custom:     ``sup_value``/``endpoint_value`` constants, or callables ``(k, ladder)``
    """

    mode: str = "paper"
    L: float | None = None
    sup_factor: float = 3.0
    endpoint_factor: float = 3.0
    sup_value: float | None = None
    endpoint_value: float | None = None
    sup_fn: Callable | None = field(default=None, compare=False)
    endpoint_fn: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in GOOD_MODES:
            raise ValueError(f"unknown goodness mode {self.mode!r}")
        if self.mode == "constant_L" and not (self.L and self.L > 0):
            raise ValueError("constant_L mode needs L > 0")

    def thresholds(self, ladder: ScaleLadder, k: int) -> tuple[float, float]:
        if k < 2:
            raise ValueError("goodness is defined from scale 2 on")
        end = self.endpoint_factor * k ** -2.0
        if self.mode == "paper":
            sup = self.sup_factor * math.sqrt(ladder.delta_at(k - 1))
        elif self.mode == "constant_L":
            sup = float(self.L)
        else:
            sup = self.sup_fn(k, ladder) if self.sup_fn else self.sup_value
            end = self.endpoint_fn(k, ladder) if self.endpoint_fn else self.endpoint_value
            if sup is None or end is None:
                raise ValueError("custom goodness needs both thresholds")
        if sup < 0 or end < 0:
            raise ValueError(f"negative goodness threshold at scale {k}")
        return float(sup), float(end)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "L": self.L, "sup_factor": self.sup_factor,
                "endpoint_factor": self.endpoint_factor, "sup_value": self.sup_value,
                "endpoint_value": self.endpoint_value}

    @classmethod
    def from_dict(cls, d: dict) -> "GoodParams":
        known = {"mode", "L", "sup_factor", "endpoint_factor", "sup_value", "endpoint_value"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown goodness keys: {sorted(extra)}")
        return cls(**d)


def good_mask(envelope: PrefixEnvelope, sup_threshold: float, endpoint_threshold: float) -> np.ndarray:
    """Closed inequalities on both the prefix sup and the endpoint."""
    return (envelope.sup <= sup_threshold) & (envelope.endpoint <= endpoint_threshold)


# --------------------------------------------------------------------------
# tree between consecutive nets
# --------------------------------------------------------------------------

def _circ_dist(x: np.ndarray, period: int) -> np.ndarray:
    x = np.mod(x, period)
    return np.minimum(x, period - x)


@dataclass(frozen=True)
class TreeLevel:
    """Children of ``S_k`` inside ``S_{k+1}`` within the child radius.

    ``span`` is the radius in units of ``1 / (Np * Nc)``.  Each admissible child
    is attached to its nearest parent.  Ties go to the smaller label in 1..Np,
    where label Np is the angle 1 (index 0); so a tie across 0 goes to index Np - 1.
    """

    k: int
    Np: int
    Nc: int
    span: int

    @classmethod
    def from_ladder(cls, ladder: ScaleLadder, k: int, radius=None) -> "TreeLevel":
        Np, Nc = ladder.N_at(k), ladder.N_at(k + 1)
        if radius is None:
            span = math.floor(Nc / math.log(Np) ** ladder.config.beta_child)
        else:
            span = math.floor(Fraction(radius) * Np * Nc)
        return cls(k, Np, Nc, span)

    def parents(self) -> tuple[np.ndarray, np.ndarray]:
        """Nearest parent index and admissibility for every child index."""
        s = np.arange(self.Nc, dtype=np.int64)
        q, r = np.divmod(s * self.Np, self.Nc)
        # a tie at q = 0 pits label Np against label 1; the smaller label wins
        t = np.where((2 * r > self.Nc) | ((2 * r == self.Nc) & (q == 0)), q + 1, q) % self.Np
        ok = _circ_dist(s * self.Np - t * self.Nc, self.Np * self.Nc) <= self.span
        return t, ok

    def child_counts(self) -> np.ndarray:
        t, ok = self.parents()
        return np.bincount(t[ok], minlength=self.Np)

    def children(self, t: int) -> np.ndarray:
        par, ok = self.parents()
        return np.flatnonzero(ok & (par == t))

    def near_count(self, alive: np.ndarray) -> np.ndarray:
        """For each child index, the number of alive parents within the radius
        (any parent, not only the nearest one)."""
        s = np.arange(self.Nc, dtype=np.int64)
        lo = -((self.span - s * self.Np) // self.Nc)   # ceil((s Np - span) / Nc)
        hi = (s * self.Np + self.span) // self.Nc      # floor((s Np + span) / Nc)
        a = alive.astype(np.int64)
        prefix = np.concatenate([[0], np.cumsum(a)])
        total = int(prefix[-1])

        def upto(x):  # alive parents with index in [0, x), extended periodically
            q, r = np.divmod(x, self.Np)
            return q * total + prefix[r]

        count = upto(hi + 1) - upto(lo)
        # a window wider than the circle counts every parent once
        return np.minimum(count, total)


def build_tree(ladder: ScaleLadder) -> list[TreeLevel]:
    return [TreeLevel.from_ladder(ladder, k) for k in range(1, ladder.K)]


# --------------------------------------------------------------------------
# alive and healthy sets
# --------------------------------------------------------------------------

def alive_step(prev_alive: np.ndarray, mask: np.ndarray, level: TreeLevel) -> np.ndarray:
    """Boolean alive flags at scale ``k+1`` from alive flags at scale ``k``."""
    if not prev_alive.any():
        return np.zeros(level.Nc, dtype=bool)
    return mask & (level.near_count(prev_alive) > 0)


def _count_threshold(M: int, power: float) -> float:
    return float(M) ** power


def rich_children(level_next: TreeLevel, mask_next2: np.ndarray, M_next2: int, tau: float) -> np.ndarray:
    """Flags over ``S_{l+1}``: ``|Ch(phi) & G_{l+2}| >= M_{l+2}**(1 - tau/2)``."""
    par, ok = level_next.parents()
    gc = np.bincount(par[ok & mask_next2], minlength=level_next.Np)
    return gc >= _count_threshold(M_next2, 1.0 - tau / 2.0)


def healthy_refine(parent_healthy: np.ndarray | None, level_prev: TreeLevel | None,
                   level: TreeLevel, level_next: TreeLevel, mask: np.ndarray | None,
                   mask_next: np.ndarray, mask_next2: np.ndarray,
                   M_next: int, M_next2: int, tau: float) -> np.ndarray:
    """Healthy flags at scale ``l`` (nets ``S_l``, ``S_{l+1}``, ``S_{l+2}``).

    ``parent_healthy``/``level_prev`` are None at the first scale, where every
    point is healthy by definition.
    """
    if parent_healthy is None:
        return np.ones(level.Np, dtype=bool)
    rich = mask_next & rich_children(level_next, mask_next2, M_next2, tau)
    par, ok = level.parents()
    cnt = np.bincount(par[ok & rich], minlength=level.Np)
    ppar, pok = level_prev.parents()
    par_ok = pok & parent_healthy[ppar]
    return mask & par_ok & (cnt >= _count_threshold(M_next, 1.0 - tau))


# --------------------------------------------------------------------------
# push-down measure
# --------------------------------------------------------------------------

@dataclass
class MeasureLevel:
    scale: int
    net_size: int
    halfwidth: float
    masses: dict  # net index -> Fraction

    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))


@dataclass
class FrostmanMeasure:
    levels: list
    sink: Fraction = Fraction(0)
    sink_by_level: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def finest(self) -> MeasureLevel:
        return self.levels[-1]

    def total(self, i: int = -1) -> Fraction:
        return self.levels[i].total() + sum(self.sink_by_level[: len(self.levels) if i == -1 else i + 1],
                                            Fraction(0))

    def atoms(self, i: int = -1):
        lev = self.levels[i]
        return [(t / lev.net_size - lev.halfwidth, t / lev.net_size + lev.halfwidth, m)
                for t, m in sorted(lev.masses.items())]


def initial_measure(ladder: ScaleLadder, healthy1: np.ndarray) -> FrostmanMeasure:
    idx = np.flatnonzero(healthy1)
    share = Fraction(1, len(idx)) if len(idx) else Fraction(0)
    lev = MeasureLevel(1, ladder.N_at(1), ladder.widen_radius(1), {int(t): share for t in idx})
    sink = Fraction(0) if len(idx) else Fraction(1)
    return FrostmanMeasure([lev], sink, [sink])


def frostman_push(measure: FrostmanMeasure, ladder: ScaleLadder, level: TreeLevel,
                  level_next: TreeLevel, mask_next2: np.ndarray, healthy_next: np.ndarray,
                  tau: float, enforce_split: bool = True) -> FrostmanMeasure:
    """Split each massive interval at scale ``l`` equally over ``U``.

    ``U = {phi in Ch(theta) : |Ch(phi) & G_{l+2}| >= M_{l+2}**(1 - tau/2)}``; shares
    of healthy ``phi`` stay on the circle, the rest go to the sink.  With
    ``enforce_split`` a parent whose ``U`` is smaller than ``M_{l+1}**(1 - tau)``
    sends all its mass to the sink, which keeps the per-interval product bound.
    """
    l = level.k
    cur = measure.levels[-1]
    M_next, M_next2 = ladder.M_at(l + 1), ladder.M_at(l + 2)
    rich = rich_children(level_next, mask_next2, M_next2, tau)
    par, ok = level.parents()
    kids = np.flatnonzero(ok)
    order = np.argsort(par[kids], kind="stable")
    kids = kids[order]
    bounds = np.searchsorted(par[kids], np.arange(level.Np + 1))
    need = math.ceil(_count_threshold(M_next, 1.0 - tau) - 1e-12) if enforce_split else 1
    masses: dict = {}
    to_sink = Fraction(0)
    for t in sorted(cur.masses):
        m = cur.masses[t]
        if m == 0:
            continue
        ch = kids[bounds[t]: bounds[t + 1]]
        U = ch[rich[ch]]
        if len(U) == 0 or len(U) < need:
            measure.events.append(f"scale {l}: parent {t} has |U|={len(U)} < {need}; mass to sink")
            log.info(measure.events[-1])
            to_sink += m
            continue
        share = m / len(U)
        for phi in U:
            if healthy_next[phi]:
                masses[int(phi)] = masses.get(int(phi), Fraction(0)) + share
            else:
                to_sink += share
    new = MeasureLevel(l + 1, ladder.N_at(l + 1), ladder.widen_radius(l + 1), masses)
    measure.levels.append(new)
    measure.sink += to_sink
    measure.sink_by_level.append(to_sink)
    return measure


def product_bound(ladder: ScaleLadder, l: int, tau: float) -> Fraction:
    """``1 / (N_1 * prod_{j=2..l} ceil(M_j**(1 - tau)))``, exact."""
    den = ladder.N_at(1)
    for j in range(2, l + 1):
        den *= math.ceil(_count_threshold(ladder.M_at(j), 1.0 - tau) - 1e-12)
    return Fraction(1, den)


# --------------------------------------------------------------------------
# smooth windows
# --------------------------------------------------------------------------

def _s(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def smooth_window_H(z) -> np.ndarray:
    """Radial bump: 1 on |z| <= 1, 0 on |z| >= 2, exp(-1/x) partition in between."""
    r = np.abs(np.asarray(z))
    a, b = _s(2.0 - r), _s(r - 1.0)
    with np.errstate(invalid="ignore"):
        mid = a / (a + b)
    out = np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, mid))
    return out if out.ndim else float(out)


def soft_good_score(w, k: int, delta: float) -> np.ndarray:
    """``H(k**2 * sum w) * prod_j H(delta**-0.25 * prefix_j)`` over the last axis."""
    w = np.asarray(w, dtype=np.complex128)
    prefix = np.cumsum(w, axis=-1)
    g = smooth_window_H(k ** 2 * prefix[..., -1])
    g = g * np.prod(smooth_window_H(delta ** -0.25 * prefix), axis=-1)
    return g


def hard_good(w, k: int, delta: float, factor: float = 1.0) -> np.ndarray:
    """Indicator of all prefixes <= factor*delta**0.25 and endpoint <= factor*k**-2."""
    prefix = np.cumsum(np.asarray(w, dtype=np.complex128), axis=-1)
    return (np.all(np.abs(prefix) <= factor * delta ** 0.25, axis=-1)
            & (np.abs(prefix[..., -1]) <= factor * k ** -2.0))


def relaxed_support(w, k: int, delta: float) -> np.ndarray:
    """Where G can be nonzero: all prefixes < 2 delta**0.25 and endpoint < 2 k**-2."""
    prefix = np.cumsum(np.asarray(w, dtype=np.complex128), axis=-1)
    return (np.all(np.abs(prefix) < 2.0 * delta ** 0.25, axis=-1)
            & (np.abs(prefix[..., -1]) < 2.0 * k ** -2.0))


def branching_statistic(candidates, table_values: np.ndarray, k: int, delta: float) -> float:
    """``X = sum over candidate net indices of G(Q_1(z), ..., Q_ell(z))``."""
    idx = np.asarray(candidates, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    w = np.asarray(table_values)[:, idx].T
    return float(np.sum(soft_good_score(w, k, delta)))


# --------------------------------------------------------------------------
# survivors and nesting
# --------------------------------------------------------------------------

def survivor_intervals(ladder: ScaleLadder, members_by_scale: list) -> tuple[list, IntervalSet]:
    """Per scale the union of ``t/N_k +- N_k**-1 (log N_k)**-beta_widen``, and their intersection."""
    per_scale = []
    for k, members in enumerate(members_by_scale, start=1):
        idx = np.flatnonzero(members) if np.asarray(members).dtype == bool else np.asarray(members)
        per_scale.append(IntervalSet.from_centers(idx / ladder.N_at(k), ladder.widen_radius(k)))
    return per_scale, intersect_all(per_scale)


def nesting_margin(ladder: ScaleLadder, k: int, literal: bool = False) -> float:
    """``1 - (rho_k / w_k + w_{k+1} / w_k)`` with child radius rho and widening w.

    Nonnegative margin means every widened child interval sits inside its
    parent's widened interval.  ``literal`` evaluates the inequality with the
    widening exponents written with negative sign in the ratio term, a
    stricter variant kept for comparison.
    """
    c = ladder.config
    Lk, Lk1 = math.log(ladder.N_at(k)), math.log(ladder.N_at(k + 1))
    ratio = ladder.N_at(k) / ladder.N_at(k + 1)
    first = Lk ** (c.beta_widen - c.beta_child)
    second = ratio * (Lk1 / Lk) ** c.beta_widen if literal else ratio * (Lk / Lk1) ** c.beta_widen
    return 1.0 - (first + second)


def nesting_check(ladder: ScaleLadder, literal: bool = False) -> list[float]:
    return [nesting_margin(ladder, k, literal) for k in range(1, ladder.K)]
