"""Interval sets on the circle, box counting, and dyadic Frostman checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

SNAP = 1e-9  # relative snap of eps-grid coordinates to the nearest integer


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, disjoint closed subintervals of [0, 1] standing for R/Z.

    Intervals that wrap past 1 are stored split in two.  Degenerate
    intervals (``lo == hi``) are single points.
    """

    lo: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls()

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls(np.array([0.0]), np.array([1.0]))

    @classmethod
    def from_intervals(cls, lo, hi) -> "IntervalSet":
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("intervals need lo <= hi")
        if lo.size and np.any(hi - lo >= 1.0):
            return cls.full()
        width = hi - lo
        a = np.mod(lo, 1.0)
        b = a + width
        wrap = b > 1.0
        los = np.concatenate([a, np.zeros(wrap.sum())])
        his = np.concatenate([np.minimum(b, 1.0), b[wrap] - 1.0])
        return cls._merged(los, his)

    @classmethod
    def from_centers(cls, centers, halfwidth) -> "IntervalSet":
        c = np.asarray(centers, dtype=np.float64)
        return cls.from_intervals(c - halfwidth, c + halfwidth)

    @classmethod
    def _merged(cls, lo: np.ndarray, hi: np.ndarray) -> "IntervalSet":
        if lo.size == 0:
            return cls.empty()
        order = np.lexsort((hi, lo))
        lo, hi = lo[order], hi[order]
        run_hi = np.maximum.accumulate(hi)
        # a new component starts where lo exceeds every earlier hi
        start = np.ones(lo.size, dtype=bool)
        start[1:] = lo[1:] > run_hi[:-1]
        idx = np.flatnonzero(start)
        ends = np.append(idx[1:], lo.size) - 1
        return cls(lo[idx], run_hi[ends])

    def __len__(self) -> int:
        return int(self.lo.size)

    @property
    def is_empty(self) -> bool:
        return self.lo.size == 0

    def length(self) -> float:
        return float(np.sum(self.hi - self.lo))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet._merged(np.concatenate([self.lo, other.lo]),
                                   np.concatenate([self.hi, other.hi]))

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        if self.is_empty or other.is_empty:
            return IntervalSet.empty()
        first = np.searchsorted(other.hi, self.lo, side="left")
        last = np.searchsorted(other.lo, self.hi, side="right")
        counts = np.maximum(last - first, 0)
        ia = np.repeat(np.arange(self.lo.size), counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        ib = np.repeat(first, counts) + offsets
        lo = np.maximum(self.lo[ia], other.lo[ib])
        hi = np.minimum(self.hi[ia], other.hi[ib])
        keep = lo <= hi
        return IntervalSet._merged(lo[keep], hi[keep])

    def to_rows(self):
        return list(zip(self.lo.tolist(), self.hi.tolist()))


def intersect_all(sets) -> IntervalSet:
    sets = list(sets)
    if not sets:
        return IntervalSet.full()
    out = sets[0]
    for s in sets[1:]:
        out = out.intersect(s)
    return out


# --------------------------------------------------------------------------
# box counting
# --------------------------------------------------------------------------

def _snap(x: np.ndarray) -> np.ndarray:
    r = np.rint(x)
    return np.where(np.abs(x - r) <= SNAP * np.maximum(1.0, np.abs(x)), r, x)


def box_count(s: IntervalSet, eps: float) -> int:
    """Number of cells ``[m eps, (m+1) eps)`` meeting the set.

    Nondegenerate intervals count as half-open ``[lo, hi)``, points as
    themselves, so abutting grid-aligned intervals are not double counted.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if s.is_empty:
        return 0
    n_cells = int(math.ceil(_snap(np.array([1.0 / eps]))[0]))
    a = _snap(s.lo / eps)
    b = _snap(s.hi / eps)
    first = np.floor(a).astype(np.int64)
    last = np.where(b > a, np.ceil(b).astype(np.int64) - 1, first)
    first = np.minimum(first, n_cells - 1)
    last = np.clip(last, first, n_cells - 1)
    prev_max = np.maximum.accumulate(last)
    prev_max = np.concatenate([[-1], prev_max[:-1]])
    fresh = last - np.maximum(first, prev_max + 1) + 1
    return int(np.sum(np.maximum(fresh, 0)))


@dataclass
class DimensionFit:
    eps: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float
    residual: float
    fit_range: tuple
    defined: bool = True

    def to_dict(self) -> dict:
        return {
            "eps": self.eps.tolist(), "counts": self.counts.tolist(),
            "slope": self.slope if self.defined else None,
            "intercept": self.intercept if self.defined else None,
            "residual": self.residual if self.defined else None,
            "fit_range": list(self.fit_range), "defined": self.defined,
        }


def dimension_fit(s: IntervalSet, eps_grid, fit_range: tuple | None = None) -> DimensionFit:
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)``.

    ``fit_range`` is an ``(i, j)`` slice into the sorted (coarse to fine) grid.
    """
    eps = np.sort(np.asarray(eps_grid, dtype=np.float64))[::-1]
    counts = np.array([box_count(s, e) for e in eps], dtype=np.int64)
    i, j = fit_range or (0, eps.size)
    x, y = np.log(1.0 / eps[i:j]), counts[i:j]
    if s.is_empty or x.size < 2 or np.any(y == 0):
        return DimensionFit(eps, counts, math.nan, math.nan, math.nan, (i, j), defined=False)
    coef, res, *_ = np.polyfit(x, np.log(y), 1, full=True)
    residual = float(res[0]) if res.size else 0.0
    return DimensionFit(eps, counts, float(coef[0]), float(coef[1]), residual, (i, j))


def dyadic_grid(j_min: int, j_max: int) -> np.ndarray:
    return 2.0 ** -np.arange(j_min, j_max + 1)


def cantor_set(depth: int) -> IntervalSet:
    """Middle-thirds Cantor approximant: ``2**depth`` intervals of width ``3**-depth``."""
    lefts = np.zeros(1)
    for level in range(1, depth + 1):
        w = 3.0 ** -level
        lefts = np.concatenate([lefts, lefts + 2.0 * w])
    lefts.sort()
    return IntervalSet(lefts, lefts + 3.0 ** -depth)


# --------------------------------------------------------------------------
# Frostman exponent on dyadic intervals
# --------------------------------------------------------------------------

@dataclass
class FrostmanCheck:
    C: float
    witness: tuple  # (lo, hi) of the maximising dyadic interval
    witness_mass: Fraction
    tau: float
    levels: int

    def exact_C(self) -> Fraction | None:
        """Exact rational ``C`` when ``|I|**tau`` is rational (integer ``tau * level``)."""
        width = Fraction(self.witness[1]) - Fraction(self.witness[0])
        j = -math.log2(float(width))
        p = self.tau * j
        if p != int(p):
            return None
        return self.witness_mass * Fraction(2) ** int(p)


def _atoms(measure):
    """Normalise to sorted disjoint pieces (lo, hi, mass) inside [0, 1]."""
    if hasattr(measure, "atoms"):
        measure = measure.atoms()
    pieces = []
    for lo, hi, m in measure:
        m = Fraction(m)
        if hi - lo >= 1.0:
            pieces.append((0.0, 1.0, m))
            continue
        a = lo % 1.0
        b = a + (hi - lo)
        if b <= 1.0:
            pieces.append((a, b, m))
        else:
            left = Fraction(1.0) - Fraction(a)
            share = m * left / (Fraction(b) - Fraction(a))
            pieces.append((a, 1.0, share))
            pieces.append((0.0, b - 1.0, m - share))
    pieces.sort()
    return pieces


def _cdf(pieces, x: np.ndarray):
    """Mass to the left of each ``x``; pieces may overlap.

    A spread piece contributes ``m * clip((x - lo) / w, 0, 1)``, which is
    ``A(x) x - B(x)`` with running sums of slopes and offsets; points count
    once ``x`` is strictly past them.
    """
    lo = np.array([p[0] for p in pieces])
    hi = np.array([p[1] for p in pieces])
    mass = np.array([float(p[2]) for p in pieces])
    spread = hi > lo
    out = np.zeros_like(x, dtype=np.float64)
    if np.any(~spread):
        pts, pm = lo[~spread], mass[~spread]
        order = np.argsort(pts)
        csum = np.concatenate([[0.0], np.cumsum(pm[order])])
        out += csum[np.searchsorted(pts[order], x, side="left")]
    if np.any(spread):
        l, h, m = lo[spread], hi[spread], mass[spread]
        slope = m / (h - l)
        ol, oh = np.argsort(l), np.argsort(h)
        sl = np.concatenate([[0.0], np.cumsum(slope[ol])])
        bl = np.concatenate([[0.0], np.cumsum((slope * l)[ol])])
        sh = np.concatenate([[0.0], np.cumsum(slope[oh])])
        bh = np.concatenate([[0.0], np.cumsum((slope * h)[oh])])
        i = np.searchsorted(l[ol], x, side="left")
        j = np.searchsorted(h[oh], x, side="left")
        out += (sl[i] - sh[j]) * x - (bl[i] - bh[j])
    return out


def _exact_mass(pieces, a: float, b: float) -> Fraction:
    A, B = Fraction(a), Fraction(b)
    total = Fraction(0)
    for lo, hi, m in pieces:
        L, H = Fraction(lo), Fraction(hi)
        if L == H:
            if A <= L < B:
                total += m
            continue
        over = min(B, H) - max(A, L)
        if over > 0:
            total += m * over / (H - L)
    return total


def frostman_exponent_check(measure, tau: float, max_level: int | None = None) -> FrostmanCheck:
    """Max over dyadic ``I`` of ``nu(I) / |I|**tau``, mass spread uniformly on each atom.

    ``measure`` is an iterable of ``(lo, hi, mass)`` or an object with ``atoms()``.
    Levels run from the whole circle down to the first dyadic width not
    exceeding the narrowest atom.
    """
    pieces = _atoms(measure)
    if not pieces:
        return FrostmanCheck(0.0, (0.0, 1.0), Fraction(0), tau, 0)
    widths = [hi - lo for lo, hi, _ in pieces if hi > lo]
    finest = min(widths) if widths else 2.0 ** -20
    J = max(0, math.ceil(-math.log2(finest)))
    if max_level is not None:
        J = min(J, max_level)
    if J > 24:
        raise ValueError(f"finest dyadic level {J} too deep for an exhaustive check")
    best = (-1.0, 0, 0)
    for j in range(J + 1):
        edges = np.arange(2 ** j + 1) / 2 ** j
        F = _cdf(pieces, edges)
        F[-1] = sum(float(p[2]) for p in pieces)
        nu = np.diff(F)
        ratio = nu / (2.0 ** -j) ** tau
        m = int(np.argmax(ratio))
        if ratio[m] > best[0] * (1 + 1e-12):
            best = (float(ratio[m]), j, m)
    _, j, m = best
    lo, hi = m / 2 ** j, (m + 1) / 2 ** j
    exact = _exact_mass(pieces, lo, hi)
    return FrostmanCheck(float(exact) / (hi - lo) ** tau, (lo, hi), exact, tau, J)
