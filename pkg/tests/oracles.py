"""Independent reference implementations used only by the tests.

Each oracle recomputes a quantity from its definition with a different
algorithm than the package (plain loops, exact rationals, explicit searches).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def direct_sum(c, n_start: int, net_size: int, points=None) -> np.ndarray:
    """``sum_i c[i] e((n_start+i) t / N)`` by explicit phase matrices, exact mod N."""
    c = np.asarray(c, dtype=np.complex128)
    n = np.arange(n_start, n_start + c.size, dtype=np.int64)
    t = np.arange(net_size, dtype=np.int64) if points is None else np.asarray(points, dtype=np.int64)
    out = np.empty(t.size, dtype=np.complex128)
    for i in range(0, t.size, 64):
        tt = t[i: i + 64]
        ph = (np.multiply.outer(tt, n) % net_size) / net_size
        out[i: i + 64] = np.exp(2j * math.pi * ph) @ c
    return out


def all_prefixes(rows: np.ndarray):
    """Sup and endpoint of prefix sums, recomputed per prefix length by slicing."""
    rows = np.asarray(rows)
    sups = np.zeros(rows.shape[1])
    for j in range(1, rows.shape[0] + 1):
        sups = np.maximum(sups, np.abs(rows[:j].sum(axis=0)))
    return sups, np.abs(rows.sum(axis=0))


def circle_distance(x: Fraction, y: Fraction) -> Fraction:
    d = (x - y) % 1
    return min(d, 1 - d)


def nearest_parent(s: int, Nc: int, Np: int) -> int:
    """Linear search for the closest parent; ties go to the smaller label in 1..Np,
    where label Np is the angle 1 (index 0)."""
    x = Fraction(s, Nc)
    best, best_d = None, None
    for label in range(1, Np + 1):
        d = circle_distance(x, Fraction(label, Np))
        if best_d is None or d < best_d:
            best, best_d = label, d
    return best % Np


def children_map(Np: int, Nc: int, radius: Fraction) -> dict:
    out = {t: [] for t in range(Np)}
    for s in range(Nc):
        t = nearest_parent(s, Nc, Np)
        if circle_distance(Fraction(s, Nc), Fraction(t, Np)) <= radius:
            out[t].append(s)
    return out


def alive_oracle(prev_alive, mask, Np: int, Nc: int, radius: Fraction) -> np.ndarray:
    prev = [t for t in range(Np) if prev_alive[t]]
    out = np.zeros(Nc, dtype=bool)
    for s in range(Nc):
        if mask[s]:
            x = Fraction(s, Nc)
            out[s] = any(circle_distance(x, Fraction(t, Np)) <= radius for t in prev)
    return out


def healthy_oracle(parent_healthy, parent_of, good, ch, ch_next, good_next, good_next2,
                   M_next: int, M_next2: int, tau: float) -> np.ndarray:
    """Direct three-condition definition over explicit child lists."""
    out = np.zeros(len(good), dtype=bool)
    for theta in range(len(good)):
        if not good[theta]:
            continue
        p = parent_of.get(theta)
        if p is None or not parent_healthy[p]:
            continue
        rich = 0
        for phi in ch[theta]:
            if good_next[phi]:
                gc = sum(1 for psi in ch_next[phi] if good_next2[psi])
                if gc >= M_next2 ** (1 - tau / 2):
                    rich += 1
        out[theta] = rich >= M_next ** (1 - tau)
    return out


def brute_box_count(intervals, eps: Fraction) -> int:
    """Cells ``[m eps, (m+1) eps)`` of the unit circle meeting a list of closed intervals
    given as exact rationals in [0, 1)."""
    cells = set()
    ncell = int(1 / eps)
    for lo, hi in intervals:
        if lo == hi:
            cells.add(int(lo // eps) % ncell)
            continue
        m = lo // eps
        while m * eps < hi:
            cells.add(int(m) % ncell)
            m += 1
    return len(cells)


def cantor_intervals(depth: int):
    ivs = [(Fraction(0), Fraction(1))]
    for _ in range(depth):
        nxt = []
        for a, b in ivs:
            w = (b - a) / 3
            nxt += [(a, a + w), (b - w, b)]
        ivs = nxt
    return ivs


def small_ball_images(a: float, terms: int = 60) -> float:
    """``P(max |B_t| <= a, t <= 1)`` by the method of images with the normal CDF."""
    from scipy.stats import norm
    total = 0.0
    for k in range(-terms, terms + 1):
        lo, hi = (2 * k - 1) * a, (2 * k + 1) * a
        sign = -1 if k % 2 else 1
        total += sign * (norm.cdf(hi) - norm.cdf(lo))
    return total


def radial_window_slope_sup(samples: int = 4000) -> float:
    """``max |h'(r)|`` of the radial window profile on (1, 2) by mpmath differentiation."""
    import mpmath

    def h(r):
        a, b = mpmath.exp(-1 / (2 - r)), mpmath.exp(-1 / (r - 1))
        return a / (a + b)

    return max(abs(float(mpmath.diff(h, 1 + (i + 0.5) / samples))) for i in range(samples))


def correlation_pair(coeffs_values, n, th1: float, th2: float) -> float:
    """max over component choices of |sum u_n v_n| for one pair, by explicit loops."""
    best = 0.0
    u = [a * complex(math.cos(2 * math.pi * ((k * th1) % 1)), math.sin(2 * math.pi * ((k * th1) % 1)))
         for a, k in zip(coeffs_values, n)]
    v = [a * complex(math.cos(2 * math.pi * ((k * th2) % 1)), math.sin(2 * math.pi * ((k * th2) % 1)))
         for a, k in zip(coeffs_values, n)]
    for fu in (lambda z: z.real, lambda z: z.imag):
        for fv in (lambda z: z.real, lambda z: z.imag):
            best = max(best, abs(math.fsum(fu(x) * fv(y) for x, y in zip(u, v))))
    return best
