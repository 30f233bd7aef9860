"""Probability that Brownian motion stays in [-a, a] up to time 1."""

from __future__ import annotations

import math

import numpy as np

from ..noise import SeedKey, generator
from .common import MCEstimate

# -zeta(1/2)/sqrt(2 pi): shift that corrects the discrete maximum of a random walk
# toward the continuous one (Broadie-Glasserman-Kou continuity correction)
BGK_BETA = 0.5825971579390106


def small_ball_series(a: float, tol: float = 1e-16) -> float:
    """``(4/pi) sum_k (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 / (8 a^2))``, stopped once terms drop below ``tol``."""
    if a <= 0:
        raise ValueError("a must be positive")
    total, k = 0.0, 0
    c = math.pi ** 2 / (8.0 * a * a)
    while True:
        m = 2 * k + 1
        term = math.exp(-m * m * c) / m
        if term < tol:
            break
        total += term if k % 2 == 0 else -term
        k += 1
    return 4.0 / math.pi * total


def small_ball_images(a: float, tol: float = 1e-17) -> float:
    """Same probability by the method of images:
    ``sum_k (-1)^k [Phi((2k+1)a) - Phi((2k-1)a)]`` over all integers ``k``."""
    def Phi(x):
        return 0.5 * math.erfc(-x / math.sqrt(2.0))

    total = Phi(a) - Phi(-a)
    k = 1
    while True:
        term = 2.0 * (Phi((2 * k + 1) * a) - Phi((2 * k - 1) * a))
        if abs(term) < tol:
            break
        total += -term if k % 2 else term
        k += 1
    return total


def small_ball_mc(a_values, steps: int = 1000, paths: int = 10 ** 6, key: SeedKey | None = None,
                  correction: bool = True, chunk: int = 10_000) -> list:
    """Monte Carlo over shared random-walk paths; one estimate per ``a``.

    The discrete maximum undershoots the continuous one by about
    ``BGK_BETA * sqrt(dt)``; with ``correction`` the barrier is lowered by that
    amount instead of accepting the bias.
    """
    key = key or SeedKey(0)
    g = generator(key, f"brownian:{steps}")
    a_values = np.atleast_1d(np.asarray(a_values, dtype=np.float64))
    dt = 1.0 / steps
    shift = BGK_BETA * math.sqrt(dt) if correction else 0.0
    hits = np.zeros(a_values.size, dtype=np.int64)
    done = 0
    while done < paths:
        c = min(chunk, paths - done)
        x = g.standard_normal((c, steps), dtype=np.float32)
        np.cumsum(x, axis=1, out=x)
        mx = np.abs(x).max(axis=1).astype(np.float64) * math.sqrt(dt)
        hits += np.count_nonzero(mx[None, :] <= (a_values[:, None] - shift), axis=1)
        done += c
    out = []
    for h in hits:
        p = h / paths
        out.append(MCEstimate(paths, float(h), p, math.sqrt(p * (1 - p) / paths), key.seed))
    return out


def brownian_small_ball(a: float, mode: str = "series", steps: int = 1000, paths: int = 10 ** 6,
                        key: SeedKey | None = None, correction: bool = True):
    """Series value (float) or a Monte Carlo estimate (``MCEstimate``)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if mode == "series":
        return small_ball_series(a)
    if mode == "monte_carlo":
        return small_ball_mc([a], steps, paths, key, correction)[0]
    raise ValueError(f"unknown mode {mode!r}")
