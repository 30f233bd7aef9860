"""Monte Carlo frequencies of the single-point events and of the two
regularity events (within-block oscillation, derivative size)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..ladder import CoefficientModel, ScaleLadder
from ..noise import SeedKey, generator
from .common import MCEstimate

TWO_PI = 2.0 * math.pi
GOLDEN_ANGLE = (math.sqrt(5.0) - 1.0) / 2.0


def _signs(g: np.random.Generator, shape) -> np.ndarray:
    return 2.0 * g.integers(0, 2, size=shape).astype(np.float64) - 1.0


def _draw(g: np.random.Generator, kind: str, shape) -> np.ndarray:
    return _signs(g, shape) if kind == "rademacher" else g.standard_normal(shape)


# --------------------------------------------------------------------------
# one point good probability
# --------------------------------------------------------------------------

@dataclass
class OnePointResult:
    rademacher: MCEstimate
    gaussian: MCEstimate
    thresholds: tuple


def one_point_probability_mc(ladder: ScaleLadder, coeffs: CoefficientModel, k: int, theta: float,
                             trials: int, thresholds: tuple | None = None,
                             key: SeedKey | None = None, chunk: int = 2000) -> OnePointResult:
    """Frequency of ``sup_j |prefix_j| <= s`` and ``|endpoint| <= e`` for scale-``(k-1)`` blocks.

    Default thresholds are ``(delta_{k-1}**0.5, k**-2)``.  The same random
    inputs are used for every coefficient model at a given key, so estimates
    for rescaled coefficients are directly comparable.
    """
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    key = key or SeedKey(0)
    if thresholds is None:
        thresholds = (math.sqrt(ladder.delta_at(k - 1)), k ** -2.0)
    sup_t, end_t = thresholds
    grid = np.asarray(ladder.grid(k - 1))
    n = np.arange(grid[0], grid[-1])
    c = coeffs.values(n) * np.exp(1j * TWO_PI * np.mod(n * theta, 1.0))
    ends = grid[1:] - grid[0] - 1
    out = {}
    for kind in ("rademacher", "gaussian"):
        g = generator(key, f"one_point:{k}:{kind}")
        ok = np.empty(trials, dtype=bool)
        for lo in range(0, trials, chunk):
            m = min(chunk, trials - lo)
            prefix = np.cumsum(_draw(g, kind, (m, n.size)) * c, axis=1)[:, ends]
            mag = np.abs(prefix)
            ok[lo: lo + m] = (mag.max(axis=1) <= sup_t) & (mag[:, -1] <= end_t)
        out[kind] = MCEstimate.from_flags(ok, key.seed)
    return OnePointResult(out["rademacher"], out["gaussian"], (sup_t, end_t))


# --------------------------------------------------------------------------
# staying small over one long block
# --------------------------------------------------------------------------

STAY_MODES = ("sup", "inf")


def stay_small_statistic(N: int, trials: int, theta: float = GOLDEN_ANGLE, mode: str = "sup",
                         key: SeedKey | None = None, chunk: int = 250) -> np.ndarray:
    """Per trial, ``sup`` (or ``inf``) over ``N <= j <= N**2`` of
    ``|sum_{n=N}^{j} eps_n n**-1/2 z**n|`` with unit coefficient scale."""
    if mode not in STAY_MODES:
        raise ValueError(f"mode must be one of {STAY_MODES}")
    key = key or SeedKey(0)
    g = generator(key, f"stay_small:{N}")
    n = np.arange(N, N * N + 1)
    c = n ** -0.5 * np.exp(1j * TWO_PI * np.mod(n * theta, 1.0))
    stat = np.empty(trials)
    for lo in range(0, trials, chunk):
        m = min(chunk, trials - lo)
        mag = np.abs(np.cumsum(_signs(g, (m, n.size)) * c, axis=1))
        stat[lo: lo + m] = mag.max(axis=1) if mode == "sup" else mag.min(axis=1)
    return stat


def stay_small_probability_mc(N: int, eps: float, delta0: float, trials: int,
                              theta: float = GOLDEN_ANGLE, mode: str = "sup",
                              key: SeedKey | None = None) -> MCEstimate:
    """Frequency that the prefixes of the block ``[N, N**2]`` with ``a_n = delta0 n**-1/2``
    all stay within ``eps`` (``sup``) or come within ``eps`` at least once (``inf``)."""
    stat = stay_small_statistic(N, trials, theta, mode, key)
    return MCEstimate.from_flags(delta0 * stat <= eps, (key or SeedKey(0)).seed)


def stay_small_sweep(N: int, eps: float, deltas, trials: int, theta: float = GOLDEN_ANGLE,
                     mode: str = "sup", key: SeedKey | None = None) -> list:
    """Estimates for several ``delta0`` from one set of paths (common random numbers)."""
    stat = stay_small_statistic(N, trials, theta, mode, key)
    seed = (key or SeedKey(0)).seed
    return [MCEstimate.from_flags(d * stat <= eps, seed) for d in deltas]


# --------------------------------------------------------------------------
# regularity events
# --------------------------------------------------------------------------

@dataclass
class EventResult:
    frequency: MCEstimate
    threshold: float
    union_bound: float
    max_statistic: np.ndarray  # per trial


def hoeffding_tail(x: float, variance: np.ndarray) -> np.ndarray:
    """``P(|sum c_n eps_n| >= x) <= 4 exp(-x**2 / (4 V))`` for complex ``c`` with ``V = sum |c_n|**2``
    (two-sided Hoeffding on the real and imaginary parts at level ``x / sqrt 2``)."""
    v = np.asarray(variance, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(v > 0, 4.0 * np.exp(-x * x / (4.0 * np.where(v > 0, v, 1.0))), 0.0)


def _check_cap(points: int, terms: int, cap: int) -> None:
    if points * terms > cap:
        raise ValueError(f"{points} points x {terms} terms exceeds the scan cap {cap}")


DEFAULT_SCAN_CAP = 1 << 24


def _net_phases(net_size: int, n: np.ndarray) -> np.ndarray:
    t = np.arange(net_size, dtype=np.int64)
    return np.exp(1j * TWO_PI * (np.multiply.outer(t, n) % net_size) / net_size)


def event_E1_frequency(ladder: ScaleLadder, coeffs: CoefficientModel, k: int, trials: int,
                       key: SeedKey | None = None, threshold: float | None = None,
                       net_size: int | None = None, cap: int = DEFAULT_SCAN_CAP) -> EventResult:
    """Frequency of ``max over net points, blocks j, and every l in block j`` of
    ``|sum_{n=r_{k,j}}^{l} eps_n a_n e(n theta)| >= threshold``.

    Default threshold ``(log N_k)**-2``; default net is ``S_{k+1}``.
    """
    key = key or SeedKey(0)
    x = math.log(ladder.N_at(k)) ** -2.0 if threshold is None else threshold
    grid = np.asarray(ladder.grid(k))
    P = net_size or ladder.N_at(k + 1)
    n = np.arange(grid[0], grid[-1])
    _check_cap(P, n.size, cap)
    a = coeffs.values(n)
    phases = _net_phases(P, n) * a[None, :]
    block = np.searchsorted(grid, n, side="right") - 1
    starts = np.flatnonzero(np.diff(np.concatenate([[-1], block])))
    var = np.concatenate([np.cumsum(np.abs(a[s:e]) ** 2)
                          for s, e in zip(starts, np.append(starts[1:], n.size))])
    bound = float(min(1.0, P * hoeffding_tail(x, var).sum()))
    g = generator(key, f"E1:{k}")
    stat = np.empty(trials)
    for i in range(trials):
        w = phases * _signs(g, n.size)[None, :]
        best = 0.0
        for s, e in zip(starts, np.append(starts[1:], n.size)):
            best = max(best, float(np.abs(np.cumsum(w[:, s:e], axis=1)).max()))
        stat[i] = best
    return EventResult(MCEstimate.from_flags(stat >= x, key.seed), x, bound, stat)


def event_E2_frequency(ladder: ScaleLadder, coeffs: CoefficientModel, k: int, trials: int,
                       key: SeedKey | None = None, threshold: float | None = None,
                       net_size: int | None = None, cap: int = DEFAULT_SCAN_CAP) -> EventResult:
    """Frequency of ``max over net points and N_k <= l < N_{k+1}`` of
    ``|sum_{j=N_k}^{l} j a_j eps_j e(j theta)| >= threshold`` (default ``N_{k+1} log N_{k+1}``)."""
    key = key or SeedKey(0)
    Nk1 = ladder.N_at(k + 1)
    x = Nk1 * math.log(Nk1) if threshold is None else threshold
    P = net_size or Nk1
    n = np.arange(ladder.N_at(k), Nk1)
    _check_cap(P, n.size, cap)
    a = coeffs.values(n) * n
    phases = _net_phases(P, n) * a[None, :]
    var = np.cumsum(np.abs(a) ** 2)
    bound = float(min(1.0, P * hoeffding_tail(x, var).sum()))
    g = generator(key, f"E2:{k}")
    stat = np.empty(trials)
    for i in range(trials):
        stat[i] = float(np.abs(np.cumsum(phases * _signs(g, n.size)[None, :], axis=1)).max())
    return EventResult(MCEstimate.from_flags(stat >= x, key.seed), x, bound, stat)
