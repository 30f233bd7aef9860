"""Large sieve evaluation and pairwise correlation counts on a net."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..ladder import CoefficientModel, ScaleLadder

TWO_PI = 2.0 * math.pi
SIEVE_RTOL = 1e-9


def _phase(j: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``e(j * theta)`` with the product reduced mod 1 before exponentiation."""
    return np.exp(1j * TWO_PI * np.mod(np.multiply.outer(theta, j.astype(np.float64)), 1.0))


def circle_separation(phases: np.ndarray) -> float:
    """Minimum circular distance between distinct phases (inf for one phase)."""
    p = np.sort(np.mod(np.asarray(phases, dtype=np.float64), 1.0))
    if p.size < 2:
        return math.inf
    gaps = np.diff(np.concatenate([p, [p[0] + 1.0]]))
    return float(gaps.min())


@dataclass
class SieveInstance:
    M: int
    coeffs: np.ndarray  # a_{M+1}, ..., a_{M+n}
    phases: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        self.phases = np.atleast_1d(np.asarray(self.phases, dtype=np.float64))
        if self.phases.size < 1:
            raise ValueError("need at least one phase")
        if self.phases.size > 1 and self.separation <= 0:
            raise ValueError("duplicate phases: separation is zero")

    @property
    def n(self) -> int:
        return int(self.coeffs.size)

    @property
    def R(self) -> int:
        return int(self.phases.size)

    @property
    def separation(self) -> float:
        return circle_separation(self.phases)

    def to_dict(self) -> dict:
        return {"M": self.M, "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist(),
                "phases": self.phases.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SieveInstance":
        return cls(int(d["M"]), np.asarray(d["re"]) + 1j * np.asarray(d["im"]), d["phases"])


@dataclass
class SieveResult:
    lhs: float
    rhs: float
    rhs_sharp: float  # (n - 1 + 1/delta) * sum |a|^2
    holds: bool
    covered: bool
    verdict: str  # holds | not_covered | violation

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def large_sieve_check(inst: SieveInstance) -> SieveResult:
    """``sum_r |sum_j a_j e(j Theta_r)|**2`` against ``(M + 1/delta) sum |a_j|**2``.

    With one phase the reciprocal separation is taken as 0.  The inequality
    is guaranteed when the offset satisfies ``M >= n - 1`` (it then dominates
    the sharp ``n - 1 + 1/delta`` form); a failure outside that range is
    reported as not covered rather than as a violation.
    """
    j = np.arange(inst.M + 1, inst.M + inst.n + 1)
    sums = _phase(j, inst.phases) @ inst.coeffs
    lhs = float(np.sum(np.abs(sums) ** 2))
    mass = float(np.sum(np.abs(inst.coeffs) ** 2))
    inv_delta = 0.0 if inst.R == 1 else 1.0 / inst.separation
    rhs = (inst.M + inv_delta) * mass
    rhs_sharp = (inst.n - 1 + inv_delta) * mass
    holds = lhs <= rhs * (1.0 + SIEVE_RTOL)
    covered = inst.R >= 2 and inst.M >= inst.n - 1
    verdict = "holds" if holds else ("violation" if covered else "not_covered")
    return SieveResult(lhs, rhs, rhs_sharp, holds, covered, verdict)


def equispaced_instance(n: int) -> SieveInstance:
    """Offset 0, unit coefficients, phases r/n: the bound is attained."""
    return SieveInstance(0, np.ones(n), np.arange(1, n + 1) / n)


def random_instance(rng: np.random.Generator, R_max: int = 256, n_max: int = 256) -> SieveInstance:
    """Separated random phases, offset ``M >= n - 1``, mixed coefficient shapes."""
    R = int(rng.integers(1, R_max + 1))
    n = int(rng.integers(1, n_max + 1))
    M = n - 1 + int(rng.integers(0, 2 * n + 1))
    # gaps bounded below by half the average spacing
    gaps = 0.5 / R + (0.5 / R) * rng.dirichlet(np.ones(R)) * R
    gaps = gaps / gaps.sum()
    phases = np.mod(rng.random() + np.concatenate([[0.0], np.cumsum(gaps[:-1])]), 1.0)
    shape = rng.integers(0, 3)
    j = np.arange(M + 1, M + n + 1)
    if shape == 0:
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    elif shape == 1:
        a = j ** -0.5 * rng.choice([-1.0, 1.0], n)
    else:
        # aligned with the first phase, the hardest case for a single term
        a = np.exp(-1j * TWO_PI * np.mod(j * phases[0], 1.0)) * (1.0 + 0.1 * rng.standard_normal(n))
    return SieveInstance(M, a, phases)


def load_instances(path) -> list:
    with open(path) as fh:
        return [SieveInstance.from_dict(d) for d in json.load(fh)["instances"]]


def dump_instances(instances, path) -> None:
    with open(path, "w") as fh:
        json.dump({"instances": [i.to_dict() for i in instances]}, fh)


# --------------------------------------------------------------------------
# rho-correlated pairs
# --------------------------------------------------------------------------

@dataclass
class CorrelationReport:
    angles: np.ndarray
    rho: float
    value: np.ndarray  # symmetric pair statistic, diagonal set to 0
    counts: np.ndarray  # correlated partners per point
    bound: float  # rho**-2 (1/delta + |S|) * len * start**-2, max over blocks

    @property
    def pairs(self) -> int:
        return int(np.count_nonzero(np.triu(self.value >= self.rho, 1)))


DEFAULT_PAIR_CAP = 1 << 22


def correlation_matrix(coeffs: CoefficientModel, angles: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """``max over component choices |sum_{lo<=n<hi} u_n v_n|`` for all angle pairs."""
    n = np.arange(lo, hi)
    w = coeffs.values(n)[None, :] * _phase(n, np.asarray(angles))
    re, im = w.real, w.imag
    out = np.zeros((len(angles), len(angles)))
    for x in (re, im):
        for y in (re, im):
            np.maximum(out, np.abs(x @ y.T), out=out)
    return out


def rho_correlation_count(ladder: ScaleLadder, coeffs: CoefficientModel, k: int, rho: float,
                          angles=None, cap: int = DEFAULT_PAIR_CAP) -> CorrelationReport:
    """Pair statuses over every sub-block ``[r_{k,j}, r_{k,j+1})``.

    ``angles`` defaults to the net of scale ``k + 1``; cost is
    ``|S|**2 * (N_{k+1} - N_k)`` and must stay under ``cap``.
    """
    grid = ladder.grid(k)
    if angles is None:
        angles = np.arange(ladder.N_at(k + 1)) / ladder.N_at(k + 1)
    angles = np.asarray(angles, dtype=np.float64)
    S = angles.size
    if S * S * (grid[-1] - grid[0]) > cap:
        raise ValueError(f"{S} points over {grid[-1] - grid[0]} terms exceeds the pair cap {cap}")
    n = np.arange(grid[0], grid[-1])
    if np.any(np.abs(coeffs.values(n)) > n ** -0.5 * (1 + 1e-12)):
        raise ValueError("correlation counts assume |a_n| <= n**-1/2 on the range")
    value = np.zeros((S, S))
    delta = circle_separation(angles)
    bound = 0.0
    for lo, hi in zip(grid, grid[1:]):
        np.maximum(value, correlation_matrix(coeffs, angles, lo, hi), out=value)
        start = lo - 1
        bound = max(bound, rho ** -2 * (1.0 / delta + S) * (hi - lo) / start ** 2)
    np.fill_diagonal(value, 0.0)
    counts = np.count_nonzero(value >= rho, axis=1)
    return CorrelationReport(angles, rho, value, counts, bound)
