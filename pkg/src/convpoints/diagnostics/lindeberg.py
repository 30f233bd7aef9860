"""Rademacher versus Gaussian inputs for functionals of two linear forms.

A functional acts on ``(Z, W) = (sum a_j x_j, sum b_j x_j)`` through the four
real coordinates ``(Re Z, Im Z, Re W, Im W)`` and publishes ``M3``, a bound on
all third-order partial derivatives in those coordinates.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..branching import smooth_window_H
from ..noise import SeedKey, generator

ACCEPTANCE_CONSTANT = 10.0


def _coords(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.stack([Z.real, Z.imag, W.real, W.imag])


@dataclass(frozen=True)
class Polynomial:
    """``sum c_alpha x^alpha`` over exponent tuples ``alpha`` of total degree <= 3."""

    terms: tuple  # ((alpha, coef), ...)
    name: str = "polynomial"

    def __post_init__(self):
        for alpha, _ in self.terms:
            if len(alpha) != 4 or sum(alpha) > 3:
                raise ValueError("exponents must be 4-tuples of total degree <= 3")

    @property
    def degree(self) -> int:
        return max((sum(a) for a, c in self.terms if c != 0), default=0)

    @property
    def M3(self) -> float:
        vals = [abs(c) * math.prod(math.factorial(e) for e in a) for a, c in self.terms if sum(a) == 3]
        return max(vals, default=0.0)

    def __call__(self, Z, W) -> np.ndarray:
        x = _coords(Z, W)
        out = np.zeros(x.shape[1])
        for alpha, c in self.terms:
            term = np.full(x.shape[1], float(c))
            for i, e in enumerate(alpha):
                if e:
                    term = term * x[i] ** e
            out += term
        return out


def monomials(degree: int):
    return [a for a in itertools.product(range(degree + 1), repeat=4) if sum(a) == degree]


def random_polynomial(rng: np.random.Generator, degree: int) -> Polynomial:
    terms = [(a, float(rng.standard_normal())) for d in range(degree + 1) for a in monomials(d)]
    return Polynomial(tuple(terms), f"poly{degree}")


@functools.lru_cache(maxsize=1)
def window_derivative_sups(h: float = 2e-3) -> tuple:
    """``D_m = max_{|beta|=m} sup |d^beta H|`` for ``m = 0..3`` on the plane, by finite differences."""
    x = np.arange(-2.1, 2.1 + h / 2, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    H = smooth_window_H(X + 1j * Y)
    sups = [float(np.max(np.abs(H)))]
    layer = [H]
    for _ in range(3):
        nxt = []
        for F in layer:
            nxt.append(np.gradient(F, h, axis=0))
            nxt.append(np.gradient(F, h, axis=1))
        sups.append(max(float(np.max(np.abs(F))) for F in nxt))
        layer = nxt
    return tuple(sups)


@dataclass(frozen=True)
class SmoothIndicator:
    """``H(Z / s) H(W / s)``: a smoothed indicator of both forms being small."""

    scale: float = 1.0
    safety: float = 1.1
    name: str = "smooth_indicator"

    @property
    def M3(self) -> float:
        D = window_derivative_sups()
        worst = max(D[i] * D[3 - i] for i in range(4))
        return self.safety * worst * self.scale ** -3

    def __call__(self, Z, W) -> np.ndarray:
        return smooth_window_H(Z / self.scale) * smooth_window_H(W / self.scale)


@dataclass
class LindebergResult:
    rademacher_mean: float
    gaussian_mean: float
    gap: float
    stderr: float
    bound: float
    trials: int


def lindeberg_discrepancy(a, b, f, trials: int, key: SeedKey | None = None, tag: str = "lindeberg",
                          chunk: int = 200_000) -> LindebergResult:
    """Means of ``f`` under independent Rademacher and Gaussian inputs.

    ``bound = M3 * sum(|a|^3 + |b|^3)``; stderr is that of the difference of
    the two independent sample means.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    key = key or SeedKey(0)
    g_r = generator(key, f"{tag}:rademacher")
    g_g = generator(key, f"{tag}:gaussian")
    sums = np.zeros(2)
    sq = np.zeros(2)
    for lo in range(0, trials, chunk):
        c = min(chunk, trials - lo)
        eps = 2.0 * g_r.integers(0, 2, size=(c, a.size)).astype(np.float64) - 1.0
        gau = g_g.standard_normal((c, a.size))
        for i, x in enumerate((eps, gau)):
            v = f(x @ a, x @ b)
            sums[i] += v.sum()
            sq[i] += (v * v).sum()
    mean = sums / trials
    var = np.maximum(sq / trials - mean ** 2, 0.0) * trials / max(trials - 1, 1)
    stderr = float(math.sqrt(var.sum() / trials))
    bound = f.M3 * float(np.sum(np.abs(a) ** 3 + np.abs(b) ** 3))
    return LindebergResult(float(mean[0]), float(mean[1]), float(abs(mean[0] - mean[1])),
                           stderr, bound, trials)


def dyadic_block_instance(rng: np.random.Generator, m_range=(3, 7)):
    """``a_n = n**-1/2 e(n theta)``, ``b_n = n**-1/2 e(n theta')`` on ``[2^m, 2^{m+1})``."""
    m = int(rng.integers(*m_range))
    n = np.arange(2 ** m, 2 ** (m + 1))
    th, th2 = rng.random(2)
    a = n ** -0.5 * np.exp(2j * math.pi * np.mod(n * th, 1.0))
    b = n ** -0.5 * np.exp(2j * math.pi * np.mod(n * th2, 1.0))
    return a, b, SmoothIndicator(float(rng.uniform(0.5, 1.5)))
