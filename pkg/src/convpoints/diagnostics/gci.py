"""Monte Carlo check of P(K and L) >= P(K) P(L) for symmetric convex sets
under the standard Gaussian measure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..noise import SeedKey, generator


@dataclass(frozen=True)
class Box:
    """``{x : |(R x)_i| <= h_i}``; ``R`` orthogonal (identity for axis boxes)."""

    half: np.ndarray
    rot: np.ndarray | None = None

    def contains(self, x: np.ndarray) -> np.ndarray:
        y = x if self.rot is None else x @ self.rot.T
        return np.all(np.abs(y) <= self.half, axis=1)


@dataclass(frozen=True)
class Slab:
    """``{x : |u . x| <= w}``."""

    normal: np.ndarray
    width: float

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.abs(x @ self.normal) <= self.width


@dataclass(frozen=True)
class Ellipsoid:
    """``{x : x^T A x <= 1}`` with ``A`` symmetric positive definite."""

    A: np.ndarray

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("ij,jk,ik->i", x, self.A, x) <= 1.0


@dataclass
class GCIResult:
    pKL: float
    pK: float
    pL: float
    margin: float
    stderr: float
    trials: int

    @property
    def holds(self) -> bool:
        return self.margin >= -3.0 * self.stderr


def gci_check_mc(d: int, K, L, trials: int, key: SeedKey | None = None, tag: str = "gci",
                 chunk: int = 100_000) -> GCIResult:
    """``margin = pKL - pK pL``; stderr from the influence function
    ``1_KL - pL 1_K - pK 1_L`` of the plug-in estimator."""
    if not 1 <= d <= 8:
        raise ValueError("dimension must be between 1 and 8")
    g = generator(key or SeedKey(0), tag)
    ink = np.empty(trials, dtype=bool)
    inl = np.empty(trials, dtype=bool)
    for lo in range(0, trials, chunk):
        x = g.standard_normal((min(chunk, trials - lo), d))
        ink[lo: lo + x.shape[0]] = K.contains(x)
        inl[lo: lo + x.shape[0]] = L.contains(x)
    both = ink & inl
    pK, pL, pKL = ink.mean(), inl.mean(), both.mean()
    phi = both.astype(float) - pL * ink - pK * inl
    stderr = float(np.std(phi, ddof=1) / math.sqrt(trials))
    return GCIResult(float(pKL), float(pK), float(pL), float(pKL - pK * pL), stderr, trials)


def random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_set(rng: np.random.Generator, d: int):
    """A random symmetric convex set whose Gaussian measure is neither tiny nor ~1."""
    kind = rng.integers(0, 3)
    if kind == 0:
        return Box(rng.uniform(0.3, 2.0, d), random_rotation(rng, d))
    if kind == 1:
        u = rng.standard_normal(d)
        return Slab(u / np.linalg.norm(u), float(rng.uniform(0.1, 1.5)))
    Q = random_rotation(rng, d)
    radii = rng.uniform(0.5, 3.0, d) * math.sqrt(d)
    return Ellipsoid((Q * radii ** -2.0) @ Q.T)


def random_pairs(rng: np.random.Generator, count: int, d_max: int = 6):
    for _ in range(count):
        d = int(rng.integers(1, d_max + 1))
        yield d, random_set(rng, d), random_set(rng, d)
