"""Shared result types for the diagnostics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class MCEstimate:
    trials: int
    total: float  # number of successes, or sum of the sampled statistic
    estimate: float
    stderr: float
    seed: int

    @classmethod
    def from_flags(cls, flags: np.ndarray, seed: int) -> "MCEstimate":
        n = int(flags.size)
        s = float(np.count_nonzero(flags))
        p = s / n if n else math.nan
        return cls(n, s, p, math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else math.nan, seed)

    @classmethod
    def from_samples(cls, x: np.ndarray, seed: int) -> "MCEstimate":
        n = int(x.size)
        return cls(n, float(np.sum(x)), float(np.mean(x)),
                   float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.nan, seed)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DiagnosticReport:
    """One diagnostic's output: detail rows for CSV plus a JSON summary."""

    name: str
    params: dict
    estimate: float | None
    stderr: float | None
    bound: float | None
    verdict: bool
    rows: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"name": self.name, "params": self.params, "estimate": self.estimate,
                "stderr": self.stderr, "bound": self.bound, "verdict": self.verdict}


def combined_stderr(*errs: float) -> float:
    return math.sqrt(sum(e * e for e in errs))
