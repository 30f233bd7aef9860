"""Scale ladders, sub-scale grids and coefficient sequences.

Every other module is parameterised by a :class:`ScaleLadder`: the scales
``N_1 < N_2 < ... < N_K``, the ratios ``M_j``, the decay levels ``delta_k``
and, inside each ``[N_k, N_{k+1}]``, the geometric checkpoints ``r_{k,j}``.
Scales are 1-based in every public method, matching the usual notation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import mpmath
import numpy as np

E2 = math.e ** 2


# --------------------------------------------------------------------------
# coefficient models
# --------------------------------------------------------------------------

COEFF_KINDS = ("power_law", "scaled_sqrt", "damped", "table", "zero_prefix")


@dataclass(frozen=True)
class CoefficientModel:
    """Deterministic coefficient sequence ``a_n``, ``n >= 1``.

    Use the classmethod constructors rather than building instances by hand.
    """

    kind: str
    alpha: float = 0.5
    delta0: float = 1.0
    table: tuple = ()
    inner: "CoefficientModel | None" = None
    n0: int = 0

    def __post_init__(self):
        if self.kind not in COEFF_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "zero_prefix" and self.inner is None:
            raise ValueError("zero_prefix needs an inner model")

    @classmethod
    def power_law(cls, alpha: float) -> "CoefficientModel":
        return cls("power_law", alpha=float(alpha))

    @classmethod
    def scaled_sqrt(cls, delta0: float) -> "CoefficientModel":
        return cls("scaled_sqrt", delta0=float(delta0))

    @classmethod
    def damped(cls) -> "CoefficientModel":
        return cls("damped")

    @classmethod
    def from_table(cls, values: Sequence[complex]) -> "CoefficientModel":
        return cls("table", table=tuple(complex(v) for v in values))

    @classmethod
    def zero_prefix(cls, inner: "CoefficientModel", n0: int) -> "CoefficientModel":
        return cls("zero_prefix", inner=inner, n0=int(n0))

    def values(self, n) -> np.ndarray:
        """Vectorised ``a_n`` for an integer array ``n >= 1`` (complex128)."""
        n = np.asarray(n, dtype=np.int64)
        if n.size and n.min() < 1:
            raise ValueError("coefficient index must be >= 1")
        x = n.astype(np.float64)
        if self.kind == "power_law":
            return (x ** -self.alpha).astype(np.complex128)
        if self.kind == "scaled_sqrt":
            return (self.delta0 / np.sqrt(x)).astype(np.complex128)
        if self.kind == "damped":
            return (1.0 / (np.sqrt(x) * np.log(np.log(x + E2)))).astype(np.complex128)
        if self.kind == "table":
            if n.size and n.max() > len(self.table):
                raise IndexError(
                    f"table coefficient index {int(n.max())} beyond table length {len(self.table)}")
            tab = np.asarray(self.table, dtype=np.complex128)
            return tab[n - 1]
        # zero_prefix
        out = np.zeros(n.shape, dtype=np.complex128)
        keep = n > self.n0
        if keep.any():
            out[keep] = self.inner.values(n[keep])
        return out

    def weighted_sup(self, start: int, power: float, stop: int | None = None) -> float:
        """``sup_{n >= start} n**power * |a_n|``.

        Closed form for the monotone kinds; a scan for tables, whose tail past
        the table end counts as zero.
        """
        if self.kind == "zero_prefix":
            return self.inner.weighted_sup(max(start, self.n0 + 1), power, stop)
        if self.kind == "table":
            hi = len(self.table) if stop is None else min(stop, len(self.table))
            if start > hi:
                return 0.0
            n = np.arange(start, hi + 1)
            return float(np.max(n.astype(np.float64) ** power * np.abs(self.values(n))))
        if self.kind == "power_law":
            expo = power - self.alpha
        elif self.kind == "scaled_sqrt":
            expo = power - 0.5
        else:  # damped: n**(power - 1/2) / loglog(n + e^2)
            expo = power - 0.5
        if expo > 0:
            return math.inf
        return float(start ** power * abs(complex(self.values([start])[0])))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power_law":
            d["alpha"] = self.alpha
        elif self.kind == "scaled_sqrt":
            d["delta0"] = self.delta0
        elif self.kind == "table":
            d["table"] = [[v.real, v.imag] for v in self.table]
        elif self.kind == "zero_prefix":
            d["inner"] = self.inner.to_dict()
            d["n0"] = self.n0
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientModel":
        d = dict(d)
        kind = d.pop("kind", None)
        allowed = {"power_law": {"alpha"}, "scaled_sqrt": {"delta0"}, "damped": set(),
                   "table": {"table"}, "zero_prefix": {"inner", "n0"}}
        if kind not in allowed:
            raise ValueError(f"unknown coefficient kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise ValueError(f"unknown keys for {kind} coefficients: {sorted(extra)}")
        if kind == "power_law":
            return cls.power_law(d.get("alpha", 0.5))
        if kind == "scaled_sqrt":
            return cls.scaled_sqrt(d.get("delta0", 1.0))
        if kind == "damped":
            return cls.damped()
        if kind == "table":
            return cls.from_table([complex(*v) if isinstance(v, (list, tuple)) else complex(v)
                                   for v in d["table"]])
        return cls.zero_prefix(cls.from_dict(d["inner"]), d["n0"])


def coefficient_at(coeffs: CoefficientModel, n: int) -> complex:
    if n < 1:
        raise ValueError("n must be >= 1")
    return complex(coeffs.values(np.array([n]))[0])


# --------------------------------------------------------------------------
# ladder
# --------------------------------------------------------------------------

LADDER_MODES = ("paper_recursion", "geometric")
DELTA_WEIGHTS = ("inverse_sqrt", "sqrt")


@dataclass(frozen=True)
class LadderConfig:
    N1: int
    depth: int
    beta_sub: float = 10.0
    beta_child: float = 8.0
    beta_widen: float = 5.0
    ladder_mode: str = "paper_recursion"
    ratio: int | None = None
    log_base: str = "natural"
    # n**-1/2 (as displayed in the delta_k definition) or n**+1/2 weighting
    delta_weight: str = "inverse_sqrt"

    def validate(self) -> None:
        if self.N1 < 8:
            raise ValueError(f"N1 must be >= 8 so that log log N1 > 0 (got {self.N1})")
        if self.depth < 2:
            raise ValueError("depth must be >= 2")
        if self.log_base != "natural":
            raise ValueError("only the natural logarithm is supported")
        if self.ladder_mode not in LADDER_MODES:
            raise ValueError(f"unknown ladder_mode {self.ladder_mode!r}")
        if self.ladder_mode == "geometric":
            if self.ratio is None or int(self.ratio) != self.ratio or self.ratio < 2:
                raise ValueError("geometric mode needs an integer ratio >= 2")
        if self.delta_weight not in DELTA_WEIGHTS:
            raise ValueError(f"unknown delta_weight {self.delta_weight!r}")
        for name in ("beta_sub", "beta_child", "beta_widen"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "LadderConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown ladder keys: {sorted(extra)}")
        return cls(**d)


def _floor_log(x: int) -> int:
    with mpmath.workdps(60):
        return int(mpmath.floor(mpmath.log(x)))


def _floor_loglog(x: int) -> int:
    with mpmath.workdps(60):
        return int(mpmath.floor(mpmath.log(mpmath.log(x))))


def paper_ratio(N: int) -> int:
    """``floor(log N) ** floor(log log N)`` evaluated exactly."""
    return _floor_log(N) ** _floor_loglog(N)


@dataclass(frozen=True)
class ScaleLadder:
    config: LadderConfig
    N: tuple
    M: tuple  # M_2 .. M_K
    delta: tuple  # delta_1 .. delta_K
    subscales: tuple  # grids for k = 1 .. K-1
    coeffs: CoefficientModel | None = field(default=None, compare=False)

    @property
    def K(self) -> int:
        return len(self.N)

    @property
    def ell(self) -> tuple:
        return tuple(len(g) - 1 for g in self.subscales)

    def N_at(self, k: int) -> int:
        return self.N[k - 1]

    def M_at(self, k: int) -> int:
        """``M_k``; by convention ``M_1 = N_1``."""
        return self.N[0] if k == 1 else self.M[k - 2]

    def delta_at(self, k: int) -> float:
        return self.delta[k - 1]

    def grid(self, k: int) -> tuple:
        if not 1 <= k < self.K:
            raise IndexError(f"no sub-scale grid for scale {k}")
        return self.subscales[k - 1]

    def ell_at(self, k: int) -> int:
        return len(self.grid(k)) - 1

    def eta(self, k: int) -> float:
        return math.log(self.N_at(k)) ** -self.config.beta_sub

    def child_radius(self, k: int) -> float:
        return 1.0 / (self.N_at(k) * math.log(self.N_at(k)) ** self.config.beta_child)

    def widen_radius(self, k: int) -> float:
        return 1.0 / (self.N_at(k) * math.log(self.N_at(k)) ** self.config.beta_widen)

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "N": list(self.N),
            "M": list(self.M),
            "delta": [_encode_real(d) for d in self.delta],
            "subscales": [list(g) for g in self.subscales],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_json(cls, text: str) -> "ScaleLadder":
        d = json.loads(text)
        return cls(
            config=LadderConfig.from_dict(d["config"]),
            N=tuple(int(x) for x in d["N"]),
            M=tuple(int(x) for x in d["M"]),
            delta=tuple(_decode_real(x) for x in d["delta"]),
            subscales=tuple(tuple(int(x) for x in g) for g in d["subscales"]),
        )


def _encode_real(x: float):
    # JSON has no infinity; delta_1 is +inf because log 1 = 0
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _decode_real(x) -> float:
    return float(x)


def subscale_grid_between(lo: int, hi: int, eta: float) -> tuple:
    """Integer checkpoints ``lo = r_1 < ... < r_l = hi`` with ratios in [1+eta, 1+2eta].

    Equal log-spacing with target ratio ``1 + 1.5 eta``; the block count is the
    rounded ideal count, clamped into the feasible range when that range is
    non-empty.  Rounding to integers may push at most one block outside the
    ratio window, more than that is rejected.
    """
    if hi <= lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    R = hi / lo
    if R < 1 + eta:
        raise ValueError(f"ratio {R:.6g} < 1 + eta = {1 + eta:.6g}: grid cannot fit one step")
    logR = math.log(R)
    count = max(1, round(logR / math.log1p(1.5 * eta)))
    c_min = max(1, math.ceil(logR / math.log1p(2 * eta) - 1e-12))
    c_max = math.floor(logR / math.log1p(eta) + 1e-12)
    if c_min <= c_max:
        count = min(max(count, c_min), c_max)
    pts = [lo]
    for j in range(1, count):
        v = round(lo * R ** (j / count))
        if v > pts[-1]:
            pts.append(v)
    if pts[-1] >= hi:
        pts.pop()
    pts.append(hi)
    ratios = [b / a for a, b in zip(pts, pts[1:])]
    bad = sum(1 for q in ratios if not (1 + eta - 1e-12 <= q <= 1 + 2 * eta + 1e-12))
    if bad > 1:
        raise ValueError(
            f"integer rounding puts {bad} blocks outside [1+eta, 1+2eta] on [{lo}, {hi}]; "
            "use a smaller beta_sub or larger scales")
    return tuple(pts)


def build_ladder(cfg: LadderConfig, coeffs: CoefficientModel) -> ScaleLadder:
    cfg.validate()
    N = [int(cfg.N1)]
    M = []
    for _ in range(cfg.depth - 1):
        if cfg.ladder_mode == "geometric":
            m = int(cfg.ratio)
        else:
            m = paper_ratio(N[-1])
        if m < 2:
            raise ValueError(f"ladder stalls: M = {m} < 2 after N = {N[-1]}")
        M.append(m)
        N.append(N[-1] * m)
    if coeffs.kind == "table" and len(coeffs.table) < N[-1]:
        raise ValueError(f"table has {len(coeffs.table)} entries, need at least N_K = {N[-1]}")
    power = -0.5 if cfg.delta_weight == "inverse_sqrt" else 0.5
    delta = []
    for k, Nk in enumerate(N, start=1):
        floor_term = math.inf if k == 1 else math.log(k) ** -0.5
        delta.append(max(floor_term, coeffs.weighted_sup(Nk, power)))
    grids = []
    for k in range(1, len(N)):
        eta = math.log(N[k - 1]) ** -cfg.beta_sub
        grids.append(subscale_grid_between(N[k - 1], N[k], eta))
    return ScaleLadder(cfg, tuple(N), tuple(M), tuple(delta), tuple(grids), coeffs)


def subscale_grid(ladder: ScaleLadder, k: int) -> tuple:
    return ladder.grid(k)


def validate_ladder(ladder: ScaleLadder) -> list[str]:
    """Non-fatal warnings about growth conditions that only hold asymptotically."""
    out = []
    for k in range(1, ladder.K):
        Mk1 = ladder.M_at(k + 1)
        if Mk1 < math.log(ladder.N_at(k)):
            out.append(f"M_{k + 1} = {Mk1} < log N_{k} = {math.log(ladder.N_at(k)):.3f}")
    return out
