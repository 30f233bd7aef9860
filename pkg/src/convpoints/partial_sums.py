"""Block sums of the random series on uniform nets.

For a net of size ``N`` the character ``e(n t / N)`` only depends on
``n mod N``, so a block of coefficients is folded into residue classes and one
length-``N`` DFT yields the block sum at every net point.  Folding uses
compensated (Kahan) accumulation over aligned residue rows, so the result does
not depend on how the coefficients were chunked while being materialised.

Net point ``t`` stands for the angle ``t / N``; index ``0`` is the point the
usual ``t in {1..N}`` labelling calls ``N``.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .ladder import CoefficientModel, ScaleLadder
from .noise import SeedKey, noise_block

TWO_PI = 2.0 * math.pi
DEFAULT_TABLE_CAP = 1 << 25  # complex entries kept in memory for a full table


class KahanSum:
    """Vectorised compensated running sum (componentwise for complex arrays)."""

    def __init__(self, shape, dtype=np.complex128):
        self.s = np.zeros(shape, dtype=dtype)
        self.c = np.zeros(shape, dtype=dtype)

    def add(self, x) -> None:
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t

    @property
    def value(self) -> np.ndarray:
        return self.s.copy()


def block_coefficients(coeffs: CoefficientModel, key: SeedKey, n1: int, n2: int,
                       noise_kind: str = "rademacher", weight_power: int = 0) -> np.ndarray:
    """``c_n = noise_n * a_n * n**weight_power`` for ``n1 <= n < n2``."""
    n = np.arange(n1, n2, dtype=np.int64)
    c = coeffs.values(n) * noise_block(key, n1, n2, noise_kind)
    if weight_power:
        c = c * n.astype(np.float64) ** weight_power
    return c


def fold_residues(values: np.ndarray, n_start: int, net_size: int, chunk_rows: int | None = None,
                  acc: KahanSum | None = None) -> np.ndarray:
    """Fold ``values[i]`` (index ``n_start + i``) into residues mod ``net_size``.

    Rows ``[q N, (q+1) N)`` are added in increasing ``q`` with compensation.
    ``chunk_rows`` only bounds the working set; it does not change the result.
    """
    N = int(net_size)
    values = np.asarray(values, dtype=np.complex128)
    if acc is None:
        acc = KahanSum(N)
    if values.size == 0:
        return acc.value
    n_end = n_start + values.size
    q0, q1 = n_start // N, (n_end - 1) // N
    step = chunk_rows or (q1 - q0 + 1)
    for qa in range(q0, q1 + 1, step):
        qb = min(qa + step, q1 + 1)
        lo, hi = max(qa * N, n_start), min(qb * N, n_end)
        rows = np.zeros((qb - qa) * N, dtype=np.complex128)
        rows[lo - qa * N: hi - qa * N] = values[lo - n_start: hi - n_start]
        for row in rows.reshape(qb - qa, N):
            acc.add(row)
    return acc.value


def net_dft(folded: np.ndarray) -> np.ndarray:
    """``sum_m F[m] e(m t / N)`` for ``t = 0..N-1``."""
    return np.fft.ifft(folded, norm="forward")


def folded_block_sum(values: np.ndarray, n_start: int, net_size: int,
                     chunk_rows: int | None = None) -> np.ndarray:
    """Block sum ``sum_i values[i] e((n_start+i) t / N)`` at every net point."""
    return net_dft(fold_residues(values, n_start, net_size, chunk_rows))


# --------------------------------------------------------------------------
# tables and envelopes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NetSpec:
    scale: int
    size: int

    def angles(self) -> np.ndarray:
        return np.arange(self.size) / self.size


def default_net(ladder: ScaleLadder, k: int) -> NetSpec:
    """Blocks of scale ``k`` are tested on the net of scale ``k + 1``."""
    return NetSpec(k + 1, ladder.N_at(k + 1))


def _check_net(ladder: ScaleLadder, k: int, net: NetSpec | None) -> NetSpec:
    if not 1 <= k < ladder.K:
        raise ValueError(f"block scale {k} outside 1..{ladder.K - 1}")
    net = net or default_net(ladder, k)
    if not 1 <= net.scale <= ladder.K or net.size != ladder.N_at(net.scale):
        raise ValueError(f"net of size {net.size} does not match scale {net.scale} of the ladder")
    return net


@dataclass
class PartialSumTable:
    k: int
    net_size: int
    values: np.ndarray  # (ell_k, net_size) complex
    ladder_hash: str = ""
    seed: int = 0
    noise_kind: str = "rademacher"

    MAGIC = b"CPQTABLE"
    VERSION = 1

    @property
    def ell(self) -> int:
        return self.values.shape[0]

    def to_bytes(self) -> bytes:
        digest = bytes.fromhex(self.ladder_hash) if self.ladder_hash else bytes(32)
        head = struct.pack("<8sIIQQ32sQ", self.MAGIC, self.VERSION, self.k, self.net_size,
                           self.ell, digest, self.seed)
        return head + np.ascontiguousarray(self.values, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PartialSumTable":
        size = struct.calcsize("<8sIIQQ32sQ")
        magic, version, k, n, ell, digest, seed = struct.unpack("<8sIIQQ32sQ", blob[:size])
        if magic != cls.MAGIC or version != cls.VERSION:
            raise ValueError("not a partial-sum table dump")
        vals = np.frombuffer(blob[size:], dtype="<c16").reshape(ell, n).astype(np.complex128)
        return cls(k, n, vals, digest.hex() if any(digest) else "", seed)


@dataclass
class PrefixEnvelope:
    sup: np.ndarray       # sup_j |sum_{r<=j} Q_r|
    endpoint: np.ndarray  # |sum_{r<=ell} Q_r|


class EnvelopeAccumulator:
    """Streaming prefix maxima, rows consumed in block order."""

    def __init__(self, size: int):
        self.prefix = KahanSum(size)
        self.sup = np.zeros(size)

    def add(self, row: np.ndarray) -> None:
        self.prefix.add(row)
        np.maximum(self.sup, np.abs(self.prefix.s), out=self.sup)

    def result(self) -> PrefixEnvelope:
        return PrefixEnvelope(self.sup.copy(), np.abs(self.prefix.s))


def iter_block_sums(ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey, k: int,
                    noise_kind: str = "rademacher", net: NetSpec | None = None,
                    weight_power: int = 0, chunk_rows: int | None = None):
    """Yield ``Q_{k,j}`` on the net, ``j = 1..ell_k``, one block at a time."""
    net = _check_net(ladder, k, net)
    grid = ladder.grid(k)
    for lo, hi in zip(grid, grid[1:]):
        c = block_coefficients(coeffs, key, lo, hi, noise_kind, weight_power)
        yield folded_block_sum(c, lo, net.size, chunk_rows)


def eval_block_sums(ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey, k: int,
                    noise_kind: str = "rademacher", net: NetSpec | None = None,
                    cap: int = DEFAULT_TABLE_CAP, chunk_rows: int | None = None) -> PartialSumTable:
    net = _check_net(ladder, k, net)
    ell = ladder.ell_at(k)
    if ell * net.size > cap:
        raise MemoryError(f"table {ell} x {net.size} exceeds cap {cap}; use scale_envelope")
    rows = np.empty((ell, net.size), dtype=np.complex128)
    for j, row in enumerate(iter_block_sums(ladder, coeffs, key, k, noise_kind, net,
                                            chunk_rows=chunk_rows)):
        rows[j] = row
    return PartialSumTable(k, net.size, rows, ladder.digest(), key.seed, noise_kind)


def prefix_envelope(table: PartialSumTable | np.ndarray) -> PrefixEnvelope:
    rows = table.values if isinstance(table, PartialSumTable) else np.asarray(table)
    acc = EnvelopeAccumulator(rows.shape[1])
    for row in rows:
        acc.add(row)
    return acc.result()


def scale_envelope(ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey, k: int,
                   noise_kind: str = "rademacher", net: NetSpec | None = None) -> PrefixEnvelope:
    """Prefix envelope of scale-``k`` blocks without keeping the full table."""
    net = _check_net(ladder, k, net)
    acc = EnvelopeAccumulator(net.size)
    for row in iter_block_sums(ladder, coeffs, key, k, noise_kind, net):
        acc.add(row)
    return acc.result()


def derivative_block_sums(ladder: ScaleLadder, coeffs: CoefficientModel, key: SeedKey, k: int,
                          noise_kind: str = "rademacher", net: NetSpec | None = None) -> np.ndarray:
    """Per net point, max over block ends ``l = r_{k,j+1} - 1`` of
    ``|sum_{n=N_k}^{l} n a_n eps_n e(n theta)|``."""
    net = _check_net(ladder, k, net)
    acc = EnvelopeAccumulator(net.size)
    for row in iter_block_sums(ladder, coeffs, key, k, noise_kind, net, weight_power=1):
        acc.add(row)
    return acc.sup


# --------------------------------------------------------------------------
# direct evaluation
# --------------------------------------------------------------------------

def eval_at_angles(coeffs: CoefficientModel, key: SeedKey, n1: int, n2: int, angles,
                   noise_kind: str = "rademacher", denominator: int | None = None,
                   chunk: int = 512) -> np.ndarray:
    """``sum_{n=n1}^{n2} c_n e(n theta)`` by direct compensated summation in order of n.

    With ``denominator`` given, ``angles`` are integer numerators and the phase
    ``n t mod D`` is reduced exactly before exponentiation.
    """
    angles = np.atleast_1d(np.asarray(angles))
    acc = KahanSum(angles.shape)
    if n2 < n1:
        return acc.value
    for lo in range(n1, n2 + 1, chunk):
        hi = min(lo + chunk, n2 + 1)
        c = block_coefficients(coeffs, key, lo, hi, noise_kind)
        n = np.arange(lo, hi, dtype=np.int64)
        if denominator is None:
            frac = np.mod(np.multiply.outer(n.astype(np.float64), angles.astype(np.float64)), 1.0)
        else:
            t = angles.astype(np.int64)
            frac = np.mod(np.multiply.outer(n, t), denominator) / denominator
        terms = c[:, None] * np.exp(1j * TWO_PI * frac) if angles.ndim == 1 else \
            c.reshape((-1,) + (1,) * angles.ndim) * np.exp(1j * TWO_PI * frac)
        for row in terms:
            acc.add(row)
    return acc.value


def table_digest(table: PartialSumTable) -> str:
    return hashlib.sha256(table.to_bytes()).hexdigest()
