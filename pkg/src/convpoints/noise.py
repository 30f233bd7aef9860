"""Counter-based, index-addressable randomness.

Every draw is a pure function of ``(seed, stream, trial, n)``: the 64-bit word
for index ``n`` is output word ``n`` of Philox4x64-10 keyed with
``(seed, stream code)`` and with ``trial`` in the second counter limb.  Blocks
can therefore be materialised in any order, in any chunking, in parallel.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

GENERATOR_VERSION = "philox4x64-10/word-index/v1"

_MASK64 = (1 << 64) - 1
_STREAM_CODES = {"rademacher": 1, "gaussian": 2}
_TWO_M53 = 2.0 ** -53


def parse_seed(text) -> int:
    """Decimal or ``0x`` hex seed, reduced to an unsigned 64-bit integer."""
    if isinstance(text, int):
        value = text
    else:
        value = int(str(text).strip(), 0)
    if not 0 <= value <= _MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value


def stream_code(stream: str) -> int:
    if stream in _STREAM_CODES:
        return _STREAM_CODES[stream]
    if stream.startswith("aux:"):
        h = hashlib.blake2b(stream.encode(), digest_size=8).digest()
        return int.from_bytes(h, "little") | (1 << 63)
    raise ValueError(f"unknown stream {stream!r}; use 'rademacher', 'gaussian' or 'aux:<tag>'")


@dataclass(frozen=True)
class SeedKey:
    seed: int
    stream: str = "rademacher"

    def __post_init__(self):
        parse_seed(self.seed)
        stream_code(self.stream)

    def with_stream(self, stream: str) -> "SeedKey":
        return SeedKey(self.seed, stream)

    def key_words(self) -> np.ndarray:
        return np.array([self.seed, stream_code(self.stream)], dtype=np.uint64)


def raw_words(key: SeedKey, n1: int, n2: int, trial: int = 0) -> np.ndarray:
    """uint64 words for absolute indices ``n1 <= n < n2``."""
    if n2 <= n1:
        return np.zeros(0, dtype=np.uint64)
    if n1 < 0:
        raise ValueError("negative counter index")
    counter = np.array([n1 // 4, trial, 0, 0], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=key.key_words())
    off = n1 % 4
    return bitgen.random_raw(n2 - n1 + off)[off:]


def _uniform(words: np.ndarray) -> np.ndarray:
    return (words >> np.uint64(11)).astype(np.float64) * _TWO_M53


def rademacher_block(key: SeedKey, n1: int, n2: int, trial: int = 0) -> np.ndarray:
    """Signs for ``n1 <= n < n2`` as float64 +-1 (top bit of each word)."""
    w = raw_words(key, n1, n2, trial)
    return 1.0 - 2.0 * (w >> np.uint64(63)).astype(np.float64)


def gaussian_block(key: SeedKey, n1: int, n2: int, trial: int = 0) -> np.ndarray:
    """Standard normals for ``n1 <= n < n2`` by Box-Muller on words ``2n, 2n+1``."""
    if n2 <= n1:
        return np.zeros(0)
    w = raw_words(key, 2 * n1, 2 * n2, trial)
    u1 = _uniform(w[0::2])
    u2 = _uniform(w[1::2])
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)


def rademacher_at(key: SeedKey, n: int) -> int:
    if n < 1:
        raise ValueError("index must be >= 1")
    return int(rademacher_block(key, n, n + 1)[0])


def gaussian_at(key: SeedKey, n: int) -> float:
    if n < 1:
        raise ValueError("index must be >= 1")
    return float(gaussian_block(key, n, n + 1)[0])


def noise_block(key: SeedKey, n1: int, n2: int, kind: str = "rademacher", trial: int = 0) -> np.ndarray:
    """Dispatch on ``kind``: rademacher signs or gaussians (gaussian/auxiliary streams)."""
    if kind == "rademacher":
        return rademacher_block(key.with_stream("rademacher"), n1, n2, trial)
    if kind == "gaussian":
        return gaussian_block(key.with_stream("gaussian"), n1, n2, trial)
    if kind.startswith("aux:"):
        return gaussian_block(key.with_stream(kind), n1, n2, trial)
    raise ValueError(f"unknown noise kind {kind!r}")


def generator(key: SeedKey, tag: str) -> np.random.Generator:
    """Sequential Philox generator on an auxiliary stream, for bulk Monte Carlo."""
    return np.random.Generator(np.random.Philox(key=key.with_stream(f"aux:{tag}").key_words()))
