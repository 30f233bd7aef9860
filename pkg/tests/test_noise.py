import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from convpoints.noise import (GENERATOR_VERSION, SeedKey, gaussian_at, gaussian_block, noise_block,
                              parse_seed, rademacher_at, rademacher_block)

N = 10 ** 6


def test_determinism():
    k = SeedKey(42)
    assert rademacher_at(k, 17) == rademacher_at(k, 17)
    assert gaussian_at(k, 17) == gaussian_at(k, 17)
    assert rademacher_at(k, 5) in (-1, 1)


def test_sign_mean():
    s = rademacher_block(SeedKey(7), 1, N + 1)
    assert abs(s.mean()) <= 4e-3


def test_seed_cross_correlation():
    a = rademacher_block(SeedKey(7), 1, N + 1)
    b = rademacher_block(SeedKey(8), 1, N + 1)
    assert abs(np.mean(a * b)) <= 4e-3


def test_stream_separation():
    key = SeedKey(7)
    s = noise_block(key, 1, N + 1, "rademacher")
    g = noise_block(key, 1, N + 1, "gaussian")
    assert abs(np.mean(s * g)) <= 4e-3 * 1.0


def test_gaussian_variance_and_ks():
    g = gaussian_block(SeedKey(3, "gaussian"), 1, N + 1)
    assert 0.994 <= g.var() <= 1.006
    d = stats.kstest(g[: 10 ** 5], "norm").statistic
    assert d <= 1.95 / math.sqrt(10 ** 5)


@settings(max_examples=50, deadline=None)
@given(n1=st.integers(1, 10 ** 6), length=st.integers(1, 300), cut=st.integers(0, 300),
       seed=st.integers(0, 2 ** 64 - 1))
def test_chunk_invariance(n1, length, cut, seed):
    cut = min(cut, length)
    key = SeedKey(seed)
    for kind in ("rademacher", "gaussian", "aux:test"):
        whole = noise_block(key, n1, n1 + length, kind)
        parts = np.concatenate([noise_block(key, n1, n1 + cut, kind),
                                noise_block(key, n1 + cut, n1 + length, kind)])
        assert np.array_equal(whole, parts)
        # single-index access agrees with block access
        i = n1 + cut // 2
        assert noise_block(key, i, i + 1, kind)[0] == whole[i - n1]


def test_single_index_accessors_match_blocks():
    key = SeedKey(99)
    block = noise_block(key, 10, 20)
    assert [rademacher_at(key, n) for n in range(10, 20)] == block.tolist()
    g = noise_block(key, 10, 20, "gaussian")
    assert [gaussian_at(key.with_stream("gaussian"), n) for n in range(10, 20)] == g.tolist()


def test_parse_seed():
    assert parse_seed("0x10") == 16
    assert parse_seed("123") == 123
    assert parse_seed(5) == 5
    with pytest.raises(ValueError):
        parse_seed("-1")
    with pytest.raises(ValueError):
        parse_seed(str(2 ** 64))


def test_errors_and_version():
    with pytest.raises(ValueError):
        rademacher_at(SeedKey(0), 0)
    with pytest.raises(ValueError):
        SeedKey(0, "bogus")
    assert GENERATOR_VERSION
