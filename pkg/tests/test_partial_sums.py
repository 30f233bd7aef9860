import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convpoints.ladder import CoefficientModel, LadderConfig, build_ladder
from convpoints.noise import SeedKey
from convpoints.partial_sums import (NetSpec, PartialSumTable, block_coefficients,
                                     derivative_block_sums, eval_at_angles, eval_block_sums,
                                     fold_residues, folded_block_sum, net_dft, prefix_envelope,
                                     scale_envelope)

from oracles import all_prefixes, direct_sum

DESK = LadderConfig(N1=16, depth=4, ladder_mode="geometric", ratio=8, beta_sub=1.0, beta_child=1.0,
                    beta_widen=0.5)


def test_single_coefficient():
    c = np.zeros(40, dtype=complex)
    c[13] = 1.0
    q = folded_block_sum(c, 100, 32)
    t = np.arange(32)
    assert np.allclose(q, np.exp(2j * math.pi * ((113 * t) % 32) / 32), atol=1e-14)
    assert np.allclose(np.abs(q), 1.0)


def test_full_residue_block():
    N = 64
    q = folded_block_sum(np.ones(N), 1, N)
    assert abs(q[0] - N) < 1e-12
    assert np.max(np.abs(q[1:])) < 1e-12


def test_random_block_matches_direct():
    rng = np.random.default_rng(0)
    c = rng.standard_normal(2048) + 1j * rng.standard_normal(2048)
    q = folded_block_sum(c, 777, 512)
    assert np.max(np.abs(q - direct_sum(c, 777, 512))) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 200), start=st.integers(0, 5000), length=st.integers(0, 900),
       chunk=st.integers(1, 7), seed=st.integers(0, 1000))
def test_fold_matches_direct_and_chunking(N, start, length, chunk, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(length) + 1j * rng.standard_normal(length)
    a = folded_block_sum(c, start, N)
    assert np.max(np.abs(a - direct_sum(c, start, N)), initial=0) <= 1e-9
    # chunked materialisation gives identical bits
    assert np.array_equal(a, folded_block_sum(c, start, N, chunk_rows=chunk))


def test_chunk_split_addition_exact():
    # splitting a block at a row boundary and adding tables equals the one-shot table
    rng = np.random.default_rng(1)
    N = 16
    c = rng.standard_normal(8 * N)
    whole = fold_residues(c, 0, N)
    from convpoints.partial_sums import KahanSum
    acc = KahanSum(N)
    fold_residues(c[: 3 * N], 0, N, acc=acc)
    fold_residues(c[3 * N:], 3 * N, N, acc=acc)
    assert np.array_equal(whole, acc.value)


def test_scaling_equivariance_exact():
    rng = np.random.default_rng(2)
    c = rng.standard_normal(300)
    assert np.array_equal(folded_block_sum(4.0 * c, 10, 64), 4.0 * folded_block_sum(c, 10, 64))


def test_parseval():
    N = 256
    c = block_coefficients(CoefficientModel.scaled_sqrt(1.0), SeedKey(5), N, 2 * N)
    q = folded_block_sum(c, N, N)
    assert abs(np.mean(np.abs(q) ** 2) / np.sum(np.abs(c) ** 2) - 1) <= 1e-6


def test_prefix_envelope_cases():
    env = prefix_envelope(np.zeros((3, 5), dtype=complex))
    assert not env.sup.any() and not env.endpoint.any()
    env = prefix_envelope(np.array([[1.0], [-1.0]], dtype=complex))
    assert env.sup[0] == 1 and env.endpoint[0] == 0
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((20, 50)) + 1j * rng.standard_normal((20, 50))
    env = prefix_envelope(rows)
    sup, end = all_prefixes(rows)
    assert np.allclose(env.sup, sup, atol=1e-12) and np.allclose(env.endpoint, end, atol=1e-12)
    assert np.all(env.endpoint <= env.sup)


def test_table_rows_sum_to_segment():
    L = build_ladder(DESK, CoefficientModel.scaled_sqrt(1.0))
    key = SeedKey(11)
    tab = eval_block_sums(L, L.coeffs, key, 2)
    g = L.grid(2)
    c = block_coefficients(L.coeffs, key, g[0], g[-1])
    seg = direct_sum(c, g[0], L.N_at(3))
    tol = 1e-10 * np.sum(np.abs(c))
    assert np.max(np.abs(tab.values.sum(axis=0) - seg)) <= tol
    env = scale_envelope(L, L.coeffs, key, 2)
    env2 = prefix_envelope(tab)
    assert np.array_equal(env.sup, env2.sup) and np.array_equal(env.endpoint, env2.endpoint)


def test_table_dump_roundtrip_and_net_check():
    L = build_ladder(DESK, CoefficientModel.scaled_sqrt(1.0))
    tab = eval_block_sums(L, L.coeffs, SeedKey(1), 1)
    back = PartialSumTable.from_bytes(tab.to_bytes())
    assert np.array_equal(back.values, tab.values) and back.ladder_hash == tab.ladder_hash
    assert back.seed == 1 and back.k == 1
    with pytest.raises(ValueError):
        eval_block_sums(L, L.coeffs, SeedKey(1), 1, net=NetSpec(2, 100))
    with pytest.raises(MemoryError):
        eval_block_sums(L, L.coeffs, SeedKey(1), 3, cap=10)


def test_gaussian_table_differs():
    L = build_ladder(DESK, CoefficientModel.scaled_sqrt(1.0))
    a = eval_block_sums(L, L.coeffs, SeedKey(1), 1, "rademacher")
    b = eval_block_sums(L, L.coeffs, SeedKey(1), 1, "gaussian")
    assert not np.allclose(a.values, b.values)


def test_derivative_sums():
    L = build_ladder(DESK, CoefficientModel.scaled_sqrt(0.0))
    assert not derivative_block_sums(L, L.coeffs, SeedKey(0), 1).any()
    tab = [0.0] * 200
    j0 = 40
    tab[j0 - 1] = 0.3
    Lt = build_ladder(LadderConfig(N1=16, depth=2, ladder_mode="geometric", ratio=8, beta_sub=1.0),
                      CoefficientModel.from_table(tab))
    d = derivative_block_sums(Lt, Lt.coeffs, SeedKey(0), 1)
    assert np.allclose(d, j0 * 0.3)


def test_derivative_grid_vs_all_ell():
    L = build_ladder(LadderConfig(N1=16, depth=2, ladder_mode="geometric", ratio=8, beta_sub=1.0),
                     CoefficientModel.scaled_sqrt(1.0))
    key = SeedKey(4)
    grid_sup = derivative_block_sums(L, L.coeffs, key, 1)
    N = L.N_at(2)
    n = np.arange(L.N_at(1), N)
    c = block_coefficients(L.coeffs, key, n[0], n[-1] + 1) * n
    full = np.zeros(N)
    ends = set(g - 1 for g in L.grid(1)[1:])
    at_ends = np.zeros(N)
    for l in range(1, c.size + 1):
        v = np.abs(direct_sum(c[:l], n[0], N))
        full = np.maximum(full, v)
        if n[0] + l - 1 in ends:
            at_ends = np.maximum(at_ends, v)
    assert np.all(grid_sup <= full + 1e-9)
    assert np.allclose(grid_sup, at_ends, atol=1e-9)


def test_eval_at_angles():
    co = CoefficientModel.scaled_sqrt(1.0)
    key = SeedKey(9)
    assert eval_at_angles(co, key, 10, 9, [0.1, 0.2]).tolist() == [0, 0]
    L = build_ladder(DESK, co)
    tab = eval_block_sums(L, co, key, 1)
    g = L.grid(1)
    N2 = L.N_at(2)
    direct = eval_at_angles(co, key, g[0], g[1] - 1, np.arange(N2), denominator=N2)
    assert np.max(np.abs(direct - tab.values[0])) <= 1e-9
    th = np.array([0.1234, 0.377])
    v = eval_at_angles(co, key, 5, 400, th)
    w = eval_at_angles(co, key, 5, 400, -th)
    assert np.allclose(w, np.conj(v), atol=1e-12)
