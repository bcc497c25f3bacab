import itertools
import math
from collections import Counter

import numpy as np
import pytest

from mallows_process.distribution import (InversionCountTable, MallowsParams, all_permutations,
                                          enumerate_oracle, exact_jump_time_sf,
                                          exact_jump_time_sf_array, inversion_count_table,
                                          normalizing_constant, oracle_to_json, pmf,
                                          product_form_pmf, sample, sample_inversion_vectors,
                                          truncated_geometric)
from mallows_process.perms import Permutation, inv_count, phi_batch
from mallows_process.stats import chi_square


def brute_counts(n):
    c = Counter(inv_count(s) for s in all_permutations(n))
    return [c[l] for l in range(n * (n - 1) // 2 + 1)]


def test_params_validation():
    with pytest.raises(ValueError):
        MallowsParams(0, 1.0)
    with pytest.raises(ValueError):
        MallowsParams(3, -0.1)


def test_normalizing_constant_examples():
    assert normalizing_constant(MallowsParams(2, 0.7)) == pytest.approx(1.7)
    assert normalizing_constant(MallowsParams(6, 1.0)) == math.factorial(6)
    assert normalizing_constant(MallowsParams(3, 2.0)) == pytest.approx(21.0)
    assert normalizing_constant(MallowsParams(5, 0.0)) == 1.0
    assert normalizing_constant(MallowsParams(3, 2.0), log=True) == pytest.approx(math.log(21))


def test_normalizing_constant_overflow():
    with pytest.raises(OverflowError):
        normalizing_constant(MallowsParams(400, 5.0))
    assert math.isfinite(normalizing_constant(MallowsParams(400, 5.0), log=True))


def test_pmf_examples():
    assert pmf(Permutation.identity(2), MallowsParams(2, 0.4)) == pytest.approx(1 / 1.4)
    for s in all_permutations(4):
        assert pmf(s, MallowsParams(4, 1.0)) == pytest.approx(1 / 24)
    assert pmf(Permutation.identity(4), MallowsParams(4, 0.0)) == 1.0
    assert pmf(Permutation.of(2, 1, 3, 4), MallowsParams(4, 0.0)) == 0.0


@pytest.mark.parametrize("q", [0.0, 0.3, 1.0, 2.0, 7.5])
def test_pmf_sums_to_one_and_product_form(q):
    for n in range(1, 7):
        total = 0.0
        for s in all_permutations(n):
            p = pmf(s, MallowsParams(n, q))
            assert p == pytest.approx(product_form_pmf(s, q), rel=1e-12, abs=1e-300)
            total += p
        assert total == pytest.approx(1.0, abs=1e-12)


def test_enumerate_oracle():
    t = enumerate_oracle(2, 1.0)
    assert list(t.values()) == [0.5, 0.5]
    t = enumerate_oracle(3, 0.0)
    assert t[Permutation.identity(3)] == 1.0
    assert sum(t.values()) == 1.0
    assert sum(enumerate_oracle(4, 2.0).values()) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        enumerate_oracle(9, 1.0)
    assert '"2,1"' in oracle_to_json(enumerate_oracle(2, 1.0))


def test_inversion_count_table_examples():
    assert inversion_count_table(1).counts == (1,)
    assert inversion_count_table(3).counts == (1, 2, 2, 1)
    assert inversion_count_table(4).counts == (1, 3, 5, 6, 5, 3, 1)
    assert inversion_count_table(3).to_csv() == "ell,count\n0,1\n1,2\n2,2\n3,1\n"


@pytest.mark.parametrize("n", range(1, 9))
def test_inversion_count_table_vs_brute_force(n):
    table = inversion_count_table(n)
    assert list(table.counts) == brute_counts(n)
    assert sum(table.counts) == math.factorial(n)
    assert table.counts == table.counts[::-1]
    assert len(table.counts) == table.max_inversions + 1


def test_table_generating_function_is_z():
    rng = np.random.default_rng(2)
    for n in (5, 9, 14):
        counts = inversion_count_table(n).counts
        for t in rng.uniform(0.05, 3.0, size=20):
            gf = math.fsum(c * t ** l for l, c in enumerate(counts))
            assert gf == pytest.approx(normalizing_constant(MallowsParams(n, t)), rel=1e-10)


def test_table_exact_integers_beyond_64_bits():
    counts = inversion_count_table(25).counts
    assert sum(counts) == math.factorial(25)
    assert max(counts) > 2 ** 64


def test_exact_jump_time_sf_examples():
    for t in (0.0, 0.5, 1.0, 3.0):
        assert exact_jump_time_sf(2, 1, t) == pytest.approx(1 / (1 + t))
    assert exact_jump_time_sf(6, 4, 0.0) == 1.0
    assert exact_jump_time_sf(3, 2, 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        exact_jump_time_sf(3, 4, 1.0)


def test_exact_jump_time_sf_array_matches_scalar():
    t = np.array([0.0, 1e-4, 0.3, 1.0, 2.5, 40.0])
    for n, k in [(3, 1), (3, 3), (5, 2), (12, 7), (300, 4)]:
        got = exact_jump_time_sf_array(n, k, t)
        want = [exact_jump_time_sf(n, k, x) for x in t]
        assert np.allclose(got, want, rtol=1e-10, atol=1e-300)


def test_exact_sf_against_enumeration():
    # P(Inv <= k-1) summed straight from the enumerated law
    for q in (0.4, 1.7):
        law = enumerate_oracle(5, q)
        for k in (1, 2, 3, 6):
            direct = sum(p for s, p in law.items() if inv_count(s) <= k - 1)
            assert exact_jump_time_sf(5, k, q) == pytest.approx(direct, rel=1e-12)


def test_truncated_geometric_law():
    # P(I <= k) = (1 - q^{k+1}) / (1 - q^j): invert at the boundary points
    j, q = 6, 0.6
    for k in range(j):
        cdf = (1 - q ** (k + 1)) / (1 - q ** j)
        assert truncated_geometric(j, q, cdf - 1e-9) == k
        if k < j - 1:
            assert truncated_geometric(j, q, cdf + 1e-9) == k + 1
    u = np.linspace(0.001, 0.999, 999)
    assert np.array_equal(truncated_geometric(5, 1.0 + 1e-12, u), np.floor(5 * u).astype(int))
    assert truncated_geometric(4, 0.0, 0.99) == 0
    big = truncated_geometric(50, 40.0, np.array([1e-12, 0.5, 1 - 1e-12]))
    assert big.min() >= 0 and big.max() <= 49


def test_sample_edge_cases():
    rng = np.random.default_rng(0)
    assert all(sample(MallowsParams(6, 0.0), rng) == Permutation.identity(6) for _ in range(20))
    assert sample(MallowsParams(1, 3.0), rng) == Permutation.identity(1)


@pytest.mark.parametrize("q", [0.3, 0.5, 1.0, 2.0])
def test_sampler_chi_square(q):
    rng = np.random.default_rng(int(q * 1000))
    n, size = 5, 100_000
    codes = sample_inversion_vectors(MallowsParams(n, q), size, rng)
    perms = phi_batch(codes)
    index = {p: i for i, p in enumerate(itertools.permutations(range(n)))}
    counts = np.zeros(len(index))
    for row in perms:
        counts[index[tuple(row)]] += 1
    probs = [pmf(Permutation(p), MallowsParams(n, q)) for p in index]
    report = chi_square(counts, probs, size)
    assert report.passed, report.to_json()
