import math
from fractions import Fraction

import numpy as np
import pytest

from mallows_process.information import (InfoPath, expected_info, first_jump_times_batch,
                                         full_retrieval_cdf, full_retrieval_sf, full_retrieval_time,
                                         full_retrieval_times_batch, info_fraction,
                                         info_fraction_batch, info_table_csv, limit_mgf_X,
                                         retrieval_indicators, retrieval_times_csv, var_info,
                                         var_info_at_1)
from mallows_process.process import keyed_driver, simulate_process
from mallows_process.stats import EmpiricalSample, ks_test
from mallows_process.uniform import UniformDriver, coordinate_jump_time


def test_info_fraction_examples():
    rng = np.random.default_rng(0)
    path = InfoPath.from_driver(UniformDriver.draw(6, rng))
    assert info_fraction(path, 0.0) == 0.0
    one = InfoPath.from_driver(UniformDriver((0.3,)))
    assert all(info_fraction(one, t) == 0.0 for t in (0.0, 1.0, 1e6))
    two = InfoPath.from_driver(UniformDriver((0.7, 0.5)))
    assert info_fraction(two, 1.0) == 0.5
    assert info_fraction(two, 1.0 - 1e-9) == 0.0
    with pytest.raises(ValueError):
        info_fraction(two, -1.0)


def test_info_fraction_monotone_and_capped():
    rng = np.random.default_rng(1)
    grid = np.linspace(0, 30, 200)
    for _ in range(30):
        path = InfoPath.from_driver(UniformDriver.draw(9, rng))
        vals = [info_fraction(path, t) for t in grid]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert max(vals) <= 8 / 9


def test_retrievable_iff_jumped():
    for rep in range(20):
        traj = simulate_process(7, 5.0, "uniform", seed=3, replication=rep)
        path = InfoPath.from_driver(keyed_driver(7, 3, rep))
        for t in np.linspace(0, 5.0, 26):
            flags = path.retrievable(t)
            assert flags == [traj.coordinate(j).level_at(t) >= 1 for j in range(1, 8)]


def test_full_retrieval_time_examples():
    two = InfoPath.from_driver(UniformDriver((0.2, 0.4)))
    assert full_retrieval_time(two) == coordinate_jump_time(2, 1, 0.4)
    three = InfoPath.from_driver(UniformDriver((0.2, 0.5, 0.5)))
    assert full_retrieval_time(three) == max(coordinate_jump_time(2, 1, 0.5), coordinate_jump_time(3, 1, 0.5))
    rng = np.random.default_rng(2)
    for n in (2, 5, 20):
        for _ in range(20):
            path = InfoPath.from_driver(UniformDriver.draw(n, rng))
            tu = full_retrieval_time(path)
            assert info_fraction(path, tu) == (n - 1) / n
            assert info_fraction(path, tu * (1 - 1e-9)) < (n - 1) / n
    with pytest.raises(ValueError):
        full_retrieval_time(InfoPath.from_driver(UniformDriver((0.5,))))


def test_cdf_examples():
    for t in (0.0, 0.3, 1.0, 4.0):
        assert full_retrieval_cdf(2, t) == pytest.approx(t / (1 + t))
    for n in (2, 5, 40):
        assert full_retrieval_cdf(n, 0.0) == 0.0
    assert full_retrieval_cdf(3, 1.0) == pytest.approx(1 / 3)
    for n, t in [(3, 0.5), (10, 2.0), (50, 7.0)]:
        assert full_retrieval_cdf(n, t) + full_retrieval_sf(n, t) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        full_retrieval_cdf(1, 1.0)


def test_cdf_exact_rational():
    t = Fraction(3, 2)
    n = 6
    want = 1
    for j in range(2, n + 1):
        want *= 1 - 1 / sum(t ** l for l in range(j))
    assert full_retrieval_cdf(n, 1.5) == pytest.approx(float(want), rel=1e-13)


def test_tail_law():
    for n in (2, 3, 10, 50):
        for t in (1e2, 1e3, 1e4):
            assert t * full_retrieval_sf(n, t) == pytest.approx(1.0, rel=0.2 if t == 1e2 else 0.05)
        assert abs(1e4 * full_retrieval_sf(n, 1e4) - 1) < 0.02


def test_expected_info_examples():
    assert expected_info(2, 1.0) == pytest.approx(0.25)
    assert expected_info(3, 1.0) == pytest.approx(7 / 18)
    for n in (1, 4, 30):
        assert expected_info(n, 0.0) == 0.0
        harmonic = sum(1 / j for j in range(1, n + 1))
        assert expected_info(n, 1.0) == pytest.approx(1 - harmonic / n)


def test_variance_examples():
    assert var_info_at_1(1) == 0.0
    assert var_info_at_1(2) == pytest.approx(1 / 16)
    assert var_info_at_1(3) == pytest.approx(17 / 324)
    for n in (1, 2, 3, 25):
        assert var_info(n, 1.0) == pytest.approx(var_info_at_1(n), abs=1e-15)


def test_limit_mgf_examples():
    for t in (1.1, 2.0, 5.0):
        for K in (1, 10, 50):
            assert limit_mgf_X(t, 1.0, K).value == 1.0
    res = limit_mgf_X(2.0, 0.0, 40)
    direct = math.prod(1 - 1 / (2 ** k - 1) for k in range(1, 41))
    assert res.value == pytest.approx(direct, abs=1e-15)
    assert res.terms == 40
    # the k=1 factor vanishes at u = 0
    assert res.value == 0.0
    half = limit_mgf_X(2.0, 0.5, 60)
    assert half.remainder_bound < 1e-15
    with pytest.raises(ValueError):
        limit_mgf_X(1.0, 0.5, 10)
    with pytest.raises(ValueError):
        limit_mgf_X(2.0, 0.5, 0)


def test_limit_mgf_convergence_in_K():
    for t, u in [(1.5, 0.5), (2.0, 0.3), (3.0, -0.5)]:
        vals = [limit_mgf_X(t, u, K).value for K in range(1, 40)]
        steps = [abs(b - a) for a, b in zip(vals, vals[1:])]
        assert all(b <= a + 1e-18 for a, b in zip(steps, steps[1:]))
        limit = limit_mgf_X(t, u, 400).value
        for K in (5, 10, 20):
            r = limit_mgf_X(t, u, K)
            assert abs(r.value - limit) <= r.remainder_bound + 1e-14


def test_batch_helpers_match_paths():
    reps = np.arange(30)
    n = 8
    times = first_jump_times_batch(n, 12, reps)
    tu = full_retrieval_times_batch(n, 12, reps)
    for r in reps:
        path = InfoPath.from_driver(keyed_driver(n, 12, int(r)))
        assert list(times[r]) == list(path.thresholds[1:])
        assert tu[r] == full_retrieval_time(path)
        for t in (0.3, 1.0, 2.5):
            assert info_fraction_batch(n, t, 12, [r])[0] == info_fraction(path, t)
            assert list(retrieval_indicators(n, t, 12, [r])[0]) == path.retrievable(t)


@pytest.mark.parametrize("n", [3, 10, 50])
def test_full_retrieval_time_law(n):
    sample = full_retrieval_times_batch(n, 4, np.arange(100_000))
    report = ks_test(EmpiricalSample.of(sample), lambda x: np.array([full_retrieval_cdf(n, v) for v in np.atleast_1d(x)]))
    assert report.passed, report.to_json()


def test_moments_at_one():
    n, reps = 10, 100_000
    f = info_fraction_batch(n, 1.0, 5, np.arange(reps))
    se_mean = math.sqrt(var_info_at_1(n) / reps)
    assert abs(f.mean() - expected_info(n, 1.0)) < 4 * se_mean
    # variance standard error from the fourth central moment
    m4 = np.mean((f - f.mean()) ** 4)
    se_var = math.sqrt((m4 - f.var() ** 2) / reps)
    assert abs(f.var(ddof=1) - var_info_at_1(n)) < 4 * se_var


def test_bridge_variance():
    n, reps = 5000, 4000
    for t in (0.25, 0.5, 0.75):
        f = info_fraction_batch(n, t, 6, np.arange(reps))
        v = np.var(math.sqrt(n) * (f - t), ddof=1)
        assert abs(v - t * (1 - t)) < 0.1 * t * (1 - t)


def test_pgf_above_one():
    n, reps, t = 2000, 20_000, 2.0
    missing = np.rint(n * (1 - info_fraction_batch(n, t, 7, np.arange(reps)))).astype(int)
    for u in (0.0, 0.5):
        vals = np.power(u, missing.astype(float))
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - limit_mgf_X(t, u, 200).value) < 4 * se + 1e-12


def test_csv_writers():
    text = info_table_csv(4, [0.5, 1.0], [np.array([0.25, 0.5]), np.array([0.5, 0.5])])
    lines = text.splitlines()
    assert lines[0] == "t,I_t_mean,I_t_var,expected,variance_formula"
    assert lines[2].split(",")[:3] == ["1.0", "0.5", "0.0"]
    assert retrieval_times_csv([0, 1], [1.5, 2.0]) == "replication,T_U\n0,1.5\n1,2.0\n"
