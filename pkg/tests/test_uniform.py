import math

import numpy as np
import pytest

from mallows_process.birth import marginal_pmf
from mallows_process.stats import chi_square
from mallows_process.uniform import (UniformDriver, coordinate_jump_time, jump_times_batch,
                                     level_boundary, level_function, simulate_uniform_coordinate,
                                     uniform_trajectories)

GOLDEN = (1 + math.sqrt(5)) / 2


def raw_floor(j, t, u):
    return math.floor(math.log(1 - u * (1 - t ** j)) / math.log(t))


def test_level_function_examples():
    rng = np.random.default_rng(0)
    for j in (1, 2, 7, 30):
        for u in rng.uniform(0.001, 0.999, size=20):
            assert level_function(j, 0.0, u) == 0
            assert level_function(j, 1.0, u) == math.floor(j * u)
    assert level_function(2, 0.5, 0.5) == 0


def test_level_function_matches_floor_formula():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        j = int(rng.integers(2, 25))
        t = float(rng.uniform(0.05, 4.0))
        u = float(rng.uniform(0.01, 0.99))
        assert level_function(j, t, u) == min(raw_floor(j, t, u), j - 1)


def test_level_function_rejects_bad_input():
    for u in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            level_function(3, 0.5, u)
    with pytest.raises(ValueError):
        level_function(3, -1.0, 0.5)


def test_monotone_in_t():
    rng = np.random.default_rng(2)
    grid = np.linspace(0, 6, 500)
    for j in range(1, 31):
        for u in rng.uniform(size=100 if j in (2, 9, 30) else 10):
            levels = [level_function(j, t, u) for t in grid]
            assert all(a <= b for a, b in zip(levels, levels[1:]))
            assert 0 <= min(levels) and max(levels) <= j - 1


def test_interval_lengths_equal_marginals():
    for j in (2, 3, 6, 15):
        for t in (0.01, 0.3, 0.999, 1.0, 1.0001, 2.5, 9.0):
            for k in range(j):
                length = float(level_boundary(j, k + 1, t) - level_boundary(j, k, t)) if k < j - 1 \
                    else float(1.0 - level_boundary(j, k, t))
                assert abs(length - marginal_pmf(j, t, k)) < 1e-12


def test_empirical_distribution_chi_square():
    rng = np.random.default_rng(3)
    u = rng.uniform(size=50_000)
    j = 6
    for t in (0.4, 1.0, 1.7):
        counts = np.bincount([level_function(j, t, x) for x in u], minlength=j)
        report = chi_square(counts, [marginal_pmf(j, t, k) for k in range(j)], u.size)
        assert report.passed, report.to_json()


def test_continuity_at_one():
    rng = np.random.default_rng(4)
    for j in (2, 5, 13, 40):
        for u in rng.uniform(size=50):
            base = math.floor(j * u)
            for t in (1 - 1e-8, 1 + 1e-8, 1 - 1e-6, 1 + 1e-6):
                assert abs(level_function(j, t, u) - base) <= 1


def test_jump_time_examples():
    rng = np.random.default_rng(5)
    for u in rng.uniform(0.01, 0.99, size=50):
        assert coordinate_jump_time(2, 1, u) == pytest.approx((1 - u) / u, rel=1e-12)
    assert coordinate_jump_time(2, 1, 0.5) == pytest.approx(1.0, rel=1e-12)
    # (1 - t^2)/(1 - t^3) = 1/2 reduces to t^2 = t + 1
    assert coordinate_jump_time(3, 2, 0.5) == pytest.approx(GOLDEN, rel=1e-12)
    assert coordinate_jump_time(3, 2, 0.5) == 1.6180339887498953
    with pytest.raises(ValueError):
        coordinate_jump_time(3, 3, 0.5)
    with pytest.raises(ValueError):
        coordinate_jump_time(3, 1, 1.0)


def test_jump_time_is_first_passage():
    rng = np.random.default_rng(6)
    for _ in range(300):
        j = int(rng.integers(2, 30))
        k = int(rng.integers(1, j))
        u = float(rng.uniform(0.001, 0.999))
        t = coordinate_jump_time(j, k, u)
        assert level_boundary(j, k, t) == pytest.approx(u, rel=1e-12)
        assert level_function(j, t, u) >= k
        assert level_function(j, t * (1 - 1e-9), u) < k


def test_batch_is_independent_of_shape():
    rng = np.random.default_rng(7)
    u = rng.uniform(size=64)
    whole = jump_times_batch(9, 4, u)
    assert all(whole[i] == float(jump_times_batch(9, 4, u[i])) for i in range(u.size))


def test_simulate_coordinate():
    assert simulate_uniform_coordinate(1, 3.0, 0.4).jump_times == ()
    assert simulate_uniform_coordinate(2, 2.0, 0.5).jump_times == (1.0,)
    assert simulate_uniform_coordinate(2, 0.9, 0.5).jump_times == ()
    rng = np.random.default_rng(8)
    grid = np.linspace(0, 5, 1000)
    for u in rng.uniform(size=30):
        traj = simulate_uniform_coordinate(6, 5.0, u)
        assert all(traj.level_at(t) == level_function(6, t, u) for t in grid)


def test_jump_times_interlace():
    rng = np.random.default_rng(9)
    for j in (3, 8, 25, 60):
        for u in rng.uniform(0.0005, 0.9995, size=40):
            times = jump_times_batch(j, np.arange(1, j), u)
            assert np.all(np.diff(times) > 0)


def test_driver():
    d = UniformDriver((0.25, 0.5, 0.75))
    assert d.n == 3
    assert UniformDriver.from_json(d.to_json()) == d
    for bad in ((), (0.0, 0.5), (0.5, 1.0)):
        with pytest.raises(ValueError):
            UniformDriver(bad)
    paths = uniform_trajectories(d, 10.0)
    assert [p.j for p in paths] == [1, 2, 3]
    assert paths[1].jump_times == (1.0,)
    drawn = UniformDriver.draw(5, np.random.default_rng(0))
    assert drawn.n == 5
