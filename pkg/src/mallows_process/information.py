"""Information carried by the uniform construction about its driver.

``U_j`` becomes recoverable from the observed path once coordinate ``j`` has
jumped at least once, so ``X_j(t) = 1{T^j_1 <= t}``.  Coordinate 1 never moves;
it still counts in the ``1/n`` normalization, capping the fraction at
``(n-1)/n``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .distribution import geometric_sum
from .rng import counter_uniform
from .uniform import UniformDriver, jump_times_batch, level_boundary


@dataclass(frozen=True)
class InfoPath:
    """A driver together with the first-jump time of every coordinate."""

    n: int
    driver: UniformDriver
    thresholds: tuple  # thresholds[j-1] = T^j_1, None for j = 1

    @classmethod
    def from_driver(cls, driver: UniformDriver) -> "InfoPath":
        times = [None] + [float(jump_times_batch(j, 1, u)) for j, u in enumerate(driver.u[1:], start=2)]
        return cls(driver.n, driver, tuple(times))

    def retrievable(self, t: float) -> list:
        return [x is not None and x <= t for x in self.thresholds]


def info_fraction(path: InfoPath, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return sum(path.retrievable(t)) / path.n


def full_retrieval_time(path: InfoPath) -> float:
    """First time every ``U_2..U_n`` is retrievable."""
    if path.n < 2:
        raise ValueError("full retrieval time needs n >= 2")
    return max(path.thresholds[1:])


def _miss_probs(n: int, t: float) -> np.ndarray:
    """``P(X_j(t) = 0) = 1 / sum_{l<j} t^l`` for ``j = 2..n``."""
    return np.array([1.0 / geometric_sum(t, j) if t > 0 else 1.0 for j in range(2, n + 1)])


def full_retrieval_cdf(n: int, t: float) -> float:
    """``P(T_U < t) = prod_{j=2}^n (1 - 1/sum_{l<j} t^l)``."""
    if n < 2 or t < 0:
        raise ValueError("need n >= 2 and t >= 0")
    return float(np.prod(1.0 - _miss_probs(n, t)))


def full_retrieval_sf(n: int, t: float) -> float:
    """``P(T_U > t)`` without the cancellation of ``1 - cdf`` at large t."""
    if n < 2 or t < 0:
        raise ValueError("need n >= 2 and t >= 0")
    with np.errstate(divide="ignore"):
        return float(-np.expm1(np.sum(np.log1p(-_miss_probs(n, t)))))


def expected_info(n: int, t: float) -> float:
    """``(1/n) sum_{j=1}^n (1 - 1/sum_{l<j} t^l)``."""
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    return float(np.sum(1.0 - _miss_probs(n, t))) / n


def var_info(n: int, t: float) -> float:
    """Exact variance of the fraction: independent Bernoulli coordinates."""
    p = _miss_probs(n, t)
    return float(np.sum(p * (1.0 - p))) / n ** 2


def var_info_at_1(n: int) -> float:
    """``(1/n^2) sum_j (j-1)/j^2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.fsum((j - 1) / j ** 2 for j in range(1, n + 1)) / n ** 2


class TruncatedProduct(NamedTuple):
    value: float
    remainder_bound: float
    terms: int


def limit_mgf_X(t: float, u: float, K: int) -> TruncatedProduct:
    """``prod_{k=1}^K (1 + (u-1)(t-1)/(t^k-1))`` and a bound on ``|value - limit|``.

    With ``a_k = |u-1|(t-1)/(t^k-1)`` the tail sum past K is at most
    ``S = |u-1| t / (t^{K+1}-1)``; if ``c = a_{K+1} < 1`` the omitted factors
    change the product by a relative amount at most ``exp(S/(1-c)) - 1``.
    The K = n truncation is also the exact pgf of the count of
    non-retrievable coordinates at size n.
    """
    if not t > 1:
        raise ValueError("the limit law is defined for t > 1")
    if K < 1:
        raise ValueError("K must be >= 1")
    lt = math.log(t)
    value = 1.0
    for k in range(1, K + 1):
        value *= 1.0 + (u - 1.0) * (t - 1.0) / math.expm1(k * lt)
    tail_den = math.expm1((K + 1) * lt)
    c = abs(u - 1.0) * (t - 1.0) / tail_den
    s = abs(u - 1.0) * t / tail_den
    bound = abs(value) * math.expm1(s / (1.0 - c)) if c < 1 else math.inf
    return TruncatedProduct(value, bound, K)


def keyed_uniforms(seed: int, replications: np.ndarray, j: int) -> np.ndarray:
    """``U_j`` for each replication, matching the keyed uniform construction."""
    return counter_uniform(seed, np.asarray(replications, dtype=np.int64), j, 0)


def retrieval_indicators(n: int, t: float, seed: int, replications) -> np.ndarray:
    """``(R, n)`` boolean ``X_j(t)`` via ``U_j >= (1-t)/(1-t^j)``; no root finding."""
    reps = np.asarray(replications, dtype=np.int64)
    out = np.zeros((reps.size, n), dtype=bool)
    for j in range(2, n + 1):
        out[:, j - 1] = keyed_uniforms(seed, reps, j) >= float(level_boundary(j, 1, t))
    return out


def info_fraction_batch(n: int, t: float, seed: int, replications) -> np.ndarray:
    reps = np.asarray(replications, dtype=np.int64)
    total = np.zeros(reps.size, dtype=np.int64)
    for j in range(2, n + 1):
        total += keyed_uniforms(seed, reps, j) >= float(level_boundary(j, 1, t))
    return total / n


def first_jump_times_batch(n: int, seed: int, replications) -> np.ndarray:
    """``(R, n-1)`` array of ``T^j_1`` for ``j = 2..n``."""
    reps = np.asarray(replications, dtype=np.int64)
    cols = [jump_times_batch(j, 1, keyed_uniforms(seed, reps, j)) for j in range(2, n + 1)]
    return np.stack(cols, axis=1) if cols else np.empty((reps.size, 0))


def full_retrieval_times_batch(n: int, seed: int, replications) -> np.ndarray:
    if n < 2:
        raise ValueError("full retrieval time needs n >= 2")
    return first_jump_times_batch(n, seed, replications).max(axis=1)


def info_table_csv(n: int, t_grid: Sequence[float], fractions: Sequence[np.ndarray]) -> str:
    """``t,I_t_mean,I_t_var,expected,variance_formula`` for each time."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "I_t_mean", "I_t_var", "expected", "variance_formula"])
    for t, f in zip(t_grid, fractions):
        f = np.asarray(f, dtype=float)
        var = float(f.var(ddof=1)) if f.size > 1 else 0.0
        w.writerow([repr(float(t)), repr(float(f.mean())), repr(var),
                    repr(expected_info(n, t)), repr(var_info(n, t))])
    return buf.getvalue()


def retrieval_times_csv(replications: Iterable[int], times: Iterable[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "T_U"])
    for r, x in zip(replications, times):
        w.writerow([int(r), repr(float(x))])
    return buf.getvalue()
