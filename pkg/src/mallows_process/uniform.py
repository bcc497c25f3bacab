"""Uniform Mallows process: coordinates driven by one stored uniform each.

Coordinate ``j`` at time ``t`` is ``f_j(t; u) = floor(log(1 - u(1 - t^j)) / log t)``
(0 at t = 0, ``floor(j u)`` at t = 1).  Since ``f_j(t; u) >= k`` exactly when
``u >= (1 - t^k) / (1 - t^j)`` and the right side decreases in ``t``, the k-th
jump time is the root of that boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trajectory import CoordinateTrajectory

NEAR_ONE = 1e-6
_BISECT_STEPS = 200


@dataclass(frozen=True)
class UniformDriver:
    """The uniforms ``U_1..U_n``, each strictly inside (0, 1)."""

    u: tuple

    def __post_init__(self):
        vals = tuple(float(x) for x in self.u)
        if not vals:
            raise ValueError("driver needs at least one uniform")
        for x in vals:
            if not 0.0 < x < 1.0:
                raise ValueError(f"driver uniforms must lie strictly in (0, 1), got {x}")
        object.__setattr__(self, "u", vals)

    @property
    def n(self) -> int:
        return len(self.u)

    @classmethod
    def draw(cls, n: int, rng) -> "UniformDriver":
        vals = []
        while len(vals) < n:
            x = float(rng.uniform())
            if 0.0 < x < 1.0:
                vals.append(x)
        return cls(tuple(vals))

    def to_json(self) -> str:
        return json.dumps(list(self.u))

    @classmethod
    def from_json(cls, text: str) -> "UniformDriver":
        return cls(tuple(json.loads(text)))


def level_boundary(j: int, k: int, t):
    """``(1 - t^k) / (1 - t^j)``: the smallest u reaching level k at time t (k/j at t = 1)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = np.log(t)
        low = np.expm1(k * x) / np.expm1(j * x)
        # t > 1: factor out t^(k-j) so nothing overflows
        high = np.exp((k - j) * x) * np.expm1(-k * x) / np.expm1(-j * x)
        out = np.where(x < 0, low, high)
    k = np.asarray(k)
    out = np.where(t == 0.0, np.where(k > 0, 1.0, 0.0), out)
    return np.where(t == 1.0, k / j, out)


def _level_by_boundaries(j: int, t: float, u: float) -> int:
    ks = np.arange(1, j)
    return int(np.count_nonzero(u >= level_boundary(j, ks, t)))


def level_function(j: int, t: float, u: float) -> int:
    """``f_j(t; u)``: level of coordinate ``j`` at time ``t`` for uniform ``u``.

    Within 1e-6 of ``t = 1`` the floor formula is numerically singular, so the
    level is read off the half-open u-intervals instead.  Elsewhere the floor
    result is checked against its two neighbouring intervals.
    """
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly in (0, 1)")
    if t < 0:
        raise ValueError("t must be non-negative")
    if j == 1 or t == 0.0:
        return 0
    if t == 1.0:
        return min(int(math.floor(j * u)), j - 1)
    if abs(t - 1.0) < NEAR_ONE:
        return _level_by_boundaries(j, t, u)
    lt = math.log(t)
    if t < 1.0:
        num = math.log1p(u * math.expm1(j * lt))
    else:
        num = j * lt + math.log(u + (1.0 - u) * math.exp(-j * lt))
    level = min(max(int(math.floor(num / lt)), 0), j - 1)
    # the floor can land one off when u sits within rounding of a boundary;
    # settle it with the half-open interval test
    if level < j - 1 and u >= float(level_boundary(j, level + 1, t)):
        level += 1
    elif level > 0 and u < float(level_boundary(j, level, t)):
        level -= 1
    return level


def jump_times_batch(j: int, k, u) -> np.ndarray:
    """Vectorized ``t > 0`` solving ``u = (1 - t^k)/(1 - t^j)``, by bisection in ``log t``.

    ``k`` and ``u`` broadcast together.  The result has relative accuracy
    ~1e-15 and lies on the reached side: the level test reports level ``>= k``
    there.
    """
    k = np.asarray(k)
    u = np.asarray(u, dtype=float)
    k, u = np.broadcast_arrays(k, u)
    shape = u.shape
    if np.any((k < 1) | (k > j - 1)):
        raise ValueError(f"target level must lie in [1, {j - 1}]")
    # boundary at x = log t: decreasing, 1 at -inf, k/j at 0, 0 at +inf.
    # invariant: level k not reached at exp(lo), reached at exp(hi)
    lo = np.full(shape, -1.0)
    hi = np.full(shape, 1.0)
    for _ in range(80):
        need = level_boundary(j, k, np.exp(lo)) <= u
        if not need.any():
            break
        lo = np.where(need, 2.0 * lo, lo)
    for _ in range(80):
        need = level_boundary(j, k, np.exp(hi)) > u
        if not need.any():
            break
        hi = np.where(need, 2.0 * hi, hi)
    # converged entries are frozen so each root is independent of its batch
    lo, hi, k, u = lo.ravel(), hi.ravel(), k.ravel(), u.ravel()
    idx = np.arange(u.size)
    for _ in range(_BISECT_STEPS):
        a, b = lo[idx], hi[idx]
        mid = 0.5 * (a + b)
        live = (b - a > 1e-15 * np.maximum(1.0, np.abs(mid))) & (a < mid) & (mid < b)
        idx, mid = idx[live], mid[live]
        if idx.size == 0:
            break
        before = level_boundary(j, k[idx], np.exp(mid)) > u[idx]
        lo[idx[before]] = mid[before]
        hi[idx[~before]] = mid[~before]
    return np.exp(hi.reshape(shape))


def coordinate_jump_time(j: int, k: int, u: float) -> float:
    """``inf{t : f_j(t; u) >= k}`` for ``1 <= k <= j-1``."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly in (0, 1)")
    return float(jump_times_batch(j, k, u))


def simulate_uniform_coordinate(j: int, horizon: float, u: float) -> CoordinateTrajectory:
    """Path of coordinate ``j`` on ``[0, horizon]`` read off the stored uniform."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly in (0, 1)")
    if j == 1:
        return CoordinateTrajectory(1, (), horizon)
    times = jump_times_batch(j, np.arange(1, j), u)
    return CoordinateTrajectory(j, tuple(float(x) for x in times[times <= horizon]), horizon)


def uniform_trajectories(driver: UniformDriver, horizon: float) -> Sequence[CoordinateTrajectory]:
    return [simulate_uniform_coordinate(j, horizon, u) for j, u in enumerate(driver.u, start=1)]
