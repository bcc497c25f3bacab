"""Birth coordinate processes of the Markov regular Mallows process.

Coordinate ``j`` is a time-inhomogeneous pure birth process on ``{0..j-1}``
whose rate at level ``k`` is

    p_j(t, k) = [(k+1) sum_{l=0}^{j-2} (l+1) t^l
                 - j sum_{l=j-k-2}^{j-2} (l-j+k+2) t^l] / sum_{l=0}^{j-1} t^l,

and whose marginal law is ``P(B_j(t) = k) = t^k / sum_l t^l``.  Holding times
are drawn exactly by inverting the integrated hazard against an Exp(1) clock.
"""

from __future__ import annotations

import functools
import math
from typing import Optional, Tuple

import numpy as np

from .rng import counter_exponential
from .trajectory import CoordinateTrajectory

HAZARD_TOL = 1e-10
TIME_RTOL = 1e-10
_FAST_MIN_J = 32


class QuadratureError(ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


def _check_level(j: int, k: int) -> None:
    if j < 1:
        raise ValueError(f"coordinate index must be >= 1, got {j}")
    if not 0 <= k <= j - 1:
        raise ValueError(f"level {k} outside [0, {j - 1}] for coordinate {j}")


@functools.lru_cache(maxsize=4096)
def _numerator_coefficients(j: int, k: int) -> np.ndarray:
    """Coefficients of the rate numerator in powers of t (degree j-2), all positive."""
    ell = np.arange(j - 1, dtype=float)
    return (k + 1) * (ell + 1) - j * np.maximum(0.0, ell - (j - k - 2))


def _horner(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(x, coef)


def _rate_horner(j: int, k: int, t: np.ndarray) -> np.ndarray:
    coef = _numerator_coefficients(j, k)
    out = np.empty_like(t)
    low = t <= 1.0
    if np.any(low):
        x = t[low]
        out[low] = _horner(coef, x) / _horner(np.ones(j), x)
    if not np.all(low):
        # divide numerator and denominator by t^{j-1} and evaluate in s = 1/t
        s = 1.0 / t[~low]
        rcoef = np.zeros(j)
        rcoef[1:] = coef[::-1]
        out[~low] = _horner(rcoef, s) / _horner(np.ones(j), s)
    return out


def _rate_closed(j: int, k: int, t: np.ndarray, pw: np.ndarray) -> np.ndarray:
    """Closed forms of the long sums for 0 < t < 1; ``pw = t^(j-k-2)``."""
    m = j - k - 3
    one_minus = 1.0 - t
    first = (k + 1) * (1.0 - (m + 2) * pw + (m + 1) * pw * t) / one_minus ** 2
    second = pw * _horner(_numerator_coefficients(j, k)[j - k - 2:], t)
    den = (1.0 - pw * t ** (k + 2)) / one_minus
    return (first + second) / den


def birth_rate(j: int, t, k: int):
    """Jump rate ``p_j(t, k)`` out of level ``k``; exactly zero at ``k = j-1``.

    Accepts scalar or array ``t >= 0``.  The numerator is evaluated in its
    non-negative-coefficient form by Horner's rule (in ``1/t`` when ``t > 1``);
    for long sums away from ``t = 1`` closed forms replace the O(j) loop
    wherever they are free of cancellation.
    """
    _check_level(j, k)
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    tt = np.atleast_1d(arr)
    if tt.size and tt.min() < 0:
        raise ValueError("t must be non-negative")
    if k == j - 1:
        out = np.zeros_like(tt)
        return float(out[0]) if scalar else out
    rest = np.ones(tt.shape, dtype=bool)
    out = np.empty_like(tt)
    if j > _FAST_MIN_J and 2 * (k + 1) <= j:
        inside = np.flatnonzero((tt > 0) & (tt < 1))
        if inside.size:
            x = tt[inside]
            pw = np.exp((j - k - 2) * np.log(x))
            ok = (j - k - 1) * pw <= 0.5
            idx = inside[ok]
            out[idx] = _rate_closed(j, k, x[ok], pw[ok])
            rest[idx] = False
    if rest.all():
        out = _rate_horner(j, k, tt)
    elif rest.any():
        out[rest] = _rate_horner(j, k, tt[rest])
    return float(out[0]) if scalar else out


def marginal_pmf(j: int, t: float, k: int) -> float:
    """``P(B_j(t) = k) = t^k / sum_{l<j} t^l``."""
    _check_level(j, k)
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return 1.0 if k == 0 else 0.0
    if t <= 1.0:
        return t ** k / float(_horner(np.ones(j), np.float64(t)))
    s = 1.0 / t
    return s ** (j - 1 - k) / float(_horner(np.ones(j), np.float64(s)))


def _log_geometric(j: int, t: float) -> float:
    if t <= 1.0:
        return math.log(float(_horner(np.ones(j), np.float64(t))))
    return (j - 1) * math.log(t) + math.log(float(_horner(np.ones(j), np.float64(1.0 / t))))


def hazard_level0_closed_form(j: int, s: float, t: float) -> float:
    """Integrated level-0 rate: ``log sum_l t^l - log sum_l s^l``."""
    return _log_geometric(j, t) - _log_geometric(j, s)


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 48) -> float:
    pieces = 8
    edges = np.linspace(a, b, pieces + 1)
    total = 0.0
    compensation = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        fa, fm, fb = f(lo), f(0.5 * (lo + hi)), f(hi)
        stack = [(lo, hi, fa, fm, fb, (hi - lo) / 6.0 * (fa + 4.0 * fm + fb), tol / pieces, 0)]
        while stack:
            x0, x1, f0, fmid, f1, whole, eps, depth = stack.pop()
            mid = 0.5 * (x0 + x1)
            fl, fr = f(0.5 * (x0 + mid)), f(0.5 * (mid + x1))
            left = (mid - x0) / 6.0 * (f0 + 4.0 * fl + fmid)
            right = (x1 - mid) / 6.0 * (fmid + 4.0 * fr + f1)
            delta = left + right - whole
            if abs(delta) <= 15.0 * max(eps, 4e-16 * abs(left + right)):
                # Kahan summation keeps many tiny pieces accurate
                y = left + right + delta / 15.0 - compensation
                s = total + y
                compensation = (s - total) - y
                total = s
            elif depth >= max_depth:
                raise QuadratureError(f"no convergence on [{x0}, {x1}]")
            else:
                stack.append((x0, mid, f0, fl, fmid, left, eps / 2.0, depth + 1))
                stack.append((mid, x1, fmid, fr, f1, right, eps / 2.0, depth + 1))
    return total


def integrated_hazard(j: int, k: int, s: float, t: float, tol: float = HAZARD_TOL) -> float:
    """``int_s^t p_j(u, k) du`` by adaptive Simpson quadrature (absolute ``tol``)."""
    _check_level(j, k)
    if not 0 <= s <= t:
        raise ValueError(f"need 0 <= s <= t, got s={s}, t={t}")
    if s == t or k == j - 1:
        return 0.0
    return _adaptive_simpson(lambda x: birth_rate(j, x, k), float(s), float(t), tol)


def sample_next_jump(j: int, k: int, s: float, horizon: float, rng) -> Optional[float]:
    """Time of the jump out of level ``k`` entered at time ``s``, or None if censored.

    Draws one Exp(1) clock ``E`` (only when a jump is possible) and solves
    ``integrated_hazard(j, k, s, t) = E`` by interval doubling then
    safeguarded Newton steps.
    """
    _check_level(j, k)
    if k == j - 1 or horizon <= s:
        return None
    clock = float(rng.exponential())
    if integrated_hazard(j, k, s, horizon) < clock:
        return None
    lo, h_lo = s, 0.0
    width = clock / max(birth_rate(j, s, k), 1e-300)
    while True:
        hi = min(s + width, horizon)
        h_hi = h_lo + integrated_hazard(j, k, lo, hi)
        if h_hi >= clock or hi >= horizon:
            break
        lo, h_lo = hi, h_hi
        width *= 2.0
    t = lo + (hi - lo) * (clock - h_lo) / max(h_hi - h_lo, 1e-300)
    for _ in range(200):
        f = h_lo + integrated_hazard(j, k, lo, t) - clock
        if f < 0:
            lo, h_lo = t, f + clock
        else:
            hi = t
        step = f / birth_rate(j, t, k)
        if abs(step) <= TIME_RTOL * max(t, 1e-300) or hi - lo <= TIME_RTOL * hi:
            return t - step
        t = t - step
        if not lo < t < hi:
            t = 0.5 * (lo + hi)
    raise QuadratureError("root search did not converge")


def simulate_birth_coordinate(j: int, horizon: float, rng) -> CoordinateTrajectory:
    """Event-driven path of ``B_j`` on ``[0, horizon]`` started from level 0."""
    if j < 1 or not horizon > 0:
        raise ValueError("need j >= 1 and horizon > 0")
    times = []
    s = 0.0
    for k in range(j - 1):
        t = sample_next_jump(j, k, s, horizon, rng)
        if t is None:
            break
        times.append(t)
        s = t
    return CoordinateTrajectory(j, tuple(times), horizon)


_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


class HazardTable:
    """Cumulative hazard ``Lambda(t) = int_0^t p_j(u, k) du`` on ``[0, horizon]``.

    The interval is cut into pieces on which 8- and 16-point Gauss-Legendre
    agree to ~1e-13, so the 8-point rule is trusted on any sub-interval of a
    piece.  Cumulative values at the cut points are stored; inside a piece
    ``Lambda`` is integrated directly.  Vectorized evaluation and inversion
    make this the Monte Carlo workhorse; it agrees with
    :func:`integrated_hazard` to quadrature tolerance.
    """

    def __init__(self, j: int, k: int, horizon: float):
        _check_level(j, k)
        if k == j - 1:
            raise ValueError("level j-1 is absorbing; no hazard table")
        self.j, self.k, self.horizon = j, k, float(horizon)
        self.edges, self.cum = self._build()

    def rate(self, t: np.ndarray) -> np.ndarray:
        return birth_rate(self.j, t, self.k)

    def _gl(self, a: np.ndarray, b: np.ndarray, rule=_GL8) -> np.ndarray:
        nodes, weights = rule
        half = 0.5 * (b - a)
        x = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
        vals = self.rate(x.ravel()).reshape(x.shape)
        # row-wise sum, not BLAS: results must not depend on the batch shape
        return half * np.sum(vals * weights, axis=1)

    def _build(self) -> Tuple[np.ndarray, np.ndarray]:
        hz = self.horizon
        edges = np.linspace(0.0, min(hz, 1.0), 9)
        if hz > 1.0:
            count = max(2, int(math.ceil(math.log(hz) / math.log(1.25))) + 1)
            edges = np.concatenate([edges, np.geomspace(1.0, hz, count)])
        edges = np.unique(edges)
        for _ in range(60):
            a, b = edges[:-1], edges[1:]
            fine = self._gl(a, b, _GL16)
            bad = np.abs(self._gl(a, b) - fine) > 1e-13 * np.maximum(1.0, np.abs(fine))
            if not np.any(bad):
                break
            edges = np.sort(np.concatenate([edges, 0.5 * (a + b)[bad]]))
        else:
            raise QuadratureError(f"hazard table for j={self.j}, k={self.k} did not converge")
        return edges, np.concatenate([[0.0], np.cumsum(fine)])

    def _piece(self, t: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.edges) - 2)

    def cumulative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = t.reshape(-1)
        idx = self._piece(flat)
        return (self.cum[idx] + self._gl(self.edges[idx], flat)).reshape(t.shape)

    def invert(self, target) -> np.ndarray:
        """Times ``t <= horizon`` with ``Lambda(t) = target``; ``inf`` when beyond horizon."""
        target = np.asarray(target, dtype=float)
        out = np.full(target.shape, np.inf)
        ok = np.flatnonzero(target <= self.cum[-1])
        if ok.size == 0:
            return out
        tg = target[ok]
        idx = np.clip(np.searchsorted(self.cum, tg, side="right") - 1, 0, len(self.edges) - 2)
        a, b = self.edges[idx], self.edges[idx + 1]
        base = self.cum[idx]
        lo, hi = a.copy(), b.copy()
        t = a + (b - a) * (tg - base) / np.maximum(self.cum[idx + 1] - base, 1e-300)
        active = np.arange(ok.size)
        for _ in range(100):
            ta = t[active]
            f = base[active] + self._gl(a[active], ta) - tg[active]
            lo[active] = np.where(f < 0, ta, lo[active])
            hi[active] = np.where(f > 0, ta, hi[active])
            step = f / self.rate(ta)
            nxt = ta - step
            done = np.abs(step) <= 1e-13 * np.maximum(ta, 1e-300)
            stray = ~done & ~((nxt > lo[active]) & (nxt < hi[active]))
            t[active] = np.where(stray, 0.5 * (lo[active] + hi[active]), nxt)
            active = active[~done]
            if active.size == 0:
                break
        else:
            raise QuadratureError("hazard inversion did not converge")
        out[ok] = t
        return out


@functools.lru_cache(maxsize=65536)
def hazard_table(j: int, k: int, horizon: float) -> HazardTable:
    return HazardTable(j, k, horizon)


def simulate_birth_coordinate_batch(j: int, horizon: float, seed: int,
                                    replications: np.ndarray):
    """Coordinate ``j`` for many replications at once.

    Uses the same keyed clocks as ``simulate_birth_coordinate(j, horizon,
    CounterStream(seed, r, j))``: the jump out of level ``k`` consumes draw
    ``k`` of stream ``(r, j)``.  Returns ``(rows, levels, times)`` for all jumps,
    ``rows`` indexing into ``replications``.
    """
    reps = np.asarray(replications, dtype=np.int64)
    rows_out, levels_out, times_out = [], [], []
    alive = np.arange(reps.size)
    s = np.zeros(reps.size)
    for k in range(j - 1):
        if alive.size == 0:
            break
        table = hazard_table(j, k, float(horizon))
        clocks = counter_exponential(seed, reps[alive], j, k)
        start = np.zeros(alive.size) if k == 0 else table.cumulative(s)
        t = table.invert(start + clocks)
        hit = np.isfinite(t)
        alive, s = alive[hit], t[hit]
        rows_out.append(alive)
        levels_out.append(np.full(alive.size, k + 1, dtype=np.int64))
        times_out.append(s)
    if not rows_out:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0)
    return np.concatenate(rows_out), np.concatenate(levels_out), np.concatenate(times_out)
