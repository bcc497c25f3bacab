"""Full Mallows process paths assembled from independent coordinate paths.

A path is a time-ordered list of events ``(t, j, k)``: coordinate ``j`` steps
up to level ``k`` at time ``t``.  The permutation at time ``t`` is
``phi`` of the inversion vector of levels reached by then.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .birth import simulate_birth_coordinate, simulate_birth_coordinate_batch
from .perms import InversionVector, Permutation, phi, phi_batch
from .rng import counter_uniform
from .trajectory import CoordinateTrajectory
from .uniform import UniformDriver, jump_times_batch, simulate_uniform_coordinate

CONSTRUCTIONS = ("birth", "uniform")
MAX_RESAMPLES = 16
# attempt number is folded into the replication key above this bit
_ATTEMPT_SHIFT = 40


class TieError(RuntimeError):
    """Two coordinates jumped at the same floating-point time."""


def attempt_key(replication: int, attempt: int) -> int:
    return int(replication) + (int(attempt) << _ATTEMPT_SHIFT)


@dataclass(frozen=True, order=True)
class Event:
    t: float
    j: int
    k: int


@dataclass(frozen=True)
class JumpingTimes:
    """``T_1 <= T_2 <= ...``; only times up to the horizon are present."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(x) for x in self.values)
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("jumping times must be non-decreasing")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        """One-based: ``jt[1]`` is ``T_1``."""
        if k < 1:
            raise IndexError("jumping times are indexed from 1")
        return self.values[k - 1]

    def get(self, k: int) -> Optional[float]:
        return self.values[k - 1] if 1 <= k <= len(self.values) else None


@dataclass(frozen=True)
class ProcessTrajectory:
    n: int
    horizon: float
    events: tuple
    construction: str
    resamples: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"construction must be one of {CONSTRUCTIONS}")
        evs = tuple(e if isinstance(e, Event) else Event(float(e[0]), int(e[1]), int(e[2]))
                    for e in self.events)
        level = [0] * (self.n + 1)
        prev = 0.0
        for e in evs:
            if not prev < e.t <= self.horizon:
                raise ValueError(f"event time {e.t} breaks strict ordering or the horizon")
            if not 1 <= e.j <= self.n:
                raise ValueError(f"coordinate {e.j} outside 1..{self.n}")
            if e.k != level[e.j] + 1 or e.k > e.j - 1:
                raise ValueError(f"coordinate {e.j} cannot step from {level[e.j]} to {e.k}")
            level[e.j] = e.k
            prev = e.t
        object.__setattr__(self, "events", evs)

    def coordinate(self, j: int) -> CoordinateTrajectory:
        return CoordinateTrajectory(j, tuple(e.t for e in self.events if e.j == j), self.horizon)

    def to_jsonl(self, with_sigma: bool = False, replication: Optional[int] = None) -> str:
        out = []
        entries = [0] * self.n
        for e in self.events:
            rec = {} if replication is None else {"replication": replication}
            rec.update(t=e.t, j=e.j, k=e.k)
            if with_sigma:
                entries[e.j - 1] = e.k
                rec["sigma_after"] = list(phi(InversionVector(tuple(entries))).one_based())
            out.append(json.dumps(rec) + "\n")
        return "".join(out)


def merge_coordinates(n: int, horizon: float, coords: Sequence[CoordinateTrajectory],
                      construction: str, resamples: int = 0) -> ProcessTrajectory:
    """k-way merge of per-coordinate jump lists; raises TieError on equal times."""
    streams = [[(t, c.j, k) for k, t in enumerate(c.jump_times, start=1)] for c in coords]
    events = list(heapq.merge(*streams))
    for a, b in zip(events, events[1:]):
        if a[0] == b[0]:
            raise TieError(f"coordinates {a[1]} and {b[1]} both jump at t={a[0]!r}")
    return ProcessTrajectory(n, horizon, tuple(Event(*e) for e in events), construction, resamples)


def keyed_driver(n: int, seed: int, replication: int) -> UniformDriver:
    """The driver the keyed streams assign to one replication: ``U_j`` is draw 0 of ``(rep, j)``."""
    return UniformDriver(tuple(counter_uniform(seed, replication, np.arange(1, n + 1), 0)))


def simulate_process(n: int, horizon: float, construction: str = "birth", *,
                     seed: int = 0, replication: int = 0, rng=None,
                     driver: Optional[UniformDriver] = None) -> ProcessTrajectory:
    """Simulate one path on ``[0, horizon]``.

    Birth paths use the keyed streams ``(seed, replication, j)`` unless a
    sequential ``rng`` (anything with ``.exponential()``) is given.  Uniform
    paths use ``driver`` when supplied, else the keyed driver.  A time tie is
    resampled with a fresh key; a tie under a replayed driver cannot be and
    raises :class:`TieError`.
    """
    if construction not in CONSTRUCTIONS:
        raise ValueError(f"construction must be one of {CONSTRUCTIONS}")
    if n < 1 or not horizon > 0:
        raise ValueError("need n >= 1 and horizon > 0")
    if driver is not None and driver.n != n:
        raise ValueError(f"driver has {driver.n} uniforms, need {n}")
    for attempt in range(MAX_RESAMPLES):
        key = attempt_key(replication, attempt)
        if construction == "uniform":
            drv = driver if driver is not None else keyed_driver(n, seed, key)
            coords = [simulate_uniform_coordinate(j, horizon, u) for j, u in enumerate(drv.u, start=1)]
        elif rng is not None:
            coords = [simulate_birth_coordinate(j, horizon, rng) for j in range(1, n + 1)]
        else:
            coords = []
            for j in range(1, n + 1):
                _, _, times = simulate_birth_coordinate_batch(j, horizon, seed, np.array([key]))
                coords.append(CoordinateTrajectory(j, tuple(times), horizon))
        try:
            return merge_coordinates(n, horizon, coords, construction, resamples=attempt)
        except TieError:
            if driver is not None:
                raise
    raise TieError(f"{MAX_RESAMPLES} consecutive attempts produced time ties")


def _check_time(traj: ProcessTrajectory, t: float) -> None:
    if not 0 <= t <= traj.horizon:
        raise ValueError(f"t={t} outside [0, {traj.horizon}]")


def inversion_vector_at(traj: ProcessTrajectory, t: float) -> InversionVector:
    _check_time(traj, t)
    entries = [0] * traj.n
    for e in traj.events:
        if e.t > t:
            break
        entries[e.j - 1] = e.k
    return InversionVector(tuple(entries))


def state_at(traj: ProcessTrajectory, t: float) -> Permutation:
    """The permutation at time ``t``; an event at exactly ``t`` is included."""
    return phi(inversion_vector_at(traj, t))


def jumping_times(traj: ProcessTrajectory) -> JumpingTimes:
    return JumpingTimes(tuple(e.t for e in traj.events))


def jump_count_at(traj: ProcessTrajectory, t: float) -> int:
    _check_time(traj, t)
    return sum(1 for e in traj.events if e.t <= t)


def transition_edges(traj: ProcessTrajectory) -> List[Tuple[Permutation, Permutation]]:
    """``(before, after)`` state pairs at every event, in time order."""
    entries = [0] * traj.n
    before = Permutation.identity(traj.n)
    edges = []
    for e in traj.events:
        entries[e.j - 1] = e.k
        after = phi(InversionVector(tuple(entries)))
        edges.append((before, after))
        before = after
    return edges


def _coordinate_events(n: int, horizon: float, construction: str, seed: int,
                       keys: np.ndarray, j: int):
    if construction == "birth":
        return simulate_birth_coordinate_batch(j, horizon, seed, keys)
    u = counter_uniform(seed, keys, j, 0)
    levels = np.arange(1, j)
    times = jump_times_batch(j, levels[None, :], u[:, None])
    rows, cols = np.nonzero(times <= horizon)
    return rows, levels[cols], times[rows, cols]


class TrajectoryBatch:
    """Many replications of one construction held as flat, sorted event arrays.

    Replication ``r`` uses the keyed streams of replication ``r``, so
    ``batch.trajectory(i)`` equals ``simulate_process(..., replication=r)``.
    Rows whose events collide in time are resampled with the next attempt key.
    """

    def __init__(self, n: int, horizon: float, construction: str, seed: int,
                 replications, progress=None):
        if construction not in CONSTRUCTIONS:
            raise ValueError(f"construction must be one of {CONSTRUCTIONS}")
        if n < 1 or not horizon > 0:
            raise ValueError("need n >= 1 and horizon > 0")
        self.n = int(n)
        self.horizon = float(horizon)
        self.construction = construction
        self.seed = int(seed)
        self.replications = np.asarray(
            np.arange(replications) if np.isscalar(replications) else replications, dtype=np.int64)
        self.resamples = np.zeros(self.replications.size, dtype=np.int64)
        self._simulate(progress)

    def _run(self, keys: np.ndarray, progress):
        parts = []
        for j in range(2, self.n + 1):
            rows, levels, times = _coordinate_events(self.n, self.horizon, self.construction,
                                                     self.seed, keys, j)
            parts.append((rows, np.full(rows.size, j), levels, times))
            if progress is not None:
                progress(j, self.n)
        if not parts:
            return (np.empty(0, dtype=np.int64),) * 3 + (np.empty(0),)
        return tuple(np.concatenate(p) for p in zip(*parts))

    def _simulate(self, progress):
        rows, js, ks, ts = self._run(self.replications, progress)
        for attempt in range(1, MAX_RESAMPLES + 1):
            bad = self._tied_rows(rows, ts)
            if bad.size == 0:
                break
            self.resamples[bad] = attempt
            keep = ~np.isin(rows, bad)
            keys = self.replications[bad] + (attempt << _ATTEMPT_SHIFT)
            r2, j2, k2, t2 = self._run(keys, None)
            rows = np.concatenate([rows[keep], bad[r2]])
            js, ks, ts = (np.concatenate([a[keep], b]) for a, b in ((js, j2), (ks, k2), (ts, t2)))
        else:
            raise TieError("time ties persisted after resampling")
        order = np.lexsort((ts, rows))
        self.rows = rows[order].astype(np.int64)
        self.j = js[order].astype(np.int64)
        self.k = ks[order].astype(np.int64)
        self.t = ts[order].astype(float)
        self._starts = np.searchsorted(self.rows, np.arange(self.size + 1))

    @staticmethod
    def _tied_rows(rows: np.ndarray, ts: np.ndarray) -> np.ndarray:
        order = np.lexsort((ts, rows))
        r, t = rows[order], ts[order]
        clash = (r[1:] == r[:-1]) & (t[1:] == t[:-1])
        return np.unique(r[1:][clash])

    @property
    def size(self) -> int:
        return self.replications.size

    def event_counts(self) -> np.ndarray:
        return np.diff(self._starts)

    def levels_at(self, t: float) -> np.ndarray:
        """``(R, n)`` inversion vectors at time ``t``."""
        if not 0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        out = np.zeros((self.size, self.n), dtype=np.int64)
        m = self.t <= t
        np.maximum.at(out, (self.rows[m], self.j[m] - 1), self.k[m])
        return out

    def states_at(self, t: float) -> np.ndarray:
        """``(R, n)`` zero-based one-line permutations at time ``t`` (small n)."""
        return phi_batch(self.levels_at(t))

    def jump_count_at(self, t: float) -> np.ndarray:
        if not 0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        return np.bincount(self.rows[self.t <= t], minlength=self.size)

    def jump_times(self, k_max: int) -> np.ndarray:
        """``(R, k_max)`` array of ``T_1..T_k_max`` with NaN where censored."""
        out = np.full((self.size, k_max), np.nan)
        pos = np.arange(self.rows.size) - self._starts[self.rows]
        m = pos < k_max
        out[self.rows[m], pos[m]] = self.t[m]
        return out

    def trajectory(self, i: int) -> ProcessTrajectory:
        a, b = self._starts[i], self._starts[i + 1]
        events = tuple(Event(float(t), int(j), int(k))
                       for t, j, k in zip(self.t[a:b], self.j[a:b], self.k[a:b]))
        return ProcessTrajectory(self.n, self.horizon, events, self.construction,
                                 int(self.resamples[i]))

    def __iter__(self) -> Iterator[ProcessTrajectory]:
        for i in range(self.size):
            yield self.trajectory(i)

    def summary_csv(self, k_max: Optional[int] = None) -> str:
        """``replication,T1,...,TK`` with empty cells for censored times."""
        if k_max is None:
            k_max = int(self.event_counts().max(initial=0))
        times = self.jump_times(k_max)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replication"] + [f"T{k}" for k in range(1, k_max + 1)])
        for rep, row in zip(self.replications, times):
            w.writerow([int(rep)] + ["" if math.isnan(x) else repr(float(x)) for x in row])
        return buf.getvalue()
