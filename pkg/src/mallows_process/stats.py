"""Goodness-of-fit machinery: KS with optional right censoring, pooled chi-square,
Erlang laws and a diagnostic for Poisson arrival sequences.

Every test returns a :class:`GofReport` carrying its statistic and threshold.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import special, stats as sps

DEFAULT_ALPHA = 1e-3
KS_MIN_N = 1000
MIN_EXPECTED = 5.0
# ks/chi2 are distributional tests; corr, moment and exact are checks on a
# statistic with a fixed threshold, reported in the same shape
TESTS = ("ks", "chi2", "corr", "moment", "exact")


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted observations out of ``count`` draws.

    With ``censor`` set, only draws ``<= censor`` were observed and the rest
    (``count - len(values)``) are known only to exceed it.
    """

    values: np.ndarray
    count: int
    censor: Optional[float] = None

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float))
        if vals.size and np.isnan(vals).any():
            raise ValueError("sample contains NaN; pass censored draws via `censor`")
        if self.count < vals.size:
            raise ValueError("count is smaller than the number of observations")
        if self.censor is None and self.count != vals.size:
            raise ValueError("uncensored sample must have count == len(values)")
        if self.censor is not None and vals.size and vals[-1] > self.censor:
            raise ValueError("observation beyond the censoring point")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, values) -> "EmpiricalSample":
        vals = np.asarray(values, dtype=float)
        return cls(vals, vals.size)

    @classmethod
    def censored(cls, values, censor: float) -> "EmpiricalSample":
        """NaN or values above ``censor`` are treated as censored."""
        vals = np.asarray(values, dtype=float)
        seen = vals[~np.isnan(vals) & (vals <= censor)]
        return cls(seen, vals.size, float(censor))


@dataclass(frozen=True)
class GofReport:
    test: str
    statistic: float
    threshold: float
    name: str = ""
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.test not in TESTS:
            raise ValueError(f"test must be one of {TESTS}")

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)

    def to_dict(self) -> dict:
        return {"test": self.test, "name": self.name, "statistic": self.statistic,
                "threshold": self.threshold, "pass": self.passed, "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def moment_check(name: str, statistic: float, threshold: float, **meta) -> GofReport:
    return GofReport("moment", float(statistic), float(threshold), name, meta)


def exact_check(name: str, violations: int, **meta) -> GofReport:
    return GofReport("exact", float(violations), 0.0, name, meta)


def z_score(sample, target: float) -> float:
    """``(mean - target) / standard error``."""
    x = np.asarray(sample, dtype=float)
    se = x.std(ddof=1) / math.sqrt(x.size)
    return (x.mean() - target) / se if se > 0 else (0.0 if x.mean() == target else math.inf)


def variance_z_score(sample, target: float) -> float:
    """Sample variance minus ``target`` over its estimated standard error."""
    x = np.asarray(sample, dtype=float)
    c = x - x.mean()
    v = float(np.mean(c ** 2)) * x.size / (x.size - 1)
    se = math.sqrt(max(float(np.mean(c ** 4)) - v ** 2, 0.0) / x.size)
    return (v - target) / se if se > 0 else (0.0 if v == target else math.inf)


def reports_csv(reports: Sequence[GofReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "statistic", "threshold", "pass"])
    for r in reports:
        w.writerow([r.name or r.test, repr(float(r.statistic)), repr(float(r.threshold)),
                    "true" if r.passed else "false"])
    return buf.getvalue()


def ks_statistic(sample: EmpiricalSample, cdf: Callable) -> float:
    """``sup |F_N - F|`` over the observed range.

    Uncensored this is ``max_i max(i/N - F(x_i), F(x_i) - (i-1)/N)``.  Under
    censoring at ``H`` the supremum runs over ``t <= H`` and the gap
    ``F(H) - m/N`` after the last observation is included.
    """
    N = sample.count
    if N == 0:
        raise ValueError("empty sample")
    x = sample.values
    m = x.size
    d = 0.0
    if m:
        F = np.asarray(cdf(x), dtype=float)
        i = np.arange(1, m + 1)
        d = float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))
    if sample.censor is not None:
        d = max(d, float(cdf(np.asarray(sample.censor))) - m / N)
    return min(max(d, 0.0), 1.0)


def kolmogorov_c(alpha: float) -> float:
    """Asymptotic Kolmogorov quantile ``sqrt(-ln(alpha/2)/2)`` (1.949 at 0.001)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


def ks_test(sample: EmpiricalSample, cdf: Callable, alpha: float = DEFAULT_ALPHA,
            name: str = "", target: str = "") -> GofReport:
    if sample.count < KS_MIN_N:
        raise ValueError(f"asymptotic KS threshold needs N >= {KS_MIN_N}, got {sample.count}")
    d = ks_statistic(sample, cdf)
    meta = {"N": sample.count, "alpha": alpha, "target": target}
    if sample.censor is not None:
        meta.update(censor=sample.censor, observed=int(sample.values.size))
    return GofReport("ks", d, kolmogorov_c(alpha) / math.sqrt(sample.count), name, meta)


def pool_cells(expected_counts: np.ndarray, minimum: float = MIN_EXPECTED) -> List[List[int]]:
    """Group cell indices until every group expects at least ``minimum``.

    The group with the smallest expectation is merged into the next smallest;
    ties break on the lowest index, so the result is deterministic.
    """
    groups = [[i] for i in range(len(expected_counts))]
    mass = [float(e) for e in expected_counts]
    while len(groups) > 1:
        order = sorted(range(len(groups)), key=lambda g: (mass[g], min(groups[g])))
        a = order[0]
        if mass[a] >= minimum:
            break
        b = order[1]
        groups[b] = sorted(groups[b] + groups[a])
        mass[b] += mass[a]
        del groups[a], mass[a]
    return groups


def chi_square(observed, expected, total: int, alpha: float = DEFAULT_ALPHA,
               name: str = "") -> GofReport:
    """Pearson chi-square of counts against category probabilities, small cells pooled."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(expected, dtype=float)
    if obs.shape != p.shape:
        raise ValueError("observed and expected differ in length")
    if int(obs.sum()) != total:
        raise ValueError(f"observed counts sum to {obs.sum()}, not {total}")
    if np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError("expected probabilities must be non-negative and sum to 1")
    impossible = int(np.sum(obs[p == 0]))
    if impossible:
        return GofReport("chi2", math.inf, 0.0, name,
                         {"N": total, "impossible_observations": impossible})
    keep = p > 0
    groups = pool_cells(p[keep] * total)
    if len(groups) <= 1:
        raise ValueError("pooling left a single category; the test is degenerate")
    o, e = obs[keep], p[keep] * total
    og = np.array([o[g].sum() for g in groups])
    eg = np.array([e[g].sum() for g in groups])
    stat = float(np.sum((og - eg) ** 2 / eg))
    dof = len(groups) - 1
    return GofReport("chi2", stat, float(sps.chi2.ppf(1.0 - alpha, dof)), name,
                     {"N": total, "dof": dof, "alpha": alpha, "cells": len(groups)})


def erlang_cdf(k: int, x):
    """Gamma(k, 1) CDF, ``1 - e^-x sum_{l<k} x^l / l!``, via the regularized incomplete gamma."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    x = np.asarray(x, dtype=float)
    out = special.gammainc(k, np.maximum(x, 0.0))
    return float(out) if out.ndim == 0 else out


def exponential_cdf(x):
    return erlang_cdf(1, x)


def poisson_point_check(arrivals, alpha: float = DEFAULT_ALPHA, name: str = "") -> List[GofReport]:
    """Diagnostics for rows ``(x_1 < ... < x_k)`` claimed to be unit-rate Poisson arrivals.

    (a) KS of each spacing ``x_i - x_{i-1}``, ``i = 2..k``, against Exp(1);
    (b) sample correlation of every pair of gaps ``x_1, x_2 - x_1, ...``,
    flagged when ``|rho| > 4/sqrt(N)``.
    """
    try:
        arr = np.asarray(arrivals, dtype=float)
    except ValueError as exc:
        raise ValueError("ragged arrival matrix") from exc
    if arr.ndim != 2:
        raise ValueError("ragged arrival matrix")
    R, k = arr.shape
    if k < 2:
        raise ValueError("need at least two arrivals per replication")
    if np.isnan(arr).any():
        raise ValueError("arrival matrix has censored entries")
    gaps = np.diff(arr, axis=1, prepend=0.0)
    prefix = f"{name}:" if name else ""
    reports = []
    for i in range(2, k + 1):
        reports.append(ks_test(EmpiricalSample.of(gaps[:, i - 1]), exponential_cdf, alpha,
                               f"{prefix}spacing{i}", "Exp(1)"))
    threshold = 4.0 / math.sqrt(R)
    for a, b in itertools.combinations(range(k), 2):
        x, y = gaps[:, a], gaps[:, b]
        sx, sy = x.std(), y.std()
        rho = 0.0 if not (sx > 0 and sy > 0) else float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
        reports.append(GofReport("corr", abs(rho), threshold, f"{prefix}corr{a + 1}_{b + 1}",
                                 {"N": R, "rho": rho}))
    return reports
