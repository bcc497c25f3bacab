"""The static Mallows distribution pi_{n,q} on permutations."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .perms import InversionVector, Permutation, inv_count, inv_vector, phi

ORACLE_MAX_N = 8
_UNIFORM_BRANCH = 1e-9


@dataclass(frozen=True)
class MallowsParams:
    n: int
    q: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (self.q >= 0 and math.isfinite(self.q)):
            raise ValueError(f"q must be a finite non-negative real, got {self.q!r}")


@dataclass(frozen=True)
class InversionCountTable:
    """``counts[l]`` is the number of permutations of size n with l inversions."""

    n: int
    counts: tuple

    @property
    def max_inversions(self) -> int:
        return self.n * (self.n - 1) // 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ell", "count"])
        for ell, c in enumerate(self.counts):
            w.writerow([ell, c])
        return buf.getvalue()


def geometric_sum(q: float, j: int) -> float:
    """``sum_{l=0}^{j-1} q^l``."""
    if q == 1.0:
        return float(j)
    if q == 0.0:
        return 1.0
    if q < 1.0:
        return -math.expm1(j * math.log(q)) / (1.0 - q)
    return math.expm1(j * math.log(q)) / (q - 1.0)


def log_geometric_sum(q: float, j: int) -> float:
    """``log sum_{l=0}^{j-1} q^l`` without overflow for large q**j."""
    if q == 1.0:
        return math.log(j)
    if q == 0.0:
        return 0.0
    lq = math.log(q)
    if q < 1.0:
        return math.log(-math.expm1(j * lq)) - math.log1p(-q)
    # q > 1: q^{j-1} * sum_{i<j} q^{-i}
    return (j - 1) * lq + math.log(-math.expm1(-j * lq)) - math.log(-math.expm1(-lq))


def normalizing_constant(params: MallowsParams, log: bool = False) -> float:
    """``Z_{n,q} = prod_{k=1}^n sum_{l<k} q^l``; ``log=True`` returns ``log Z``."""
    n, q = params.n, params.q
    if log:
        return math.fsum(log_geometric_sum(q, k) for k in range(1, n + 1))
    z = 1.0
    for k in range(1, n + 1):
        z *= geometric_sum(q, k)
    if not math.isfinite(z):
        raise OverflowError(f"Z_(n={n}, q={q}) exceeds the float range; use log=True")
    return z


def pmf(sigma: Permutation, params: MallowsParams, log: bool = False) -> float:
    """``q^Inv(sigma) / Z_{n,q}`` with the convention ``0^0 = 1``."""
    if sigma.n != params.n:
        raise ValueError(f"permutation size {sigma.n} does not match n={params.n}")
    k = inv_count(sigma)
    q = params.q
    if q == 0.0:
        if log:
            return 0.0 if k == 0 else -math.inf
        return 1.0 if k == 0 else 0.0
    logp = k * math.log(q) - normalizing_constant(params, log=True)
    return logp if log else math.exp(logp)


def product_form_pmf(sigma: Permutation, q: float) -> float:
    """``prod_j q^{Inv_j(sigma)} / sum_{l<j} q^l`` (independent-coordinate form)."""
    p = 1.0
    for j, e in enumerate(inv_vector(sigma).entries, start=1):
        p *= (q ** e if e else 1.0) / geometric_sum(q, j)
    return p


def truncated_geometric(j: int, q: float, u):
    """Inverse CDF of ``P(I = k) proportional to q^k`` on ``{0..j-1}`` at uniform(s) ``u``.

    ``P(I <= k) = (1 - q^{k+1}) / (1 - q^j)`` so the answer is
    ``floor(log(1 - u (1 - q^j)) / log q)``; the uniform branch takes over
    when ``|q - 1|`` is below 1e-9.
    """
    u = np.asarray(u, dtype=float)
    if j == 1 or q == 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    if abs(q - 1.0) < _UNIFORM_BRANCH:
        k = np.floor(j * u)
    else:
        lq = math.log(q)
        if q < 1.0:
            num = np.log1p(u * math.expm1(j * lq))
        else:
            num = j * lq + np.log(u + (1.0 - u) * math.exp(-j * lq))
        k = np.floor(num / lq)
    return np.clip(k, 0, j - 1).astype(np.int64)


def sample_inversion_vectors(params: MallowsParams, size: int, rng) -> np.ndarray:
    """``(size, n)`` array of independent inversion vectors with Mallows marginals."""
    n, q = params.n, params.q
    u = rng.uniform(size=(size, n)) if size else np.empty((0, n))
    out = np.empty((size, n), dtype=np.int64)
    for j in range(1, n + 1):
        out[:, j - 1] = truncated_geometric(j, q, u[:, j - 1])
    return out


def sample(params: MallowsParams, rng) -> Permutation:
    """One pi_{n,q} draw: independent truncated-geometric coordinates mapped through phi."""
    entries = tuple(int(truncated_geometric(j, params.q, rng.uniform())) for j in range(1, params.n + 1))
    return phi(InversionVector(entries))


def inversion_counts_upto(n: int, max_ell: int) -> List[int]:
    """``S^l_n`` for ``l = 0..max_ell`` by truncated bounded-part convolution."""
    counts = [1] + [0] * max_ell
    for j in range(2, n + 1):
        # multiply by 1 + x + ... + x^{j-1} using a running window sum
        new = [0] * (max_ell + 1)
        window = 0
        for ell in range(max_ell + 1):
            window += counts[ell]
            if ell - j >= 0:
                window -= counts[ell - j]
            new[ell] = window
        counts = new
    return counts


def inversion_count_table(n: int) -> InversionCountTable:
    """Exact integer table ``S^0_n .. S^{C(n,2)}_n``."""
    if n < 1:
        raise ValueError("n must be positive")
    return InversionCountTable(n, tuple(inversion_counts_upto(n, n * (n - 1) // 2)))


def exact_jump_time_sf(n: int, k: int, t: float) -> float:
    """``P(T_k > t) = sum_{l<k} S^l_n t^l / Z_{n,t}``, valid for every monotone Mallows process."""
    top = n * (n - 1) // 2
    if not 1 <= k <= top:
        raise ValueError(f"k must lie in [1, {top}], got {k}")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return 1.0
    counts = inversion_counts_upto(n, k - 1)
    lt = math.log(t)
    terms = [math.log(c) + ell * lt for ell, c in enumerate(counts)]
    mx = max(terms)
    log_num = mx + math.log(math.fsum(math.exp(x - mx) for x in terms))
    log_z = normalizing_constant(MallowsParams(n, t), log=True)
    return min(1.0, math.exp(log_num - log_z))


def exact_jump_time_sf_array(n: int, k: int, t) -> np.ndarray:
    """:func:`exact_jump_time_sf` evaluated over an array of times."""
    top = n * (n - 1) // 2
    if not 1 <= k <= top:
        raise ValueError(f"k must lie in [1, {top}], got {k}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    counts = np.array(inversion_counts_upto(n, k - 1), dtype=float)
    out = np.ones(t.shape)
    pos = t > 0
    lt = np.log(t[pos])
    terms = np.log(counts)[:, None] + np.arange(k)[:, None] * lt[None, :]
    mx = terms.max(axis=0)
    log_num = mx + np.log(np.exp(terms - mx).sum(axis=0))
    # log Z = sum_j log sum_{l<j} t^l, each term stable on both sides of t = 1
    log_z = np.zeros(lt.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j in range(2, n + 1):
            low = np.log(-np.expm1(j * lt)) - np.log(-np.expm1(lt))
            high = (j - 1) * lt + np.log(-np.expm1(-j * lt)) - np.log(-np.expm1(-lt))
            log_z += np.where(lt < 0, low, np.where(lt > 0, high, math.log(j)))
    out[pos] = np.minimum(1.0, np.exp(log_num - log_z))
    return out


def all_permutations(n: int):
    for vals in itertools.permutations(range(n)):
        yield Permutation(vals)


def enumerate_oracle(n: int, q: float, check: bool = True) -> Dict[Permutation, float]:
    """Exact pmf over all of S_n; also checks the product form at every permutation."""
    if n > ORACLE_MAX_N:
        raise ValueError(f"enumeration guarded to n <= {ORACLE_MAX_N}, got {n}")
    params = MallowsParams(n, q)
    table = {}
    for sigma in all_permutations(n):
        p = pmf(sigma, params)
        if check:
            alt = product_form_pmf(sigma, q)
            if not math.isclose(p, alt, rel_tol=1e-10, abs_tol=1e-300):
                raise AssertionError(f"product form mismatch at {sigma}: {p} vs {alt}")
        table[sigma] = p
    return table


def oracle_to_json(table: Dict[Permutation, float]) -> str:
    return json.dumps({str(s): p for s, p in table.items()}, indent=1)
