"""Permutations, inversion vectors and the bijection between them.

Permutations are stored zero-based (``values[i] = sigma(i+1) - 1``); every
textual or JSON form is one-based.  The inversion vector of ``sigma`` is
``(Inv_1, ..., Inv_n)`` with ``Inv_j = #{i < j : sigma(i) > sigma(j)}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Permutation:
    """A permutation of ``{1..n}`` held in zero-based one-line form."""

    values: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if sorted(vals) != list(range(len(vals))) or not vals:
            raise ValueError(f"not a permutation of 0..n-1: {self.values!r}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, *one_based: int) -> "Permutation":
        """``Permutation.of(2, 3, 1)`` builds the permutation from its one-based one-line form."""
        return cls.from_one_based(one_based)

    @classmethod
    def from_one_based(cls, seq: Iterable[int]) -> "Permutation":
        return cls(tuple(int(v) - 1 for v in seq))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.values)

    def one_based(self) -> tuple:
        return tuple(v + 1 for v in self.values)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.values):
            inv[v] = i
        return Permutation(tuple(inv))

    def __call__(self, i: int) -> int:
        """Evaluate at a one-based point."""
        return self.values[i - 1] + 1

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.one_based())

    def to_json(self) -> str:
        return json.dumps(list(self.one_based()))

    @classmethod
    def from_json(cls, text: str) -> "Permutation":
        return cls.from_one_based(json.loads(text))


@dataclass(frozen=True)
class InversionVector:
    """Element of E_n: entries ``I_1..I_n`` with ``0 <= I_j <= j-1``."""

    entries: tuple

    def __post_init__(self):
        ent = tuple(int(e) for e in self.entries)
        if not ent:
            raise ValueError("empty inversion vector")
        for j, e in enumerate(ent, start=1):
            if not 0 <= e <= j - 1:
                raise ValueError(f"I_{j} = {e} outside [0, {j - 1}]")
        object.__setattr__(self, "entries", ent)

    @classmethod
    def zeros(cls, n: int) -> "InversionVector":
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.entries)

    def total(self) -> int:
        return sum(self.entries)

    def to_json(self) -> str:
        return json.dumps(list(self.entries))

    @classmethod
    def from_json(cls, text: str) -> "InversionVector":
        return cls(tuple(json.loads(text)))


@dataclass(frozen=True)
class Transposition:
    """The transposition swapping positions ``i < j`` (zero-based)."""

    i: int
    j: int

    def __post_init__(self):
        if not 0 <= self.i < self.j:
            raise ValueError(f"need 0 <= i < j, got ({self.i}, {self.j})")

    def as_permutation(self, n: int) -> Permutation:
        vals = list(range(n))
        vals[self.i], vals[self.j] = self.j, self.i
        return Permutation(tuple(vals))

    def __str__(self) -> str:
        return f"<{self.i + 1} {self.j + 1}>"


class _Fenwick:
    """Binary indexed tree over ``0..n-1`` supporting k-th smallest lookup."""

    def __init__(self, n: int, fill: int = 0):
        self.n = n
        self.tree = [0] * (n + 1)
        if fill:
            for i in range(1, n + 1):
                self.tree[i] += fill
                parent = i + (i & -i)
                if parent <= n:
                    self.tree[parent] += self.tree[i]
        self._top = 1 << (n.bit_length() - 1) if n else 0

    def add(self, idx: int, delta: int) -> None:
        i = idx + 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & -i

    def prefix(self, idx: int) -> int:
        """Sum over ``0..idx-1``."""
        s, i = 0, idx
        while i > 0:
            s += self.tree[i]
            i -= i & -i
        return s

    def kth(self, k: int) -> int:
        """Zero-based position of the k-th (1-based) present element."""
        pos, step = 0, self._top
        while step:
            nxt = pos + step
            if nxt <= self.n and self.tree[nxt] < k:
                pos = nxt
                k -= self.tree[nxt]
            step >>= 1
        return pos


def _values(sigma) -> Sequence[int]:
    return sigma.values if isinstance(sigma, Permutation) else sigma


def inv_vector(sigma: Permutation) -> InversionVector:
    """Inversion vector in O(n log n): for each position, count larger earlier values."""
    vals = _values(sigma)
    n = len(vals)
    seen = _Fenwick(n)
    out = []
    for pos, v in enumerate(vals):
        out.append(pos - seen.prefix(v + 1))
        seen.add(v, 1)
    return InversionVector(tuple(out))


def inv_count(sigma: Permutation) -> int:
    """Number of inversions |{i < j : sigma(i) > sigma(j)}|."""
    return inv_vector(sigma).total()


def phi(inv: InversionVector) -> Permutation:
    """The permutation whose inversion vector is ``inv``.

    Fills positions n, n-1, ..., 1: with ``x_1 < ... < x_j`` the values not yet
    placed, position j receives ``x_{j - I_j}``.
    """
    entries = inv.entries if isinstance(inv, InversionVector) else InversionVector(tuple(inv)).entries
    n = len(entries)
    free = _Fenwick(n, fill=1)
    vals = [0] * n
    for j in range(n, 0, -1):
        v = free.kth(j - entries[j - 1])
        vals[j - 1] = v
        free.add(v, -1)
    return Permutation(tuple(vals))


def phi_naive(inv: InversionVector) -> Permutation:
    """Quadratic reference implementation of :func:`phi` built on a sorted list."""
    entries = inv.entries if isinstance(inv, InversionVector) else tuple(inv)
    n = len(entries)
    remaining = list(range(n))
    vals = [0] * n
    for j in range(n, 0, -1):
        vals[j - 1] = remaining.pop(j - entries[j - 1] - 1)
    return Permutation(tuple(vals))


def phi_inv(sigma: Permutation) -> InversionVector:
    return inv_vector(sigma)


def compose(sigma: Permutation, tau: Permutation) -> Permutation:
    """``(sigma . tau)(i) = sigma(tau(i))``."""
    if sigma.n != tau.n:
        raise ValueError(f"size mismatch: {sigma.n} vs {tau.n}")
    return Permutation(tuple(sigma.values[t] for t in tau.values))


def transposition_of(sigma: Permutation, sigma_prime: Permutation) -> Optional[Transposition]:
    """The transposition ``tau`` with ``sigma' = sigma . tau``, or None if there is none."""
    quotient = compose(sigma.inverse(), sigma_prime)
    moved = [i for i, v in enumerate(quotient.values) if v != i]
    if len(moved) != 2:
        return None
    return Transposition(moved[0], moved[1])


def phi_batch(codes: np.ndarray) -> np.ndarray:
    """Row-wise :func:`phi` for an ``(R, n)`` integer array; returns zero-based values.

    Vectorized over rows with O(n^2) work per row, so intended for small n.
    """
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim != 2:
        raise ValueError("codes must be a 2-d array")
    R, n = codes.shape
    free = np.ones((R, n), dtype=bool)
    out = np.empty((R, n), dtype=np.int64)
    rows = np.arange(R)
    for j in range(n, 0, -1):
        rank = j - codes[:, j - 1]          # 1-based rank among free values
        csum = np.cumsum(free, axis=1)
        v = np.argmax((csum == rank[:, None]) & free, axis=1)
        out[:, j - 1] = v
        free[rows, v] = False
    return out


def inv_vector_batch(values: np.ndarray) -> np.ndarray:
    """Row-wise inversion vectors of an ``(R, n)`` array of permutations."""
    values = np.asarray(values)
    R, n = values.shape
    out = np.zeros((R, n), dtype=np.int64)
    for j in range(1, n):
        out[:, j] = np.sum(values[:, :j] > values[:, j:j + 1], axis=1)
    return out
