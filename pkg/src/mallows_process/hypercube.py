"""The expanded hypercube on S_n and structural checks of transition graphs.

Vertices are permutations, joined when their inversion vectors are at L1
distance one.  A vertex id is the mixed-radix number ``sum_j I_j (j-1)!``
(digit ``I_j`` in radix ``j``), giving dense ids ``0..n!-1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

from .perms import InversionVector, Permutation, compose, inv_vector, phi, transposition_of
from .process import transition_edges

MAX_N = 8
CERTIFY_MAX_N = 6


class StructureViolation(AssertionError):
    """An observed transition that the structure theorem rules out."""


def encode(inv: InversionVector) -> int:
    code, radix = 0, 1
    for j, e in enumerate(inv.entries, start=1):
        code += e * radix
        radix *= j
    return code


def decode(code: int, n: int) -> InversionVector:
    entries = []
    for j in range(1, n + 1):
        code, e = divmod(code, j)
        entries.append(e)
    if code:
        raise ValueError(f"id too large for n={n}")
    return InversionVector(tuple(entries))


@dataclass(frozen=True)
class HypercubeGraph:
    n: int
    labels: tuple          # id -> Permutation
    edges: FrozenSet[Tuple[int, int]]

    @property
    def vertex_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def id_of(self, sigma: Permutation) -> int:
        return encode(inv_vector(sigma))

    def neighbours(self, v: int) -> List[int]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return sorted(out)

    def edges_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "v"])
        for a, b in sorted(self.edges):
            w.writerow([a, b])
        return buf.getvalue()

    def labels_json(self) -> str:
        return json.dumps({str(i): list(s.one_based()) for i, s in enumerate(self.labels)}, indent=1)


def expected_edge_count(n: int) -> int:
    """``n! * sum_j (j-1)/j``, computed exactly."""
    f = math.factorial(n)
    return sum(f * (j - 1) // j for j in range(1, n + 1))


def build_hypercube(n: int) -> HypercubeGraph:
    """All of the expanded hypercube for ``n <= 8``."""
    if not 1 <= n <= MAX_N:
        raise ValueError(f"hypercube build is guarded to 1 <= n <= {MAX_N}, got {n}")
    total = math.factorial(n)
    labels = tuple(phi(decode(c, n)) for c in range(total))
    edges = set()
    for code in range(total):
        digits = decode(code, n).entries
        radix = 1
        for j, e in enumerate(digits, start=1):
            # raise digit j by one: the id grows by its radix weight
            if e < j - 1:
                edges.add((code, code + radix))
            radix *= j
    graph = HypercubeGraph(n, labels, frozenset(edges))
    if graph.edge_count != expected_edge_count(n):
        raise AssertionError("edge count disagrees with the closed form")
    return graph


def is_hypercube_edge(sigma: Permutation, sigma_prime: Permutation) -> bool:
    if sigma.n != sigma_prime.n:
        raise ValueError(f"size mismatch: {sigma.n} vs {sigma_prime.n}")
    a, b = inv_vector(sigma).entries, inv_vector(sigma_prime).entries
    return sum(abs(x - y) for x, y in zip(a, b)) == 1


def generator_set(graph: HypercubeGraph) -> Set[Permutation]:
    """``{sigma^-1 sigma'}`` over both orientations of every edge."""
    gens = set()
    for a, b in graph.edges:
        s, t = graph.labels[a], graph.labels[b]
        gens.add(compose(s.inverse(), t))
        gens.add(compose(t.inverse(), s))
    return gens


def all_transpositions(n: int) -> Set[Permutation]:
    out = set()
    for i in range(n):
        for j in range(i + 1, n):
            vals = list(range(n))
            vals[i], vals[j] = j, i
            out.add(Permutation(tuple(vals)))
    return out


def adjacent_transpositions(n: int) -> Set[Permutation]:
    out = set()
    for i in range(n - 1):
        vals = list(range(n))
        vals[i], vals[i + 1] = i + 1, i
        out.add(Permutation(tuple(vals)))
    return out


def is_connected(graph: HypercubeGraph) -> bool:
    adj: Dict[int, List[int]] = {v: [] for v in range(graph.vertex_count)}
    for a, b in graph.edges:
        adj[a].append(b)
        adj[b].append(a)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == graph.vertex_count


def is_bipartite_by_parity(graph: HypercubeGraph) -> bool:
    """Every edge joins an even and an odd inversion count."""
    parity = [sum(decode(v, graph.n).entries) % 2 for v in range(graph.vertex_count)]
    return all(parity[a] != parity[b] for a, b in graph.edges)


@dataclass
class StructureReport:
    n: int
    trajectories: int = 0
    transitions: int = 0
    edge_counts: Counter = field(default_factory=Counter)
    generator_counts: Counter = field(default_factory=Counter)
    total_edges: int = 0

    @property
    def coverage(self) -> float:
        return len(self.edge_counts) / self.total_edges if self.total_edges else 0.0

    @property
    def observed_generators(self) -> Set[Permutation]:
        return set(self.generator_counts)

    @property
    def adjacent_generators_observed(self) -> bool:
        return adjacent_transpositions(self.n) <= self.observed_generators

    def merge(self, other: "StructureReport") -> "StructureReport":
        if other.n != self.n:
            raise ValueError("cannot merge reports for different n")
        return StructureReport(self.n, self.trajectories + other.trajectories,
                               self.transitions + other.transitions,
                               self.edge_counts + other.edge_counts,
                               self.generator_counts + other.generator_counts,
                               self.total_edges)

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "trajectories": self.trajectories,
            "transitions": self.transitions,
            "coverage": self.coverage,
            "adjacent_generators_observed": self.adjacent_generators_observed,
            "edges_hit": len(self.edge_counts),
            "edges_total": self.total_edges,
            "edge_counts": {f"{a}-{b}": c for (a, b), c in sorted(self.edge_counts.items())},
            "generators": {str(g): c for g, c in sorted(self.generator_counts.items(),
                                                         key=lambda kv: kv[0].values)},
        }, indent=1)


def certify_structure(n: int, trajectories: Iterable) -> StructureReport:
    """Tally observed transitions and fail hard on any non-hypercube step.

    ``trajectories`` is any iterable of process trajectories of size ``n``.
    """
    if not 1 <= n <= CERTIFY_MAX_N:
        raise ValueError(f"certification is guarded to n <= {CERTIFY_MAX_N}")
    report = StructureReport(n, total_edges=expected_edge_count(n))
    for traj in trajectories:
        if traj.n != n:
            raise ValueError(f"trajectory of size {traj.n} in a size-{n} certification")
        report.trajectories += 1
        for before, after in transition_edges(traj):
            if not is_hypercube_edge(before, after):
                raise StructureViolation(f"transition {before} -> {after} is not a hypercube edge")
            tau = transposition_of(before, after)
            if tau is None:
                raise StructureViolation(f"{before}^-1 {after} is not a transposition")
            a, b = encode(inv_vector(before)), encode(inv_vector(after))
            report.edge_counts[(min(a, b), max(a, b))] += 1
            report.generator_counts[tau.as_permutation(n)] += 1
            report.transitions += 1
    return report
