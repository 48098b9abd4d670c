"""Brute-force ground truth for small graphs.

Everything here enumerates: DAGs, labelled partitions, orders.  Counting is
done in exact integer arithmetic.  Entry points refuse sizes where enumeration
would not finish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterator

import numpy as np
from scipy.special import logsumexp

from .graph import Dag, LabelledPartition, bits, popcount, to_mask
from .scoring import BgeParams, DataSet, ScoreTable, build_score_table, dag_log_score


class TooLargeError(ValueError):
    pass


def _guard(n: int, limit: int, what: str):
    if n > limit:
        raise TooLargeError(f"{what} is limited to n <= {limit} (got n={n})")


def enumerate_dags(n: int, max_parents: int | None = None) -> list[Dag]:
    """Every labelled DAG on ``n`` nodes with in-degree at most ``max_parents``."""
    _guard(n, 6, "DAG enumeration")
    if max_parents is None:
        max_parents = n - 1
    choices = [[to_mask(c) for k in range(max_parents + 1)
                for c in combinations([u for u in range(n) if u != v], k)]
               for v in range(n)]
    out = []
    parents = [0] * n

    def reaches(src: int, dst: int, assigned: int) -> bool:
        # is there a directed path src -> ... -> dst using assigned parent sets
        stack, seen = [dst], 1 << dst
        while stack:
            v = stack.pop()
            if v == src:
                return True
            if assigned >> v & 1:
                for u in bits(parents[v] & ~seen):
                    seen |= 1 << u
                    stack.append(u)
        return False

    def rec(v: int, assigned: int):
        if v == n:
            out.append(Dag(tuple(parents), check=False))
            return
        for p in choices[v]:
            # adding u -> v closes a cycle iff v already reaches u
            if any(reaches(v, u, assigned) for u in bits(p)):
                continue
            parents[v] = p
            rec(v + 1, assigned | 1 << v)
        parents[v] = 0

    rec(0, 0)
    return out


def count_dags_bruteforce(n: int) -> int:
    """Count acyclic digraphs by testing every off-diagonal 0/1 matrix for nilpotency."""
    _guard(n, 5, "digraph brute force")
    slots = [(i, j) for i in range(n) for j in range(n) if i != j]
    codes = np.arange(1 << len(slots), dtype=np.int64)
    a = np.zeros((len(codes), n, n), dtype=np.int64)
    for b, (i, j) in enumerate(slots):
        a[:, i, j] = (codes >> b) & 1
    power = a.copy()
    for _ in range(n - 1):
        power = np.minimum(power @ a, 1)
    return int(np.sum(~power.any(axis=(1, 2))))


@lru_cache(maxsize=None)
def count_dags(n: int) -> int:
    """Number of labelled DAGs on ``n`` nodes (inclusion-exclusion over outpoints)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    return sum((-1) ** (k + 1) * math.comb(n, k) * 2 ** (k * (n - k)) * count_dags(n - k)
               for k in range(1, n + 1))


def dags_per_labelling(lam) -> int:
    """DAGs compatible with one fixed node labelling of the partition ``lam``."""
    lam = list(lam)
    if not lam or any(k < 1 for k in lam):
        raise ValueError(f"partition parts must be positive, got {lam}")
    m = len(lam)
    suffix = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        suffix[j] = suffix[j + 1] + lam[j]
    total = 1
    for j in range(m - 1):
        total *= (2 ** lam[j + 1] - 1) ** lam[j]
    for j in range(m - 2):
        total *= 2 ** (lam[j] * suffix[j + 2])
    return total


def count_dags_in_partition(lam) -> int:
    lam = list(lam)
    labels = math.factorial(sum(lam))
    for k in lam:
        labels //= math.factorial(k)
    return labels * dags_per_labelling(lam)


def compositions(n: int) -> Iterator[tuple[int, ...]]:
    """Ordered integer partitions of ``n``."""
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first,) + rest


def enumerate_labelled_partitions(n: int) -> list[LabelledPartition]:
    _guard(n, 8, "labelled partition enumeration")

    def rec(remaining: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
        if not remaining:
            yield ()
            return
        for k in range(1, len(remaining) + 1):
            for first in combinations(remaining, k):
                rest = tuple(v for v in remaining if v not in first)
                for tail in rec(rest):
                    yield (first,) + tail

    return [LabelledPartition(els) for els in rec(tuple(range(n)))]


def count_linear_extensions(dag: Dag) -> int:
    """Number of node orders in which every parent precedes its children."""
    _guard(dag.n, 8, "linear extension counting")
    n = dag.n
    ways = [0] * (1 << n)
    ways[0] = 1
    for placed in range(1 << n):
        w = ways[placed]
        if not w:
            continue
        for v in range(n):
            if not placed >> v & 1 and dag.parents[v] & ~placed == 0:
                ways[placed | 1 << v] += w
    return ways[-1]


def count_linear_extensions_bruteforce(dag: Dag) -> int:
    count = 0
    for perm in permutations(range(dag.n)):
        pos = {v: k for k, v in enumerate(perm)}
        if all(pos[u] < pos[v] for u, v in dag.edges()):
            count += 1
    return count


# ---------------------------------------------------------------------------
# exact posteriors


@dataclass
class PosteriorTable:
    dags: list[Dag]
    log_scores: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self._index = {d: k for k, d in enumerate(self.dags)}

    def prob(self, dag: Dag) -> float:
        k = self._index.get(dag)
        return 0.0 if k is None else float(self.probs[k])

    def index(self, dag: Dag) -> int:
        return self._index[dag]

    def edge_posterior(self) -> np.ndarray:
        """Entry (i, j): posterior probability of the edge i -> j."""
        n = self.dags[0].n
        out = np.zeros((n, n))
        for d, p in zip(self.dags, self.probs):
            for u, v in d.edges():
                out[u, v] += p
        return out

    def argmax(self) -> list[Dag]:
        """All DAGs whose log score ties with the maximum (within 1e-9)."""
        best = self.log_scores.max()
        return [d for d, s in zip(self.dags, self.log_scores) if s >= best - 1e-9]


def posterior_from_table(table: ScoreTable, weights=None) -> PosteriorTable:
    """Exact normalised posterior over all DAGs the table can score.

    ``weights``, a callable ``Dag -> positive number``, reweights each DAG;
    passing ``count_linear_extensions`` gives the law order sampling targets.
    """
    _guard(table.n, 5, "exact posterior")
    dags = enumerate_dags(table.n, table.max_parents)
    ls = np.array([dag_log_score(d, table) for d in dags])
    lw = ls.copy()
    if weights is not None:
        lw += np.log([float(weights(d)) for d in dags])
    probs = np.exp(lw - logsumexp(lw))
    return PosteriorTable(dags, ls, probs)


def exact_posterior(data: DataSet, max_parents: int, params: BgeParams | None = None) -> PosteriorTable:
    return posterior_from_table(build_score_table(data, max_parents, params))


def order_biased_posterior(table: ScoreTable) -> PosteriorTable:
    """DAG law of order sampling: posterior times the number of compatible orders."""
    return posterior_from_table(table, weights=count_linear_extensions)


def partition_posterior(table: ScoreTable) -> dict[LabelledPartition, float]:
    """Exact P(partition | data) by grouping enumerated DAGs."""
    from .graph import outpoint_decomposition
    post = posterior_from_table(table)
    out: dict[LabelledPartition, float] = {}
    for d, p in zip(post.dags, post.probs):
        key = outpoint_decomposition(d)
        out[key] = out.get(key, 0.0) + p
    return out


def order_ok(order, dag: Dag) -> bool:
    """Whether ``dag`` fits ``order``: parents sit at later positions."""
    pos = {v: k for k, v in enumerate(order)}
    return all(pos[u] > pos[v] for u, v in dag.edges())


def in_degree_ok(dag: Dag, max_parents: int) -> bool:
    return all(popcount(p) <= max_parents for p in dag.parents)
