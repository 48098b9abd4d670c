"""Edge reversal with score-weighted resampling of both endpoint parent sets.

For an edge ``i -> j`` the move removes every parent of ``i`` and ``j``, draws a
new parent set for ``i`` that contains ``j`` and avoids the descendants of
``i``, then a new parent set for ``j`` avoiding its descendants in the updated
graph.  Both draws are proportional to score.  The reverse move from the
proposal picks the new edge ``j -> i`` and mirrors the two draws, so the MH
ratio reduces to edge counts and the four draw normalisers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Dag, LabelledPartition, bits, descendant_masks, outpoint_decomposition
from .partition import partition_log_score, sample_dag_from_partition
from .scoring import ScoreTable, dag_log_score


@dataclass(frozen=True)
class RevProposal:
    proposed: Dag
    log_forward_z1: float
    log_forward_z2: float
    log_backward_z1: float
    log_backward_z2: float
    edge_count_before: int
    edge_count_after: int

    @property
    def log_ratio(self) -> float:
        return (math.log(self.edge_count_before) - math.log(self.edge_count_after)
                + self.log_forward_z1 + self.log_forward_z2
                - self.log_backward_z1 - self.log_backward_z2)


def descendant_matrix(dag: Dag) -> np.ndarray:
    """Boolean matrix with entry (i, j) true iff j is a descendant of i."""
    n = dag.n
    out = np.zeros((n, n), dtype=bool)
    for i, d in enumerate(descendant_masks(dag.parents)):
        for j in bits(d):
            out[i, j] = True
    return out


def _descendants(parents: list[int], node: int) -> int:
    n = len(parents)
    children = [0] * n
    for v, p in enumerate(parents):
        for u in bits(p):
            children[u] |= 1 << v
    seen = 0
    stack = [node]
    while stack:
        v = stack.pop()
        for c in bits(children[v] & ~seen):
            seen |= 1 << c
            stack.append(c)
    return seen


def _families(table: ScoreTable, orphaned: list[int], first: int, second: int, first_parents: int):
    """Families for the two ordered draws: ``first`` must take ``second`` as a
    parent; ``second`` is drawn after ``first`` received ``first_parents``."""
    fam1 = table.family(first, _descendants(orphaned, first) & ~(1 << first), 1 << second)
    g1 = list(orphaned)
    g1[first] = first_parents
    fam2 = table.family(second, _descendants(g1, second) & ~(1 << second))
    return fam1, fam2


def _backward_z(table: ScoreTable, orphaned: list[int], i: int, j: int, old_pj: int):
    fam1b, fam2b = _families(table, orphaned, j, i, old_pj)
    return fam1b.log_total, fam2b.log_total


def propose_rev(state: Dag, table: ScoreTable, rng: np.random.Generator) -> RevProposal | None:
    """Draw a reversal proposal, or ``None`` when there is nothing to reverse."""
    edges = state.edges()
    if not edges:
        return None
    i, j = edges[int(rng.integers(len(edges)))]
    orphaned = list(state.parents)
    orphaned[i] = orphaned[j] = 0
    fam1 = table.family(i, _descendants(orphaned, i) & ~(1 << i), 1 << j)
    if not len(fam1):
        return None
    new_pi = fam1.draw(rng)
    g1 = list(orphaned)
    g1[i] = new_pi
    fam2 = table.family(j, _descendants(g1, j) & ~(1 << j))
    new_pj = fam2.draw(rng)
    g1[j] = new_pj
    proposed = Dag(tuple(g1), check=False)
    zb1, zb2 = _backward_z(table, orphaned, i, j, state.parents[j])
    return RevProposal(proposed, fam1.log_total, fam2.log_total, zb1, zb2,
                       len(edges), proposed.edge_count)


def rev_step(state: Dag, table: ScoreTable, rng: np.random.Generator) -> Dag:
    """One reversal MH step; returns ``state`` itself when nothing changes."""
    prop = propose_rev(state, table, rng)
    if prop is None:
        return state
    la = prop.log_ratio
    if la >= 0 or rng.random() < math.exp(la):
        return prop.proposed
    return state


def rev_partition_step(part: LabelledPartition, table: ScoreTable,
                       rng: np.random.Generator) -> LabelledPartition:
    """Sample a DAG from ``part``, apply :func:`rev_step`, map back to its partition."""
    dag = sample_dag_from_partition(part, table, rng)
    new = rev_step(dag, table, rng)
    if new is dag:
        return part
    return outpoint_decomposition(new)


# ---------------------------------------------------------------------------
# exact kernels (small n)


def rev_transitions(state: Dag, table: ScoreTable) -> dict[Dag, float]:
    """Exact transition probabilities of :func:`rev_step` from ``state``."""
    edges = state.edges()
    if not edges:
        return {state: 1.0}
    row: dict[Dag, float] = {}
    for i, j in edges:
        orphaned = list(state.parents)
        orphaned[i] = orphaned[j] = 0
        fam1 = table.family(i, _descendants(orphaned, i) & ~(1 << i), 1 << j)
        zb1, zb2 = _backward_z(table, orphaned, i, j, state.parents[j])
        for pi, si in zip(fam1.masks.tolist(), fam1.log_scores.tolist()):
            g1 = list(orphaned)
            g1[i] = pi
            fam2 = table.family(j, _descendants(g1, j) & ~(1 << j))
            for pj, sj in zip(fam2.masks.tolist(), fam2.log_scores.tolist()):
                g = list(g1)
                g[j] = pj
                new = Dag(tuple(g), check=False)
                q = math.exp(si - fam1.log_total + sj - fam2.log_total) / len(edges)
                la = (math.log(len(edges)) - math.log(new.edge_count)
                      + fam1.log_total + fam2.log_total - zb1 - zb2)
                a = 1.0 if la >= 0 else math.exp(la)
                row[new] = row.get(new, 0.0) + q * a
    row[state] = row.get(state, 0.0) + 1.0 - sum(row.values())
    return row


def rev_partition_transitions(part: LabelledPartition, table: ScoreTable,
                              dags: list[Dag] | None = None) -> dict[LabelledPartition, float]:
    """Exact kernel row of :func:`rev_partition_step`, summing over DAG paths.

    ``dags`` should list every DAG the table can score (enumerated by the caller).
    """
    if dags is None:
        from .oracle import enumerate_dags
        dags = enumerate_dags(table.n, table.max_parents)
    log_z = partition_log_score(part, table)
    row: dict[LabelledPartition, float] = {}
    for g in dags:
        if outpoint_decomposition(g) != part:
            continue
        w = math.exp(dag_log_score(g, table) - log_z)
        for g2, p in rev_transitions(g, table).items():
            key = outpoint_decomposition(g2)
            row[key] = row.get(key, 0.0) + w * p
    return row
