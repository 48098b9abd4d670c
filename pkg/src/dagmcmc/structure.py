"""Single-edge Metropolis-Hastings over DAGs (additions, deletions, reversals)."""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .chain import ChainConfig, ChainTrace
from .graph import (Dag, ancestor_masks, apply_addition, apply_deletion, apply_reversal,
                    structure_neighborhood, update_ancestors)
from .scoring import ScoreTable, dag_log_score, max_parents_ok

RevStep = Callable[[Dag, ScoreTable, np.random.Generator], Dag]


def _apply(dag: Dag, kind: str, edge) -> Dag:
    if kind == "delete":
        return apply_deletion(dag, edge)
    if kind == "add":
        return apply_addition(dag, edge)
    return apply_reversal(dag, edge)


def _neighbors(dag: Dag, table: ScoreTable, include_reversals: bool, anc=None):
    nb = structure_neighborhood(dag, table.max_parents, include_reversals, anc)
    moves = ([("delete", e) for e in nb.deletions] + [("add", e) for e in nb.additions]
             + [("reverse", e) for e in nb.reversals])
    return nb.size, moves


def _new_anc(anc, dag_new: Dag, kind: str, edge):
    u, v = edge
    if kind == "reverse":
        mid = list(dag_new.parents)
        mid[u] &= ~(1 << v)
        a = update_ancestors(anc, mid, v)
        return update_ancestors(a, dag_new.parents, u)
    return update_ancestors(anc, dag_new.parents, v)


def _delta(table: ScoreTable, old: Dag, new: Dag, kind: str, edge) -> float:
    u, v = edge
    nodes = (u, v) if kind == "reverse" else (v,)
    return sum(table.score(x, new.parents[x]) - table.score(x, old.parents[x]) for x in nodes)


def structure_step(state: Dag, table: ScoreTable, config: ChainConfig,
                   rng: np.random.Generator) -> Dag:
    """One proposal drawn uniformly from the neighbourhood (self-move included)."""
    size, moves = _neighbors(state, table, config.include_reversals)
    k = int(rng.integers(size))
    if k == len(moves):
        return state
    kind, edge = moves[k]
    new = _apply(state, kind, edge)
    new_size, _ = _neighbors(new, table, config.include_reversals)
    la = math.log(size) - math.log(new_size) + _delta(table, state, new, kind, edge)
    if la >= 0 or rng.random() < math.exp(la):
        return new
    return state


def run_structure_chain(init: Dag, table: ScoreTable, config: ChainConfig,
                        rng: np.random.Generator | None = None,
                        rev: RevStep | None = None) -> ChainTrace:
    """Structure MCMC, optionally mixed with ``rev`` at rate ``config.p_rev``."""
    if not max_parents_ok(init, table):
        raise ValueError("initial DAG exceeds the parent limit")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    p_rev = config.p_rev if rev is not None else 0.0
    dag = init
    score = dag_log_score(dag, table)
    anc = ancestor_masks(dag.parents)
    size, moves = _neighbors(dag, table, config.include_reversals, anc)
    scores = np.empty(config.steps)
    trace = ChainTrace("structure-rev" if rev is not None else "structure", scores)
    start = time.perf_counter()
    for t in range(config.steps):
        if t > 0:
            u = rng.random()
            if u < config.stay_still_prob:
                trace.proposed["stay"] += 1
            elif u < config.stay_still_prob + p_rev:
                trace.proposed["rev"] += 1
                new = rev(dag, table, rng)
                if new is not dag:
                    trace.accepted["rev"] += 1
                    dag, score = new, dag_log_score(new, table)
                    anc = ancestor_masks(dag.parents)
                    size, moves = _neighbors(dag, table, config.include_reversals, anc)
                    trace.rescored_nodes += 2
            else:
                k = int(rng.integers(size))
                if k == len(moves):
                    trace.proposed["self"] += 1
                    trace.accepted["self"] += 1
                else:
                    kind, edge = moves[k]
                    trace.proposed[kind] += 1
                    new = _apply(dag, kind, edge)
                    new_anc = _new_anc(anc, new, kind, edge)
                    new_size, new_moves = _neighbors(new, table, config.include_reversals, new_anc)
                    delta = _delta(table, dag, new, kind, edge)
                    trace.rescored_nodes += 2 if kind == "reverse" else 1
                    la = math.log(size) - math.log(new_size) + delta
                    if la >= 0 or rng.random() < math.exp(la):
                        trace.accepted[kind] += 1
                        dag, score, anc, size, moves = new, score + delta, new_anc, new_size, new_moves
        scores[t] = score
        trace.offer_best(dag, score)
        if t % config.thin == 0:
            trace.record(t, score, dag, score)
    trace.wall_clock = time.perf_counter() - start
    return trace


def structure_transitions(state: Dag, table: ScoreTable, include_reversals: bool = True
                          ) -> dict[Dag, float]:
    """Exact kernel row of :func:`structure_step`."""
    size, moves = _neighbors(state, table, include_reversals)
    s0 = dag_log_score(state, table)
    row: dict[Dag, float] = {}
    for kind, edge in moves:
        new = _apply(state, kind, edge)
        new_size, _ = _neighbors(new, table, include_reversals)
        la = math.log(size) - math.log(new_size) + dag_log_score(new, table) - s0
        row[new] = row.get(new, 0.0) + (1.0 if la >= 0 else math.exp(la)) / size
    row[state] = row.get(state, 0.0) + 1.0 - sum(row.values())
    return row
