"""Order MCMC: MH over node permutations scored by summing all compatible DAGs.

Position 0 is leftmost and takes parents only from later positions.  The DAG
law this sampler produces weights every DAG by its number of compatible
orders; that bias is intended here.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .chain import ChainConfig, ChainTrace, mixture_weight
from .graph import Dag
from .scoring import ScoreTable, dag_log_score


def _banned_masks(order) -> list[int]:
    """Banned parent mask of each node, indexed by node label."""
    out = [0] * len(order)
    before = 0
    for v in order:
        out[v] = before
        before |= 1 << v
    return out


def node_order_scores(order, table: ScoreTable) -> list[float]:
    banned = _banned_masks(order)
    return [table.family(v, banned[v]).log_total for v in range(len(order))]


def order_log_score(order, table: ScoreTable) -> float:
    """Log of the summed scores of every DAG compatible with ``order``."""
    return sum(node_order_scores(order, table))


def check_order(order, n: int) -> tuple[int, ...]:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {order}")
    return order


def propose_order_move(order, n: int, rng: np.random.Generator
                       ) -> tuple[tuple[int, ...], set[int], str]:
    """Swap two positions: any two with the mixture weight, else an adjacent pair.

    Returns the new order, the nodes whose banned sets changed and the move kind.
    """
    order = list(order)
    if rng.random() < mixture_weight(n):
        a, b = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        kind = "global_swap"
    else:
        a = int(rng.integers(n - 1))
        b = a + 1
        kind = "adjacent_swap"
    order[a], order[b] = order[b], order[a]
    return tuple(order), set(order[a:b + 1]), kind


def sample_dag_from_order(order, table: ScoreTable, rng: np.random.Generator) -> Dag:
    banned = _banned_masks(order)
    return Dag(tuple(table.family(v, banned[v]).draw(rng) for v in range(len(order))), check=False)


def run_order_chain(init, table: ScoreTable, config: ChainConfig,
                    rng: np.random.Generator | None = None) -> ChainTrace:
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = table.n
    order = check_order(init, n)
    node_sc = node_order_scores(order, table)
    total = sum(node_sc)
    scores = np.empty(config.steps)
    trace = ChainTrace("order", scores)
    start = time.perf_counter()
    for t in range(config.steps):
        if t > 0 and n > 1:
            if rng.random() < config.stay_still_prob:
                trace.proposed["stay"] += 1
            else:
                new, changed, kind = propose_order_move(order, n, rng)
                trace.proposed[kind] += 1
                banned = _banned_masks(new)
                new_sc = list(node_sc)
                for v in changed:
                    new_sc[v] = table.family(v, banned[v]).log_total
                trace.rescored_nodes += len(changed)
                new_total = sum(new_sc)
                la = new_total - total
                if la >= 0 or rng.random() < math.exp(la):
                    trace.accepted[kind] += 1
                    order, node_sc, total = new, new_sc, new_total
        scores[t] = total
        if t % config.thin == 0:
            dag = sample_dag_from_order(order, table, rng)
            trace.record(t, total, dag, dag_log_score(dag, table))
    trace.wall_clock = time.perf_counter() - start
    return trace


def order_transitions(order, table: ScoreTable, stay_still_prob: float = 0.01
                      ) -> dict[tuple[int, ...], float]:
    """Exact kernel row of one :func:`run_order_chain` step."""
    n = table.n
    order = tuple(order)
    s0 = order_log_score(order, table)
    w = mixture_weight(n)
    row = {order: stay_still_prob}
    proposals = []
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    proposals += [(w / len(pairs), a, b) for a, b in pairs]
    proposals += [((1 - w) / (n - 1), a, a + 1) for a in range(n - 1)]
    for q, a, b in proposals:
        if q == 0:
            continue
        new = list(order)
        new[a], new[b] = new[b], new[a]
        new = tuple(new)
        la = order_log_score(new, table) - s0
        p = (1 - stay_still_prob) * q * (1.0 if la >= 0 else math.exp(la))
        row[new] = row.get(new, 0.0) + p
        row[order] += (1 - stay_still_prob) * q - p
    return row
