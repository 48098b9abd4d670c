"""Annealed stochastic search for the highest-scoring DAG via node orders.

An order is worth the score of its best compatible DAG, i.e. the sum over
nodes of the best permissible parent-set score.  Restarting the search ``Z``
times gives a rough confidence that the best DAG found is the global one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Dag
from .oracle import count_linear_extensions
from .order import _banned_masks, propose_order_move
from .scoring import ScoreTable


@dataclass(frozen=True)
class GammaSchedule:
    """Geometric annealing: ``gamma0 * ratio ** (step // block)``."""

    gamma0: float = 1.0
    ratio: float = 1.2
    block: int = 1000

    def __call__(self, step: int) -> float:
        return self.gamma0 * self.ratio ** (step // self.block)


@dataclass
class MapResult:
    best_dag: Dag
    best_score: float
    restart_scores: list[float]
    restart_dags: list[Dag]
    hits: int
    p_star: float
    bound: float
    linear_extensions: int | None = None
    w_bound: float | None = None
    extra: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {
            "best_log_score": self.best_score,
            "restarts": len(self.restart_scores),
            "hits": self.hits,
            "p_star": self.p_star,
            "bound": self.bound,
            "linear_extensions": self.linear_extensions,
            "w_bound": self.w_bound,
        }


class _BestParents:
    def __init__(self, table: ScoreTable):
        self.table = table
        self.memo: dict[tuple[int, int], tuple[float, int]] = {}

    def __call__(self, v: int, banned: int) -> tuple[float, int]:
        key = (v, banned)
        got = self.memo.get(key)
        if got is None:
            fam = self.table.family(v, banned)
            k = int(np.argmax(fam.log_scores))
            got = (float(fam.log_scores[k]), int(fam.masks[k]))
            self.memo[key] = got
        return got


def order_max_score(order, table: ScoreTable, best=None) -> tuple[float, Dag]:
    """Log score of the best DAG compatible with ``order``, and that DAG."""
    best = best or _BestParents(table)
    banned = _banned_masks(order)
    picks = [best(v, banned[v]) for v in range(len(order))]
    return sum(s for s, _ in picks), Dag(tuple(m for _, m in picks), check=False)


def anneal(table: ScoreTable, steps: int, schedule: GammaSchedule,
           rng: np.random.Generator, best=None) -> tuple[float, Dag]:
    """One annealed MH run over orders; returns the best (score, DAG) seen."""
    n = table.n
    best = best or _BestParents(table)
    order = tuple(int(v) for v in rng.permutation(n))
    score, dag = order_max_score(order, table, best)
    top_score, top_dag = score, dag
    for t in range(1, steps):
        if n < 2:
            break
        new, _, _ = propose_order_move(order, n, rng)
        new_score, new_dag = order_max_score(new, table, best)
        la = schedule(t) * (new_score - score)
        if la >= 0 or rng.random() < math.exp(la):
            order, score, dag = new, new_score, new_dag
            if score > top_score:
                top_score, top_dag = score, dag
    return top_score, top_dag


def map_search(table: ScoreTable, restarts: int = 100, steps: int = 2000,
               schedule: GammaSchedule | None = None, seed: int = 0,
               tol: float = 1e-9) -> MapResult:
    """Run ``restarts`` independent annealed searches seeded ``seed + r``.

    ``hits`` counts the restarts that reached the overall best score (within
    ``tol``; equivalent DAGs tie exactly under a score-equivalent score).
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    schedule = schedule or GammaSchedule()
    best = _BestParents(table)
    scores, dags = [], []
    for r in range(restarts):
        s, d = anneal(table, steps, schedule, np.random.default_rng(seed + r), best)
        scores.append(s)
        dags.append(d)
    k = int(np.argmax(scores))
    top = scores[k]
    hits = sum(1 for s in scores if s >= top - tol)
    p_star = hits / restarts
    result = MapResult(dags[k], top, scores, dags, hits, p_star, (1 - p_star) ** restarts)
    if table.n <= 8:
        w = count_linear_extensions(dags[k])
        result.linear_extensions = w
        result.w_bound = (1 - hits / (w * restarts)) ** restarts
    return result
