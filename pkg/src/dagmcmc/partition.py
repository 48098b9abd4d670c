"""Metropolis-Hastings over labelled partitions of the nodes.

A labelled partition groups the DAGs whose outpoint layers coincide with its
elements; its score is the summed posterior mass of those DAGs, computed per
node as a constrained sum over parent sets.  Four proposal families act on
partitions: split/join of elements, relocation of a single node, and swaps of
two nodes (any two elements, or adjacent elements only).
"""
from __future__ import annotations

import math
import time
from collections import Counter
from typing import Callable

import numpy as np

from .chain import ChainConfig, ChainTrace, mixture_weight
from .graph import Dag, LabelledPartition, outpoint_decomposition
from .scoring import ScoreTable, dag_log_score

Elements = tuple[tuple[int, ...], ...]

MOVES = ("basic", "relocation", "global_swap", "adjacent_swap")


def _make(els) -> LabelledPartition:
    # moves preserve the partition invariants; skip revalidation in the hot path
    part = object.__new__(LabelledPartition)
    object.__setattr__(part, "elements", tuple(els))
    return part


def partition_log_score(part: LabelledPartition, table: ScoreTable) -> float:
    """Log of the summed scores of all DAGs whose outpoint decomposition is ``part``."""
    total = 0.0
    for v, (banned, req) in enumerate(part.constraint_masks()):
        total += table.family(v, banned, req).log_total
    return total


def node_scores(part: LabelledPartition, table: ScoreTable) -> list[float]:
    return [table.family(v, b, r).log_total for v, (b, r) in enumerate(part.constraint_masks())]


def sample_dag_from_partition(part: LabelledPartition, table: ScoreTable,
                              rng: np.random.Generator) -> Dag:
    """Draw one DAG of ``part`` with probability proportional to its score."""
    par = []
    for v, (banned, req) in enumerate(part.constraint_masks()):
        fam = table.family(v, banned, req)
        if not len(fam):
            raise ValueError(f"node {v} has no permissible parent set in {part.to_text()}")
        par.append(fam.draw(rng))
    return Dag(tuple(par), check=False)


# ---------------------------------------------------------------------------
# neighbourhood sizes


def basic_neighborhood_size(lam) -> int:
    return -len(lam) - 1 + sum(2 ** k for k in lam)


def relocation_neighborhood_size(lam) -> int:
    m, n = len(lam), sum(lam)
    return 2 * m * n - 2 * sum(1 for k in lam if k == 1) - 2 * sum(1 for k in lam if k == 2)


def global_swap_size(lam) -> int:
    n = sum(lam)
    return sum(k * (n - k) for k in lam) // 2


def adjacent_swap_size(lam) -> int:
    return sum(a * b for a, b in zip(lam, lam[1:]))


NEIGHBORHOOD_SIZE = {
    "basic": basic_neighborhood_size,
    "relocation": relocation_neighborhood_size,
    "global_swap": global_swap_size,
    "adjacent_swap": adjacent_swap_size,
}


# ---------------------------------------------------------------------------
# basic split / join move


def _join(els: Elements, j: int) -> Elements:
    merged = tuple(sorted(els[j] + els[j + 1]))
    return els[:j] + (merged,) + els[j + 2:]


def _split(els: Elements, i: int, left: tuple[int, ...]) -> Elements:
    right = tuple(v for v in els[i] if v not in left)
    return els[:i] + (tuple(sorted(left)), right) + els[i + 1:]


def propose_basic_move(part: LabelledPartition, rng: np.random.Generator
                       ) -> tuple[LabelledPartition, set[int]]:
    """Uniform draw from the split/join neighbourhood.

    Index ``j`` below ``m`` joins elements ``j`` and ``j+1`` (1-based); larger
    indices select an element and a split size, and that many uniformly chosen
    nodes move into a new element on the left.
    """
    els = part.elements
    m = len(els)
    size = basic_neighborhood_size(part.lam)
    if size == 0:
        return part, set()
    j = int(rng.integers(1, size + 1))
    if j < m:
        new = _join(els, j - 1)
    else:
        r = j - (m - 1)
        for i, e in enumerate(els):
            k = len(e)
            block = 2 ** k - 2
            if r <= block:
                c = 1
                while r > math.comb(k, c):
                    r -= math.comb(k, c)
                    c += 1
                picked = rng.choice(len(e), size=c, replace=False)
                new = _split(els, i, tuple(e[p] for p in picked))
                break
            r -= block
    new_part = _make(new)
    return new_part, rescore_set(part, new_part)


def basic_move_outcomes(part: LabelledPartition) -> list[LabelledPartition]:
    """Every member of the split/join neighbourhood, each exactly once."""
    from itertools import combinations
    els = part.elements
    out = [_make(_join(els, j)) for j in range(len(els) - 1)]
    for i, e in enumerate(els):
        for c in range(1, len(e)):
            for left in combinations(e, c):
                out.append(_make(_split(els, i, left)))
    return out


# ---------------------------------------------------------------------------
# node relocation


def relocation_destinations(part: LabelledPartition, node: int) -> list[tuple[str, int]]:
    """Admissible destinations for ``node``: ``("gap", g)`` creates a singleton
    element in gap ``g`` (gap ``g`` lies left of element ``g``), ``("element", t)``
    joins element ``t``."""
    els = part.elements
    m = len(els)
    t = part.position()[node]
    k = len(els[t])
    out = []
    for g in range(m + 1):
        if k == 1 and g in (t, t + 1):
            continue
        if k == 2 and g == t:
            continue
        out.append(("gap", g))
    out += [("element", s) for s in range(m) if s != t]
    return out


def apply_relocation(part: LabelledPartition, node: int, dest: tuple[str, int]) -> LabelledPartition:
    kind, where = dest
    els = part.elements
    m = len(els)
    out = []
    for idx, e in enumerate(els):
        if kind == "gap" and where == idx:
            out.append((node,))
        if node in e:
            rest = tuple(v for v in e if v != node)
            if rest:
                out.append(rest)
        elif kind == "element" and where == idx:
            out.append(tuple(sorted(e + (node,))))
        else:
            out.append(e)
    if kind == "gap" and where == m:
        out.append((node,))
    return _make(out)


def relocation_moves(part: LabelledPartition) -> list[tuple[int, tuple[str, int]]]:
    return [(v, d) for v in range(part.n) for d in relocation_destinations(part, v)]


def relocation_multiplicity(part: LabelledPartition, target: LabelledPartition) -> int:
    """Number of admissible relocation moves from ``part`` that produce ``target``.

    Usually 1; two adjacent singleton elements can be swapped or merged by
    moving either node.
    """
    count = 0
    for y in range(part.n):
        if _without(part.elements, y) != _without(target.elements, y):
            continue
        for d in relocation_destinations(part, y):
            if apply_relocation(part, y, d) == target:
                count += 1
    return count


def _without(els: Elements, y: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for e in els:
        r = tuple(v for v in e if v != y)
        if r:
            out.append(r)
    return tuple(out)


def propose_node_relocation(part: LabelledPartition, rng: np.random.Generator
                            ) -> tuple[LabelledPartition, set[int]]:
    """Uniform draw over admissible (node, destination) pairs."""
    els = part.elements
    m, n = len(els), part.n
    if relocation_neighborhood_size(part.lam) == 0:
        return part, set()
    pos = part.position()
    while True:
        v = int(rng.integers(n))
        d = int(rng.integers(2 * m))
        t, k = pos[v], len(els[pos[v]])
        if d <= m:
            if (k == 1 and d in (t, t + 1)) or (k == 2 and d == t):
                continue
            dest = ("gap", d)
        else:
            s = d - m - 1
            dest = ("element", s if s < t else s + 1)
        break
    new_part = apply_relocation(part, v, dest)
    return new_part, rescore_set(part, new_part)


# ---------------------------------------------------------------------------
# swaps


def apply_swap(part: LabelledPartition, a: int, b: int) -> LabelledPartition:
    out = []
    for e in part.elements:
        if a in e or b in e:
            e = tuple(sorted(b if v == a else a if v == b else v for v in e))
        out.append(e)
    return _make(out)


def swap_pairs(part: LabelledPartition, adjacent_only: bool) -> list[tuple[int, int]]:
    els = part.elements
    pairs = []
    for s in range(len(els)):
        for t in range(s + 1, len(els)):
            if adjacent_only and t != s + 1:
                continue
            pairs += [(a, b) for a in els[s] for b in els[t]]
    return pairs


def propose_swap_move(part: LabelledPartition, adjacent_only: bool,
                      rng: np.random.Generator) -> tuple[LabelledPartition, set[int]] | None:
    """Swap two nodes from different elements (adjacent ones if ``adjacent_only``).

    Returns ``None`` when the partition has a single element.
    """
    els = part.elements
    if len(els) < 2:
        return None
    if adjacent_only:
        w = np.array([len(a) * len(b) for a, b in zip(els, els[1:])], dtype=float)
        t = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
        t = min(t, len(w) - 1)
        a = els[t][int(rng.integers(len(els[t])))]
        b = els[t + 1][int(rng.integers(len(els[t + 1])))]
    else:
        pos = part.position()
        n = part.n
        while True:
            a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
            if pos[a] != pos[b]:
                break
    new_part = apply_swap(part, a, b)
    return new_part, rescore_set(part, new_part)


# ---------------------------------------------------------------------------
# rescoring


def rescore_set(old: LabelledPartition, new: LabelledPartition) -> set[int]:
    """Nodes whose banned or required parent masks differ between the two partitions."""
    return {v for v, (a, b) in enumerate(zip(old.constraint_masks(), new.constraint_masks())) if a != b}


def basic_rescore_rule(old: LabelledPartition, new: LabelledPartition) -> set[int]:
    """Nodes to rescore after a split or join: the new/merged element and its left neighbour."""
    if new.m > old.m:
        # split: the first index where the element lists differ holds the new left element
        i = next(t for t in range(old.m) if old.elements[t] != new.elements[t])
    else:
        i = next((t for t in range(new.m) if old.elements[t] != new.elements[t]))
    nodes = set(new.elements[i])
    if i > 0:
        nodes |= set(new.elements[i - 1])
    return nodes


class PartitionState:
    """Current partition plus cached per-node constraint masks and scores."""

    def __init__(self, part: LabelledPartition, table: ScoreTable):
        self.table = table
        self.part = part
        self.masks = part.constraint_masks()
        self.scores = [table.family(v, b, r).log_total for v, (b, r) in enumerate(self.masks)]
        self.total = sum(self.scores)

    def evaluate(self, new: LabelledPartition):
        """Score ``new`` reusing unchanged node terms.

        Returns (total, masks, scores, number of rescored nodes).
        """
        masks = new.constraint_masks()
        scores = list(self.scores)
        rescored = 0
        for v, mk in enumerate(masks):
            if mk != self.masks[v]:
                scores[v] = self.table.family(v, mk[0], mk[1]).log_total
                rescored += 1
        return sum(scores), masks, scores, rescored

    def set(self, new: LabelledPartition, total: float, masks, scores):
        self.part, self.total, self.masks, self.scores = new, total, masks, scores


def log_acceptance(move: str, old: LabelledPartition, new: LabelledPartition,
                   old_score: float, new_score: float) -> float:
    """Log MH ratio for a proposal of family ``move``.

    Neighbourhood sizes at both ends enter the ratio; for relocations the
    number of moves linking the two partitions in each direction enters too.
    """
    if new_score == -math.inf:
        return -math.inf
    size = NEIGHBORHOOD_SIZE[move]
    ratio = math.log(size(old.lam)) - math.log(size(new.lam)) + new_score - old_score
    if move == "relocation":
        ratio += math.log(relocation_multiplicity(new, old)) - math.log(relocation_multiplicity(old, new))
    return ratio


def propose(move: str, part: LabelledPartition, rng: np.random.Generator):
    if move == "basic":
        return propose_basic_move(part, rng)
    if move == "relocation":
        return propose_node_relocation(part, rng)
    if move == "global_swap":
        return propose_swap_move(part, False, rng)
    if move == "adjacent_swap":
        return propose_swap_move(part, True, rng)
    raise ValueError(f"unknown partition move {move!r}")


def choose_move(rng: np.random.Generator, n: int, partition_class_prob: float = 0.6) -> str:
    w = mixture_weight(n)
    if rng.random() < partition_class_prob:
        return "relocation" if rng.random() < w else "basic"
    return "global_swap" if rng.random() < w else "adjacent_swap"


RevHook = Callable[[LabelledPartition, ScoreTable, np.random.Generator], LabelledPartition]


def run_partition_chain(init: LabelledPartition, table: ScoreTable, config: ChainConfig,
                        rng: np.random.Generator | None = None, rev: RevHook | None = None,
                        moves: tuple[str, ...] | None = None) -> ChainTrace:
    """Partition MCMC with one DAG drawn from the current partition per recorded step.

    Per step: stay still with ``stay_still_prob``; with ``p_rev`` (when ``rev``
    is given) apply the edge-reversal hook; otherwise pick a move family.
    ``moves`` restricts the families (e.g. ``("basic",)``); by default the
    partition class (relocation or split/join) is chosen with probability 0.6
    and the larger move of each class with the mixture weight.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = table.n
    p_rev = config.p_rev if rev is not None else 0.0
    state = PartitionState(init, table)
    if not math.isfinite(state.total):
        raise ValueError("initial partition has no permissible DAG under the parent limit")
    scores = np.empty(config.steps)
    trace = ChainTrace("partition-rev" if rev is not None else "partition", scores)
    start = time.perf_counter()
    for t in range(config.steps):
        if t > 0:
            u = rng.random()
            if u < config.stay_still_prob:
                trace.proposed["stay"] += 1
            elif u < config.stay_still_prob + p_rev:
                trace.proposed["rev"] += 1
                new = rev(state.part, table, rng)
                if new != state.part:
                    trace.accepted["rev"] += 1
                    state = PartitionState(new, table)
                    trace.rescored_nodes += n
            else:
                move = (moves[int(rng.integers(len(moves)))] if moves
                        else choose_move(rng, n, config.partition_class_prob))
                trace.proposed[move] += 1
                res = propose(move, state.part, rng)
                if res is not None and res[0] is not state.part:
                    new, _ = res
                    total, masks, node_sc, rescored = state.evaluate(new)
                    trace.rescored_nodes += rescored
                    la = log_acceptance(move, state.part, new, state.total, total)
                    if la >= 0 or rng.random() < math.exp(la):
                        state.set(new, total, masks, node_sc)
                        trace.accepted[move] += 1
        scores[t] = state.total
        if t % config.thin == 0:
            dag = sample_dag_from_partition(state.part, table, rng)
            trace.record(t, state.total, dag, dag_log_score(dag, table), state.part)
    trace.wall_clock = time.perf_counter() - start
    return trace


# ---------------------------------------------------------------------------
# exact kernels (small n)


def move_transitions(part: LabelledPartition, table: ScoreTable, move: str,
                     score_cache: dict | None = None) -> dict[LabelledPartition, float]:
    """Exact one-step transition probabilities of a single move family."""
    if score_cache is None:
        score_cache = {}

    def score(p):
        if p not in score_cache:
            score_cache[p] = partition_log_score(p, table)
        return score_cache[p]

    if move == "basic":
        outcomes = basic_move_outcomes(part)
    elif move == "relocation":
        outcomes = [apply_relocation(part, v, d) for v, d in relocation_moves(part)]
    elif move in ("global_swap", "adjacent_swap"):
        outcomes = [apply_swap(part, a, b) for a, b in swap_pairs(part, move == "adjacent_swap")]
    else:
        raise ValueError(move)
    row: dict[LabelledPartition, float] = {}
    if not outcomes:
        return {part: 1.0}
    q = 1.0 / len(outcomes)
    s0 = score(part)
    for new in outcomes:
        la = log_acceptance(move, part, new, s0, score(new))
        a = 1.0 if la >= 0 else math.exp(la)
        row[new] = row.get(new, 0.0) + q * a
    row[part] = row.get(part, 0.0) + 1.0 - sum(row.values())
    return row


def chain_transitions(part: LabelledPartition, table: ScoreTable, config: ChainConfig,
                      rev_row: Callable | None = None,
                      moves: tuple[str, ...] | None = None,
                      score_cache: dict | None = None) -> dict[LabelledPartition, float]:
    """Exact one-step kernel row of :func:`run_partition_chain` with the same settings."""
    p_rev = config.p_rev if rev_row is not None else 0.0
    row: Counter = Counter({part: config.stay_still_prob})
    if p_rev:
        for k, v in rev_row(part, table).items():
            row[k] += p_rev * v
    rest = 1.0 - config.stay_still_prob - p_rev
    if moves:
        weights = {mv: 1.0 / len(moves) for mv in moves}
    else:
        w = mixture_weight(table.n)
        c = config.partition_class_prob
        weights = {"relocation": c * w, "basic": c * (1 - w),
                   "global_swap": (1 - c) * w, "adjacent_swap": (1 - c) * (1 - w)}
    for mv, wt in weights.items():
        if wt == 0:
            continue
        if mv in ("global_swap", "adjacent_swap") and part.m < 2:
            row[part] += rest * wt
            continue
        for k, v in move_transitions(part, table, mv, score_cache).items():
            row[k] += rest * wt * v
    return dict(row)


def initial_partition(n: int) -> LabelledPartition:
    """Decomposition of the empty DAG: one element holding every node."""
    return outpoint_decomposition(Dag.empty(n))
