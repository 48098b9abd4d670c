"""BGe node scores for Gaussian data and precomputed parent-set score tables.

All quantities are natural-log scores.  The graph prior is uniform, so a DAG's
log posterior is the sum of its node scores up to a constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp, multigammaln

from .graph import Dag, bits, popcount, to_mask


class ScoreError(ValueError):
    """Raised for data or parent sets that cannot be scored."""


@dataclass
class DataSet:
    values: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("data values must be a 2-d array (observations x variables)")
        if self.values.shape[0] < 1:
            raise ValueError("data needs at least one observation")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data contains non-finite entries")
        if not self.names:
            self.names = [f"X{i + 1}" for i in range(self.n)]
        if len(self.names) != self.n:
            raise ValueError(f"{len(self.names)} names for {self.n} variables")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BgeParams:
    alpha_mu: float
    alpha_w: float
    nu: np.ndarray
    t_scale: float

    @classmethod
    def default(cls, data: DataSet, alpha_mu: float = 1.0,
                alpha_w: float | None = None) -> "BgeParams":
        n = data.n
        aw = n + 2.0 if alpha_w is None else float(alpha_w)
        t = alpha_mu * (aw - n - 1) / (alpha_mu + 1)
        return cls(alpha_mu, aw, data.values.mean(axis=0), t)

    def validate(self, n: int):
        if self.alpha_mu <= 0:
            raise ScoreError("alpha_mu must be positive")
        if self.alpha_w <= n - 1:
            raise ScoreError(f"alpha_w must exceed n-1 = {n - 1}")
        if self.t_scale <= 0:
            raise ScoreError("t_scale must be positive")
        if len(self.nu) != n:
            raise ScoreError("prior mean nu has the wrong length")


class BgeScorer:
    """Log marginal likelihoods of variable subsets under the BGe model.

    ``log_marginal(Y)`` is memoised, so a node score is the difference of two
    cached subset terms.
    """

    def __init__(self, data: DataSet, params: BgeParams | None = None):
        self.data = data
        self.params = params or BgeParams.default(data)
        n, N = data.n, data.N
        self.params.validate(n)
        p = self.params
        # canonical row order makes the score bit-identical under row permutations
        x = data.values[np.lexsort(data.values.T[::-1])]
        xbar = x.mean(axis=0)
        centred = x - xbar
        diff = (p.nu - xbar)[:, None]
        self.t0 = p.t_scale * np.eye(n)
        self.tn = (self.t0 + centred.T @ centred
                   + (p.alpha_mu * N / (p.alpha_mu + N)) * (diff @ diff.T))
        self._cache: dict[int, float] = {0: 0.0}

    def log_marginal(self, subset: int) -> float:
        got = self._cache.get(subset)
        if got is not None:
            return got
        p = self.params
        n, N = self.data.n, self.data.N
        idx = list(bits(subset))
        d = len(idx)
        awd = p.alpha_w - n + d
        t0 = self.t0[np.ix_(idx, idx)]
        tn = self.tn[np.ix_(idx, idx)]
        try:
            ld_t0 = 2.0 * np.log(np.diag(np.linalg.cholesky(t0))).sum()
            ld_tn = 2.0 * np.log(np.diag(np.linalg.cholesky(tn))).sum()
        except np.linalg.LinAlgError:
            raise ScoreError(f"posterior matrix not positive definite for variables {idx}")
        val = (-0.5 * N * d * math.log(math.pi)
               + 0.5 * d * math.log(p.alpha_mu / (p.alpha_mu + N))
               + multigammaln(0.5 * (awd + N), d) - multigammaln(0.5 * awd, d)
               + 0.5 * awd * ld_t0 - 0.5 * (awd + N) * ld_tn)
        if not math.isfinite(val):
            raise ScoreError(f"non-finite marginal likelihood for variables {idx}")
        self._cache[subset] = val
        return val

    def node_score(self, i: int, parents: int) -> float:
        if parents >> i & 1:
            raise ScoreError(f"node {i} cannot be its own parent")
        return self.log_marginal(parents | 1 << i) - self.log_marginal(parents)


def node_log_score(i: int, parents, data: DataSet, params: BgeParams | None = None) -> float:
    """BGe log score of node ``i`` with the given parent set (iterable or bitmask)."""
    mask = parents if isinstance(parents, int) else to_mask(parents)
    return BgeScorer(data, params).node_score(i, mask)


def check_nondegenerate(data: DataSet, max_parents: int):
    sd = data.values.std(axis=0)
    const = [data.names[i] for i in np.flatnonzero(sd == 0)]
    if const:
        raise ScoreError(f"constant column(s): {', '.join(const)}")
    if data.N <= max_parents + 1:
        raise ScoreError(f"{data.N} observations is too few for parent sets of size {max_parents}")


# ---------------------------------------------------------------------------
# score tables


@dataclass(frozen=True)
class Family:
    """Admissible parent sets of one node under a constraint, with their weights."""

    masks: np.ndarray
    log_scores: np.ndarray
    log_total: float
    cdf: np.ndarray

    def __len__(self):
        return len(self.masks)

    def draw(self, rng: np.random.Generator) -> int:
        k = int(np.searchsorted(self.cdf, rng.random(), side="right"))
        return int(self.masks[min(k, len(self.masks) - 1)])


class ScoreTable:
    """Per-node log scores of every parent set with at most ``max_parents`` members.

    Entries for each node are stored in ascending mask order.  Constrained
    queries are cached per ``(node, banned, required_any)``; the cache is the
    only mutable state and holds values derived from the immutable table.
    """

    cache_limit = 20000

    def __init__(self, n: int, max_parents: int, masks: Sequence[np.ndarray],
                 scores: Sequence[np.ndarray]):
        if not 0 <= max_parents <= max(n - 1, 0):
            raise ValueError(f"max_parents must lie in [0, {n - 1}]")
        self.n = n
        self.max_parents = max_parents
        self.masks = [np.asarray(m, dtype=np.int64) for m in masks]
        self.scores = [np.asarray(s, dtype=float) for s in scores]
        self._lookup = [dict(zip(m.tolist(), s.tolist())) for m, s in zip(self.masks, self.scores)]
        self._families: dict[tuple[int, int, int], Family] = {}

    @staticmethod
    def parent_masks(n: int, i: int, max_parents: int) -> list[int]:
        others = [v for v in range(n) if v != i]
        out = [to_mask(c) for k in range(max_parents + 1) for c in combinations(others, k)]
        return sorted(out)

    @classmethod
    def from_function(cls, n: int, max_parents: int,
                      fn: Callable[[int, int], float]) -> "ScoreTable":
        """Table whose entry for node ``i`` and parent mask ``p`` is ``fn(i, p)``."""
        masks, scores = [], []
        for i in range(n):
            pm = cls.parent_masks(n, i, max_parents)
            masks.append(np.array(pm, dtype=np.int64))
            scores.append(np.array([fn(i, p) for p in pm], dtype=float))
        return cls(n, max_parents, masks, scores)

    @classmethod
    def constant(cls, n: int, max_parents: int | None = None, value: float = 0.0) -> "ScoreTable":
        return cls.from_function(n, n - 1 if max_parents is None else max_parents,
                                 lambda i, p: value)

    def __len__(self):
        return sum(len(m) for m in self.masks)

    def score(self, i: int, mask: int) -> float:
        try:
            return self._lookup[i][mask]
        except KeyError:
            raise ScoreError(f"parent set {sorted(bits(mask))} of node {i} is not in the table "
                             f"(max_parents={self.max_parents})") from None

    def family(self, i: int, banned: int = 0, required_any: int = 0) -> Family:
        key = (i, banned, required_any)
        fam = self._families.get(key)
        if fam is not None:
            return fam
        m = self.masks[i]
        sel = (m & banned) == 0
        if required_any:
            sel &= (m & required_any) != 0
        masks = m[sel]
        ls = self.scores[i][sel]
        if len(ls):
            total = float(logsumexp(ls))
            cdf = np.cumsum(np.exp(ls - total))
        else:
            total = -math.inf
            cdf = np.empty(0)
        fam = Family(masks, ls, total, cdf)
        if len(self._families) >= self.cache_limit:
            self._families.clear()
        self._families[key] = fam
        return fam

    def to_csv(self) -> str:
        rows = ["node,parent_mask,log_score"]
        for i in range(self.n):
            for m, s in zip(self.masks[i].tolist(), self.scores[i].tolist()):
                rows.append(f"{i},{m},{s:.17g}")
        return "\n".join(rows) + "\n"


def build_score_table(data: DataSet, max_parents: int,
                      params: BgeParams | None = None) -> ScoreTable:
    n = data.n
    if not 0 <= max_parents <= n - 1:
        raise ValueError(f"max_parents must lie in [0, {n - 1}], got {max_parents}")
    check_nondegenerate(data, max_parents)
    scorer = BgeScorer(data, params)

    def fn(i, p):
        try:
            return scorer.node_score(i, p)
        except ScoreError as exc:
            raise ScoreError(f"node {i}, parents {sorted(bits(p))}: {exc}") from exc

    return ScoreTable.from_function(n, max_parents, fn)


def dag_log_score(dag: Dag, table: ScoreTable) -> float:
    return sum(table.score(i, p) for i, p in enumerate(dag.parents))


def constrained_log_score_sum(i: int, banned: int, required_any: int, table: ScoreTable) -> float:
    """Log of the summed scores of node ``i``'s parent sets avoiding ``banned`` and
    meeting ``required_any`` when it is nonempty.

    Returns ``-inf`` when no parent set qualifies.
    """
    if (banned | required_any) >> i & 1:
        raise ValueError(f"node {i} may not appear in its own constraint sets")
    if banned & required_any:
        raise ValueError("banned and required sets overlap")
    return table.family(i, banned, required_any).log_total


def max_parents_ok(dag: Dag, table: ScoreTable) -> bool:
    return all(popcount(p) <= table.max_parents for p in dag.parents)
