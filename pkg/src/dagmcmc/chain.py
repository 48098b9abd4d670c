"""Chain configuration, traces and trace files shared by all samplers."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import Dag, LabelledPartition, format_dag


@dataclass(frozen=True)
class ChainConfig:
    steps: int
    seed: int = 0
    stay_still_prob: float = 0.01
    include_reversals: bool = True
    p_rev: float = 0.0
    thin: int = 1
    burn_in_fraction: float = 0.0
    partition_class_prob: float = 0.6

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not 0 <= self.p_rev < 1:
            raise ValueError("p_rev must lie in [0, 1)")
        if not 0 <= self.stay_still_prob + self.p_rev <= 1:
            raise ValueError("stay_still_prob + p_rev must lie in [0, 1]")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValueError("burn_in_fraction must lie in [0, 1)")


def mixture_weight(n: int) -> float:
    """Probability of the larger of two paired moves, 6n/(n^2+10n-24).

    The formula's denominator vanishes at n=2, so small graphs use 1.
    """
    if n <= 3:
        return 1.0
    return min(1.0, max(0.0, 6.0 * n / (n * n + 10 * n - 24)))


@dataclass
class ChainTrace:
    """Raw per-step state scores plus thinned records of sampled DAGs.

    Step ``t`` is the state after ``t`` transitions; step 0 is the initial state.
    """

    sampler: str
    state_scores: np.ndarray
    record_steps: list[int] = field(default_factory=list)
    record_state_scores: list[float] = field(default_factory=list)
    record_dag_scores: list[float] = field(default_factory=list)
    dags: list[Dag] = field(default_factory=list)
    partitions: list[LabelledPartition] = field(default_factory=list)
    proposed: Counter = field(default_factory=Counter)
    accepted: Counter = field(default_factory=Counter)
    rescored_nodes: int = 0
    best_dag: Dag | None = None
    best_score: float = -np.inf
    wall_clock: float = 0.0

    def record(self, step: int, state_score: float, dag: Dag, dag_score: float,
               partition: LabelledPartition | None = None):
        self.record_steps.append(step)
        self.record_state_scores.append(state_score)
        self.record_dag_scores.append(dag_score)
        self.dags.append(dag)
        if partition is not None:
            self.partitions.append(partition)
        self.offer_best(dag, dag_score)

    def offer_best(self, dag: Dag, score: float):
        if score > self.best_score:
            self.best_score = score
            self.best_dag = dag

    @property
    def steps(self) -> int:
        return len(self.state_scores)

    def post_burn_in(self, burn_in_fraction: float) -> list[Dag]:
        cut = burn_in_fraction * self.steps
        return [d for s, d in zip(self.record_steps, self.dags) if s >= cut]

    def acceptance_rates(self) -> dict[str, float]:
        return {k: self.accepted[k] / v for k, v in sorted(self.proposed.items()) if v}


class NoSamplesError(ValueError):
    pass


def edge_posterior(dags: list[Dag]) -> np.ndarray:
    """Entry (i, j): fraction of ``dags`` containing the edge i -> j."""
    if not dags:
        raise NoSamplesError("no samples left after burn-in")
    n = dags[0].n
    counts = np.zeros((n, n))
    for d in dags:
        for v, p in enumerate(d.parents):
            if p:
                for u in range(n):
                    if p >> u & 1:
                        counts[u, v] += 1
    return counts / len(dags)


def summarize_posterior(traces: list[ChainTrace], burn_in_fraction: float) -> np.ndarray:
    """Edge posterior from the thinned post-burn-in DAGs of all traces, pooled."""
    pooled = [d for t in traces for d in t.post_burn_in(burn_in_fraction)]
    return edge_posterior(pooled)


# ---------------------------------------------------------------------------
# files


def write_trace_csv(trace: ChainTrace, path: Path):
    lines = ["step,state_log_score,dag_log_score"]
    for s, a, b in zip(trace.record_steps, trace.record_state_scores, trace.record_dag_scores):
        lines.append(f"{s},{a:.17g},{b:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_dag_blocks(dags: list[Dag], path: Path):
    Path(path).write_text("".join(format_dag(d) for d in dags))


def write_partitions(parts: list[LabelledPartition], path: Path):
    Path(path).write_text("".join(p.to_text() + "\n" for p in parts))


def read_trace_csv(path: Path) -> np.ndarray:
    """Rows of (step, state_log_score, dag_log_score)."""
    text = Path(path).read_text().splitlines()
    if not text or text[0] != "step,state_log_score,dag_log_score":
        raise ValueError(f"{path}: unexpected trace header")
    return np.array([[float(x) for x in ln.split(",")] for ln in text[1:] if ln], ndmin=2)


def write_matrix_csv(mat: np.ndarray, names: list[str], path: Path):
    """Square matrix with a header of names; fixed-point entries with 6 decimals."""
    lines = ["," + ",".join(names)]
    for name, row in zip(names, mat):
        lines.append(name + "," + ",".join(f"{x:.6f}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
