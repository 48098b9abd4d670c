"""Random DAGs and linear-Gaussian data simulated from them, plus data CSV I/O."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Dag, bits, to_mask
from .scoring import DataSet


@dataclass(frozen=True)
class SimulationSpec:
    N: int
    dag: Dag | None = None
    n: int | None = None
    max_parents: int | None = None
    coefficient: float = 2.0
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not math.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        if self.dag is None and self.n is None:
            raise ValueError("give either a DAG or a node count for the generator")


def generate_random_dag(n: int, max_parents: int, rng: np.random.Generator) -> Dag:
    """Uniform strictly lower-triangular 0/1 matrix, thinned to at most
    ``max_parents`` parents per node, under a uniform node relabelling."""
    if n < 1:
        raise ValueError("n must be at least 1")
    tri = np.tril(rng.integers(0, 2, size=(n, n)), k=-1)
    for i in range(n):
        on = np.flatnonzero(tri[i])
        if len(on) > max_parents:
            drop = rng.choice(on, size=len(on) - max_parents, replace=False)
            tri[i, drop] = 0
    perm = rng.permutation(n)
    parents = [0] * n
    for i in range(n):
        parents[perm[i]] = to_mask(perm[j] for j in np.flatnonzero(tri[i]))
    return Dag(tuple(parents))


def simulate_data(spec: SimulationSpec, rng: np.random.Generator) -> DataSet:
    """Each node is ``coefficient`` times the sum of its parents plus N(0, noise_sd^2)."""
    dag = spec.dag
    if dag is None:
        dag = generate_random_dag(spec.n, spec.max_parents if spec.max_parents is not None
                                  else spec.n - 1, rng)
    x = np.zeros((spec.N, dag.n))
    noise = rng.normal(0.0, spec.noise_sd, size=(spec.N, dag.n))
    for v in dag.topological_order():
        x[:, v] = noise[:, v]
        for u in bits(dag.parents[v]):
            x[:, v] += spec.coefficient * x[:, u]
    return DataSet(x)


class DataFormatError(ValueError):
    pass


def load_csv(path) -> DataSet:
    """Read a header row of variable names followed by one observation per row."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    names = [h.strip() for h in rows[0]]
    if not names or any(not h for h in names):
        raise DataFormatError(f"{path}:1: header must name every column")
    vals = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(names):
            raise DataFormatError(f"{path}:{lineno}: expected {len(names)} fields, got {len(row)}")
        try:
            vals.append([float(c) for c in row])
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise DataFormatError(f"{path}:{lineno}: non-numeric value {bad!r}") from None
    if not vals:
        raise DataFormatError(f"{path}: no observations")
    arr = np.array(vals)
    if not np.all(np.isfinite(arr)):
        raise DataFormatError(f"{path}: non-finite values")
    return DataSet(arr, names)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_csv(data: DataSet, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(data.names) + "\n")
        for row in data.values:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
