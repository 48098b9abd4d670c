"""DAG representation, ancestry closure, outpoint decomposition and the
single-edge structure neighbourhood.

Nodes are integers ``0..n-1``.  A DAG stores one parent bitmask per node, so
``parents[i] >> j & 1`` means the edge ``j -> i``.  As a matrix, row ``i``
lists the parents of node ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class CycleError(ValueError):
    pass


def bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def to_mask(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << int(v)
    return m


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def _masks_acyclic(parents: Sequence[int]) -> bool:
    n = len(parents)
    remaining = (1 << n) - 1
    while remaining:
        sources = 0
        for v in bits(remaining):
            if not parents[v] & remaining:
                sources |= 1 << v
        if not sources:
            return False
        remaining &= ~sources
    return True


def is_acyclic(adjacency) -> bool:
    """True iff the square 0/1 matrix (row i = parents of i) has no directed cycle."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if np.any(np.diag(a) != 0):
        raise ValueError("adjacency has a nonzero diagonal (self-loop)")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("adjacency must be binary")
    return _masks_acyclic([to_mask(np.flatnonzero(row)) for row in a])


@dataclass(frozen=True)
class Dag:
    """Immutable DAG on ``n`` nodes stored as per-node parent bitmasks."""

    parents: tuple[int, ...]
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if not self.check:
            return
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        n = len(self.parents)
        for i, p in enumerate(self.parents):
            if p >> i & 1:
                raise CycleError(f"self-loop on node {i}")
            if p >> n:
                raise ValueError(f"parent mask of node {i} references nodes >= {n}")
        if not _masks_acyclic(self.parents):
            raise CycleError("graph contains a directed cycle")

    @classmethod
    def empty(cls, n: int) -> "Dag":
        return cls((0,) * n, check=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        """Build from ``(parent, child)`` pairs."""
        par = [0] * n
        for u, v in edges:
            par[v] |= 1 << u
        return cls(tuple(par))

    @classmethod
    def from_matrix(cls, adjacency) -> "Dag":
        a = np.asarray(adjacency)
        if not is_acyclic(a):
            raise CycleError("adjacency matrix contains a directed cycle")
        return cls(tuple(to_mask(np.flatnonzero(row)) for row in a), check=False)

    @property
    def n(self) -> int:
        return len(self.parents)

    @property
    def edge_count(self) -> int:
        return sum(popcount(p) for p in self.parents)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as ``(parent, child)`` pairs, ordered by child then parent."""
        return [(u, v) for v, p in enumerate(self.parents) for u in bits(p)]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.parents[v] >> u & 1)

    def in_degree(self) -> list[int]:
        return [popcount(p) for p in self.parents]

    def with_parents(self, node: int, mask: int) -> "Dag":
        par = list(self.parents)
        par[node] = mask
        return Dag(tuple(par), check=False)

    def to_matrix(self) -> np.ndarray:
        n = self.n
        a = np.zeros((n, n), dtype=np.int8)
        for v, p in enumerate(self.parents):
            for u in bits(p):
                a[v, u] = 1
        return a

    def children_masks(self) -> list[int]:
        ch = [0] * self.n
        for v, p in enumerate(self.parents):
            for u in bits(p):
                ch[u] |= 1 << v
        return ch

    def topological_order(self) -> list[int]:
        """Parents before children; ties broken by ascending label."""
        order = []
        placed = 0
        n = self.n
        while len(order) < n:
            for v in range(n):
                if not placed >> v & 1 and self.parents[v] & ~placed == 0:
                    order.append(v)
                    placed |= 1 << v
        return order


# ---------------------------------------------------------------------------
# ancestry


def ancestor_masks(parents: Sequence[int]) -> list[int]:
    """``anc[i]`` is the bitmask of all ancestors of node ``i``."""
    n = len(parents)
    anc = [0] * n
    done = 0
    while done != (1 << n) - 1:
        progressed = False
        for v in range(n):
            if done >> v & 1 or parents[v] & ~done:
                continue
            a = parents[v]
            for u in bits(parents[v]):
                a |= anc[u]
            anc[v] = a
            done |= 1 << v
            progressed = True
        if not progressed:
            raise CycleError("ancestor closure requested for a cyclic graph")
    return anc


def descendant_masks(parents: Sequence[int]) -> list[int]:
    anc = ancestor_masks(parents)
    desc = [0] * len(parents)
    for v, a in enumerate(anc):
        for u in bits(a):
            desc[u] |= 1 << v
    return desc


def ancestor_matrix(dag: Dag) -> np.ndarray:
    """Boolean matrix with entry (i, j) true iff j is an ancestor of i."""
    n = dag.n
    out = np.zeros((n, n), dtype=bool)
    for i, a in enumerate(ancestor_masks(dag.parents)):
        for j in bits(a):
            out[i, j] = True
    return out


def update_ancestors(anc: Sequence[int], parents: Sequence[int], changed: int) -> list[int]:
    """Ancestor masks after the parent set of ``changed`` was replaced.

    ``anc`` must be the closure of the graph before the change and
    ``parents`` the graph after it.  Only ``changed`` and the nodes that had it
    as an ancestor are recomputed.
    """
    new = list(anc)
    affected = 1 << changed
    for v, a in enumerate(anc):
        if a >> changed & 1:
            affected |= 1 << v
    # affected nodes are closed under descendants, so a pass in topological
    # order over them only reads final values
    pending = affected
    while pending:
        for v in bits(pending):
            p = parents[v]
            if p & pending:
                continue
            a = p
            for u in bits(p):
                a |= new[u]
            new[v] = a
            pending &= ~(1 << v)
    return new


# ---------------------------------------------------------------------------
# structure neighbourhood


@dataclass(frozen=True)
class StructureNeighborhood:
    deletions: tuple[tuple[int, int], ...]
    additions: tuple[tuple[int, int], ...]
    reversals: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.deletions) + len(self.additions) + len(self.reversals) + 1


def structure_neighborhood(dag: Dag, max_parents: int | None = None,
                           include_reversals: bool = True,
                           anc: Sequence[int] | None = None) -> StructureNeighborhood:
    """Single-edge additions, deletions and (optionally) reversals.

    Edges are ``(parent, child)``.  Additions that would close a cycle or give a
    node more than ``max_parents`` parents are left out; a reversal ``u -> v``
    is legal when ``u`` is not an ancestor of ``v`` through another parent of
    ``v`` and ``u`` has room for one more parent.
    """
    n = dag.n
    if max_parents is None:
        max_parents = n - 1
    par = dag.parents
    if anc is None:
        anc = ancestor_masks(par)
    deletions = tuple(dag.edges())
    additions = []
    for v in range(n):
        if popcount(par[v]) >= max_parents:
            continue
        for u in range(n):
            if u == v or par[v] >> u & 1 or anc[u] >> v & 1:
                continue
            additions.append((u, v))
    reversals = []
    if include_reversals:
        for u, v in deletions:
            if popcount(par[u]) >= max_parents:
                continue
            indirect = False
            for w in bits(par[v] & ~(1 << u)):
                if anc[w] >> u & 1:
                    indirect = True
                    break
            if not indirect:
                reversals.append((u, v))
    return StructureNeighborhood(deletions, tuple(additions), tuple(reversals))


def apply_deletion(dag: Dag, edge: tuple[int, int]) -> Dag:
    u, v = edge
    return dag.with_parents(v, dag.parents[v] & ~(1 << u))


def apply_addition(dag: Dag, edge: tuple[int, int]) -> Dag:
    u, v = edge
    return dag.with_parents(v, dag.parents[v] | 1 << u)


def apply_reversal(dag: Dag, edge: tuple[int, int]) -> Dag:
    u, v = edge
    par = list(dag.parents)
    par[v] &= ~(1 << u)
    par[u] |= 1 << v
    return Dag(tuple(par), check=False)


# ---------------------------------------------------------------------------
# text format


def format_dag(dag: Dag) -> str:
    lines = [f"n={dag.n}"]
    lines += [" ".join(str(int(x)) for x in row) for row in dag.to_matrix()]
    return "\n".join(lines) + "\n"


def parse_dag(text: str) -> Dag:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("DAG text must start with a line 'n=<int>'")
    n = int(lines[0][2:])
    rows = lines[1:1 + n]
    if len(rows) != n:
        raise ValueError(f"expected {n} matrix rows, found {len(rows)}")
    mat = []
    for k, row in enumerate(rows, start=2):
        vals = row.split()
        if len(vals) != n or any(x not in ("0", "1") for x in vals):
            raise ValueError(f"line {k}: expected {n} space-separated 0/1 entries")
        mat.append([int(x) for x in vals])
    return Dag.from_matrix(mat)


def parse_dag_blocks(text: str) -> list[Dag]:
    """Parse consecutive DAG blocks (as written to trace sidecar files)."""
    out = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    k = 0
    while k < len(lines):
        n = int(lines[k].strip()[2:])
        out.append(parse_dag("\n".join(lines[k:k + n + 1])))
        k += n + 1
    return out


# ---------------------------------------------------------------------------
# labelled partitions


@dataclass(frozen=True)
class LabelledPartition:
    """Ordered node partition; element 0 is leftmost.

    Edges may only point from an element to one further left, and every node
    outside the rightmost element has a parent in the element immediately to
    its right.
    """

    elements: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = set()
        for e in self.elements:
            if not e:
                raise ValueError("partition elements must be nonempty")
            if list(e) != sorted(e):
                raise ValueError("nodes inside an element must be ascending")
            seen.update(e)
        if seen != set(range(self.n)):
            raise ValueError("elements must cover nodes 0..n-1 exactly once")

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]]) -> "LabelledPartition":
        return cls(tuple(tuple(sorted(s)) for s in sets))

    @property
    def n(self) -> int:
        return sum(len(e) for e in self.elements)

    @property
    def m(self) -> int:
        return len(self.elements)

    @property
    def lam(self) -> tuple[int, ...]:
        return tuple(len(e) for e in self.elements)

    def masks(self) -> list[int]:
        return [to_mask(e) for e in self.elements]

    def position(self) -> list[int]:
        """Element index of every node."""
        pos = [0] * self.n
        for t, e in enumerate(self.elements):
            for v in e:
                pos[v] = t
        return pos

    def constraint_masks(self) -> list[tuple[int, int]]:
        """Per node ``(banned, required_any)`` parent masks.

        Banned: the node's own element and every element to its left (the node
        itself excluded).  Required: the adjacent element to the right, empty
        for the rightmost element.
        """
        el = self.masks()
        out = [(0, 0)] * self.n
        left = 0
        for t, e in enumerate(self.elements):
            left |= el[t]
            req = el[t + 1] if t + 1 < len(el) else 0
            for v in e:
                out[v] = (left & ~(1 << v), req)
        return out

    def contains(self, dag: Dag) -> bool:
        return outpoint_decomposition(dag) == self

    def to_text(self) -> str:
        sizes = ",".join(str(k) for k in self.lam)
        els = ";".join(",".join(str(v) for v in e) for e in self.elements)
        return f"{sizes}|{els}"

    @classmethod
    def from_text(cls, line: str) -> "LabelledPartition":
        try:
            sizes_s, els_s = line.strip().split("|")
            sizes = [int(x) for x in sizes_s.split(",")]
            els = [tuple(int(x) for x in e.split(",")) for e in els_s.split(";")]
        except ValueError as exc:
            raise ValueError(f"malformed partition line {line!r}") from exc
        part = cls.from_sets(els)
        if list(part.lam) != sizes:
            raise ValueError(f"sizes {sizes} disagree with elements in {line!r}")
        return part


def outpoint_decomposition(dag: Dag) -> LabelledPartition:
    """Peel off outpoints repeatedly; the first set removed is the rightmost element."""
    remaining = (1 << dag.n) - 1
    layers = []
    while remaining:
        out = 0
        for v in bits(remaining):
            if not dag.parents[v] & remaining:
                out |= 1 << v
        layers.append(tuple(bits(out)))
        remaining &= ~out
    return LabelledPartition(tuple(reversed(layers)))
