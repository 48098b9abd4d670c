import numpy as np
import pytest

from dagmcmc.graph import (CycleError, Dag, LabelledPartition, ancestor_masks, ancestor_matrix,
                           apply_addition, apply_deletion, apply_reversal, bits, format_dag,
                           is_acyclic, outpoint_decomposition, parse_dag, parse_dag_blocks,
                           structure_neighborhood, to_mask, update_ancestors)
from dagmcmc.simulate import generate_random_dag


def chain3():
    return Dag.from_edges(3, [(0, 1), (1, 2)])


def test_is_acyclic_basic_cases():
    assert is_acyclic(np.zeros((3, 3), dtype=int))
    assert is_acyclic(chain3().to_matrix())
    two_cycle = np.array([[0, 1], [1, 0]])
    assert not is_acyclic(two_cycle)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.eye(2), np.array([[0, 2], [0, 0]])])
def test_is_acyclic_rejects_malformed(bad):
    with pytest.raises(ValueError):
        is_acyclic(bad)


def test_dag_rejects_cycles_and_self_loops():
    with pytest.raises(CycleError):
        Dag.from_edges(2, [(0, 1), (1, 0)])
    with pytest.raises(CycleError):
        Dag((1,))


def test_matrix_round_trip_and_edges():
    g = Dag.from_edges(4, [(0, 1), (2, 1), (1, 3)])
    assert Dag.from_matrix(g.to_matrix()) == g
    assert g.edges() == [(0, 1), (2, 1), (1, 3)]
    assert g.edge_count == 3 and g.has_edge(2, 1) and not g.has_edge(1, 2)
    assert g.in_degree()[1] == 2


def test_bits_and_masks():
    assert list(bits(0b10110)) == [1, 2, 4]
    assert to_mask([np.int64(3), 0]) == 0b1001


def test_ancestors_of_chain():
    anc = ancestor_matrix(chain3())
    assert set(np.flatnonzero(anc[2])) == {0, 1}
    assert set(np.flatnonzero(anc[1])) == {0}
    assert not ancestor_matrix(Dag.empty(3)).any()


def test_ancestor_matrix_matches_boolean_power_closure():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = generate_random_dag(6, 5, rng)
        a = g.to_matrix().astype(int)  # a[child, parent]
        reach = np.zeros_like(a)
        power = np.eye(6, dtype=int)
        for _ in range(6):
            power = (power @ a > 0).astype(int)
            reach |= power
        assert np.array_equal(ancestor_matrix(g), reach.astype(bool))


def test_incremental_ancestors_equal_recomputation():
    rng = np.random.default_rng(2)
    for _ in range(50):
        g = generate_random_dag(6, 5, rng)
        nb = structure_neighborhood(g)
        for apply, moves in ((apply_addition, nb.additions), (apply_deletion, nb.deletions)):
            for e in moves:
                h = apply(g, e)
                got = update_ancestors(ancestor_masks(g.parents), h.parents, e[1])
                assert got == ancestor_masks(h.parents)


def test_outpoint_decomposition_examples():
    assert outpoint_decomposition(Dag.empty(5)).elements == ((0, 1, 2, 3, 4),)
    assert outpoint_decomposition(chain3()).elements == ((2,), (1,), (0,))
    g = Dag.from_edges(5, [(3, 1), (0, 3), (2, 3), (4, 3), (0, 1)])
    part = outpoint_decomposition(g)
    assert part.lam == (1, 1, 3)
    assert part.elements == ((1,), (3,), (0, 2, 4))
    assert part.contains(g)


def test_partition_constraints():
    part = LabelledPartition(((1,), (2, 3), (0, 4)))
    banned, req = part.constraint_masks()[2]
    assert banned == to_mask([1, 3])
    assert req == to_mask([0, 4])
    assert part.constraint_masks()[0] == (to_mask([1, 2, 3, 4]), 0)
    assert part.constraint_masks()[1] == (0, to_mask([2, 3]))


@pytest.mark.parametrize("els", [((0,), (0, 1)), ((1, 0),), ((0,), ()), ((0,), (2,))])
def test_partition_rejects_invalid(els):
    with pytest.raises(ValueError):
        LabelledPartition(els)


def test_partition_text_round_trip():
    part = LabelledPartition(((1,), (2, 3), (0, 4)))
    assert LabelledPartition.from_text(part.to_text()) == part


def test_neighbourhood_empty_and_complete():
    nb = structure_neighborhood(Dag.empty(3))
    assert (len(nb.deletions), len(nb.additions), len(nb.reversals), nb.size) == (0, 6, 0, 7)
    full = Dag.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    nb = structure_neighborhood(full)
    assert len(nb.deletions) == 3 and not nb.additions
    assert set(nb.reversals) == {(1, 2), (0, 1)}
    assert nb.size == 6


def _brute_neighbourhood(g, k=None):
    n = g.n
    dele, add, rev = set(), set(), set()
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            if g.has_edge(u, v):
                dele.add((u, v))
                par = list(g.parents)
                par[v] &= ~(1 << u)
                par[u] |= 1 << v
                if is_acyclic(Dag(tuple(par), check=False).to_matrix()) and (
                        k is None or bin(par[u]).count("1") <= k):
                    rev.add((u, v))
            elif not g.has_edge(v, u):
                par = list(g.parents)
                par[v] |= 1 << u
                if is_acyclic(Dag(tuple(par), check=False).to_matrix()) and (
                        k is None or bin(par[v]).count("1") <= k):
                    add.add((u, v))
    return dele, add, rev


@pytest.mark.parametrize("k", [None, 2])
def test_neighbourhood_matches_brute_force(k):
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(2, 7))
        g = generate_random_dag(n, n - 1 if k is None else min(k, n - 1), rng)
        nb = structure_neighborhood(g, max_parents=k)
        dele, add, rev = _brute_neighbourhood(g, k)
        assert set(nb.deletions) == dele and set(nb.additions) == add and set(nb.reversals) == rev
        assert nb.size == len(dele) + len(add) + len(rev) + 1


def test_reversal_application():
    g = apply_reversal(chain3(), (0, 1))
    assert g.has_edge(1, 0) and not g.has_edge(0, 1)


def test_dag_text_round_trip():
    g = Dag.from_edges(4, [(0, 1), (2, 1), (1, 3)])
    text = format_dag(g)
    assert text.startswith("n=4\n")
    assert parse_dag(text) == g
    assert parse_dag_blocks(text + format_dag(Dag.empty(2))) == [g, Dag.empty(2)]


def test_parse_dag_rejects_cycle():
    with pytest.raises(ValueError):
        parse_dag("n=2\n0 1\n1 0\n")
