import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import random_table
from dagmcmc.chain import ChainConfig
from dagmcmc.graph import Dag
from dagmcmc.oracle import enumerate_dags, posterior_from_table
from dagmcmc.reversal import rev_step
from dagmcmc.scoring import ScoreTable, dag_log_score
from dagmcmc.structure import run_structure_chain, structure_transitions
from kernels import assemble, balance_error


def test_acceptance_of_first_edge_with_flat_scores():
    # both neighbourhoods hold three moves including the self-move
    row = structure_transitions(Dag.empty(2), ScoreTable.constant(2))
    one = Dag.from_edges(2, [(0, 1)])
    assert row[one] == pytest.approx(1 / 3)
    assert structure_transitions(one, ScoreTable.constant(2))[Dag.empty(2)] == pytest.approx(1 / 3)
    # without reversals: |nbd(empty)| = 7, |nbd(0->1)| = 6 at n=3
    flat = ScoreTable.constant(3)
    one = Dag.from_edges(3, [(0, 1)])
    assert structure_transitions(Dag.empty(3), flat, False)[one] == pytest.approx(1 / 7)
    assert structure_transitions(one, flat, False)[Dag.empty(3)] == pytest.approx(1 / 6 * 6 / 7)


@pytest.mark.parametrize("reversals", [True, False])
def test_structure_kernel_detailed_balance(reversals):
    table = random_table(3, seed=21)
    dags = enumerate_dags(3)
    post = posterior_from_table(table)
    pi = np.array([post.prob(g) for g in dags])
    K = assemble(dags, lambda g: structure_transitions(g, table, reversals))
    db, st = balance_error(pi, K)
    assert db < 1e-12 and st < 1e-12


def test_kernel_respects_parent_limit():
    table = random_table(4, seed=3, max_parents=1)
    dags = enumerate_dags(4, 1)
    post = posterior_from_table(table)
    pi = np.array([post.prob(g) for g in dags])
    K = assemble(dags, lambda g: structure_transitions(g, table))
    assert balance_error(pi, K)[0] < 1e-12


def test_single_step_trace():
    table = random_table(3)
    tr = run_structure_chain(Dag.empty(3), table, ChainConfig(steps=1))
    assert tr.steps == 1 and tr.record_steps == [0]
    assert tr.state_scores[0] == pytest.approx(dag_log_score(Dag.empty(3), table))


def test_scores_track_states():
    table = random_table(4, seed=2)
    tr = run_structure_chain(Dag.empty(4), table, ChainConfig(steps=3000, seed=1))
    for g, s, d in zip(tr.dags, tr.record_state_scores, tr.record_dag_scores):
        assert s == pytest.approx(dag_log_score(g, table), abs=1e-9) and s == d
    assert tr.best_score == pytest.approx(max(tr.state_scores))


def test_zero_rev_rate_matches_plain_chain():
    table = random_table(4, seed=2)
    cfg = ChainConfig(steps=2000, seed=5, p_rev=0.0)
    a = run_structure_chain(Dag.empty(4), table, cfg)
    b = run_structure_chain(Dag.empty(4), table, cfg, rev=rev_step)
    assert np.array_equal(a.state_scores, b.state_scores)
    assert a.dags == b.dags


def test_flat_scores_give_uniform_dags():
    table = ScoreTable.constant(3)
    tr = run_structure_chain(Dag.empty(3), table, ChainConfig(steps=60000, seed=3))
    counts = Counter(tr.post_burn_in(0.1))
    assert chisquare([counts[g] for g in enumerate_dags(3)]).pvalue > 1e-3


def test_initial_state_over_limit_rejected():
    table = ScoreTable.constant(3, 1)
    with pytest.raises(ValueError):
        run_structure_chain(Dag.from_edges(3, [(0, 2), (1, 2)]), table, ChainConfig(steps=2))
