import numpy as np
import pytest

from dagmcmc.graph import Dag
from dagmcmc.mapsearch import GammaSchedule, anneal, map_search, order_max_score
from dagmcmc.oracle import order_ok, enumerate_dags
from dagmcmc.scoring import ScoreTable, dag_log_score
from itertools import permutations
from conftest import random_table


def test_order_max_score_is_best_compatible_dag():
    table = random_table(4, seed=3)
    dags = enumerate_dags(4)
    for order in permutations(range(4)):
        score, dag = order_max_score(order, table)
        assert order_ok(order, dag)
        assert score == pytest.approx(max(dag_log_score(g, table) for g in dags if order_ok(order, g)))
        assert score == pytest.approx(dag_log_score(dag, table))


def test_schedule():
    s = GammaSchedule(2.0, 1.5, 10)
    assert s(0) == 2.0 and s(9) == 2.0 and s(10) == 3.0
    assert GammaSchedule(0.0)(5000) == 0.0


def test_flat_scores_every_restart_hits():
    res = map_search(ScoreTable.constant(3), restarts=10, steps=50)
    assert res.hits == 10 and res.p_star == 1.0 and res.bound == 0.0
    assert res.linear_extensions >= 1


def test_zero_gamma_accepts_everything():
    # with gamma 0 the walk never rejects, so the best seen is the max over visited orders
    table = random_table(4, seed=5)
    rng = np.random.default_rng(0)
    score, _ = anneal(table, 4000, GammaSchedule(0.0), rng)
    best = max(order_max_score(o, table)[0] for o in permutations(range(4)))
    assert score == pytest.approx(best)


def test_report_fields_and_validation():
    res = map_search(random_table(4), restarts=5, steps=200)
    rep = res.report()
    assert rep["restarts"] == 5 and 1 <= rep["hits"] <= 5
    assert rep["bound"] == pytest.approx((1 - rep["p_star"]) ** 5)
    with pytest.raises(ValueError):
        map_search(random_table(3), restarts=0)
