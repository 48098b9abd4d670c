import json
from collections import Counter

import numpy as np
import pytest

from dagmcmc.chain import (ChainConfig, NoSamplesError, edge_posterior, read_trace_csv,
                           summarize_posterior)
from dagmcmc.experiment import SAMPLERS, ExperimentSpec, run_chain, run_experiment
from dagmcmc.graph import Dag, LabelledPartition, parse_dag_blocks
from dagmcmc.oracle import enumerate_dags, posterior_from_table
from dagmcmc.scoring import ScoreTable
from dagmcmc.simulate import SimulationSpec, simulate_data


@pytest.fixture(scope="module")
def data():
    return simulate_data(SimulationSpec(N=80, n=4, max_parents=2), np.random.default_rng(0))


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(steps=0)
    with pytest.raises(ValueError):
        ChainConfig(steps=5, thin=0)
    with pytest.raises(ValueError):
        ChainConfig(steps=5, p_rev=0.995)
    with pytest.raises(ValueError):
        ExperimentSpec(sampler="gibbs", steps=10)


def test_edge_posterior_and_empty_error():
    dags = [Dag.from_edges(3, [(0, 1)]), Dag.empty(3)]
    post = edge_posterior(dags)
    assert post[0, 1] == 0.5 and post.sum() == 0.5 and np.all(np.diag(post) == 0)
    with pytest.raises(NoSamplesError):
        edge_posterior([])


def test_outputs_written(tmp_path, data):
    spec = ExperimentSpec(sampler="partition-rev", steps=600, chains=2, seed=10, thin=5,
                          out_dir=str(tmp_path))
    res = run_experiment(spec, data=data)
    for name in ("trace_chain0.csv", "trace_chain1.csv", "dags_chain1.txt", "partitions_chain0.txt",
                 "best_scores.csv", "edge_posterior.csv", "best_dag.txt", "manifest.json"):
        assert (tmp_path / name).exists(), name
    rows = read_trace_csv(tmp_path / "trace_chain0.csv")
    assert len(rows) == 120 and np.all(np.diff(rows[:, 0]) > 0)
    assert len(parse_dag_blocks((tmp_path / "dags_chain0.txt").read_text())) == 120
    parts = (tmp_path / "partitions_chain0.txt").read_text().splitlines()
    assert LabelledPartition.from_text(parts[0]).n == 4
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [10, 11] and manifest["spec"]["sampler"] == "partition-rev"
    assert "numpy" in manifest["versions"] and manifest["wall_clock_s"] > 0
    best = (tmp_path / "best_scores.csv").read_text().splitlines()
    assert best[0] == "chain,seed,best_log_score" and len(best) == 3
    assert res.best_score == max(t.best_score for t in res.traces)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_every_sampler_runs_and_is_seeded(sampler, data):
    spec = ExperimentSpec(sampler=sampler, steps=400, chains=2, seed=4)
    a = run_experiment(spec, data=data)
    b = run_experiment(spec, data=data)
    assert all(np.array_equal(x.state_scores, y.state_scores) for x, y in zip(a.traces, b.traces))
    assert not np.array_equal(a.traces[0].state_scores, a.traces[1].state_scores)


def test_parallel_chains_match_serial(data):
    serial = run_experiment(ExperimentSpec(sampler="structure", steps=300, chains=2, seed=1), data=data)
    par = run_experiment(ExperimentSpec(sampler="structure", steps=300, chains=2, seed=1, jobs=2), data=data)
    assert np.array_equal(serial.edge_posterior, par.edge_posterior)


def test_flat_partition_edge_frequency():
    table = ScoreTable.constant(3)
    res = run_experiment(ExperimentSpec(sampler="partition", steps=30000, chains=2, seed=0),
                         table=table)
    want = posterior_from_table(table).edge_posterior()
    assert want[0, 1] == pytest.approx(8 / 25)
    assert np.max(np.abs(res.edge_posterior - want)) < 0.03


def test_burn_in_too_large_for_thin_trace():
    tr = run_chain("structure", ScoreTable.constant(3), ChainConfig(steps=10, thin=20))
    with pytest.raises(NoSamplesError):
        summarize_posterior([tr], 0.5)
