import json
import subprocess
import sys

import numpy as np
import pytest

from dagmcmc.cli import main
from dagmcmc.graph import parse_dag


def test_simulate_run_exact_pipeline(tmp_path, capsys):
    assert main(["simulate", "--n", "3", "--obs", "60", "--seed", "1", "--out", str(tmp_path)]) == 0
    data = str(tmp_path / "data.csv")
    parse_dag((tmp_path / "true_dag.txt").read_text())
    out = tmp_path / "run"
    assert main(["run", "--data", data, "--sampler", "partition", "--steps", "300",
                 "--chains", "2", "--thin", "3", "--burn-in", "0.1", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["spec"]["thin"] == 3 and manifest["seeds"] == [0, 1]
    assert main(["exact", "--data", data, "--out", str(tmp_path / "exact")]) == 0
    post = np.genfromtxt(tmp_path / "exact" / "exact_edge_posterior.csv", delimiter=",",
                         skip_header=1)[:, 1:]
    assert post.shape == (3, 3) and np.all(np.diag(post) == 0)
    assert main(["map-search", "--data", data, "--restarts", "5", "--steps", "100",
                 "--gamma", "2", "--out", str(tmp_path / "map")]) == 0
    assert json.loads((tmp_path / "map" / "map_report.json").read_text())["restarts"] == 5
    assert main(["score-table", "--data", data, "--max-parents", "1",
                 "--out", str(tmp_path / "t.csv")]) == 0
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 1 + 3 * 3


def test_counts_output(capsys):
    assert main(["counts", "--n", "3"]) == 0
    out = capsys.readouterr().out
    assert "n,a_n" in out and "3,25" in out and "lambda,count" in out and "1-1-1,12" in out


def test_errors_are_one_line(tmp_path, capsys):
    assert main(["run", "--data", str(tmp_path / "missing.csv"), "--sampler", "order",
                 "--steps", "10", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and err.count("\n") == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n1,oops\n")
    assert main(["exact", "--data", str(bad), "--out", str(tmp_path)]) == 1
    assert ":3:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["run", "--sampler", "nope"])


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "dagmcmc.cli", "counts", "--n", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "2,3" in res.stdout
