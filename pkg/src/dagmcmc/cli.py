"""Command line interface: ``dagmcmc <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .chain import write_matrix_csv
from .experiment import SAMPLERS, ExperimentSpec, run_experiment
from .graph import format_dag, parse_dag
from .mapsearch import GammaSchedule, map_search
from .oracle import (compositions, count_dags, count_dags_in_partition, order_biased_posterior,
                     posterior_from_table)
from .scoring import build_score_table
from .simulate import SimulationSpec, load_csv, simulate_data, write_csv, generate_random_dag


def _table(args):
    data = load_csv(args.data)
    k = args.max_parents if args.max_parents is not None else data.n - 1
    return data, build_score_table(data, k)


def cmd_simulate(args):
    rng = np.random.default_rng(args.seed)
    if args.dag:
        dag = parse_dag(Path(args.dag).read_text())
    else:
        if args.n is None:
            raise ValueError("simulate needs --n or --dag")
        k = args.max_parents if args.max_parents is not None else args.n - 1
        dag = generate_random_dag(args.n, k, rng)
    data = simulate_data(SimulationSpec(N=args.obs, dag=dag, coefficient=args.coefficient), rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(data, out / "data.csv")
    (out / "true_dag.txt").write_text(format_dag(dag))
    print(f"wrote {out / 'data.csv'} ({data.N} x {data.n}) and {out / 'true_dag.txt'}")


def cmd_score_table(args):
    _, table = _table(args)
    text = table.to_csv()
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(table)} entries to {args.out}")
    else:
        sys.stdout.write(text)


def cmd_run(args):
    spec = ExperimentSpec(sampler=args.sampler, steps=args.steps, max_parents=args.max_parents,
                          data_path=args.data, chains=args.chains, seed=args.seed, thin=args.thin,
                          burn_in_fraction=args.burn_in, p_rev=args.p_rev, out_dir=args.out,
                          include_reversals=not args.no_reversals, jobs=args.jobs)
    res = run_experiment(spec)
    print(f"{spec.sampler}: {spec.chains} chain(s) x {spec.steps} steps, "
          f"best log score {res.best_score:.6f}, outputs in {spec.out_dir}")


def cmd_exact(args):
    data, table = _table(args)
    post = order_biased_posterior(table) if args.order_biased else posterior_from_table(table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(post.edge_posterior(), data.names, out / "exact_edge_posterior.csv")
    top = post.argmax()
    (out / "exact_map_dags.txt").write_text("".join(format_dag(d) for d in top))
    print(f"{len(post.dags)} DAGs enumerated; {len(top)} tie for the maximum; outputs in {out}")


def cmd_map_search(args):
    data, table = _table(args)
    sched = GammaSchedule(args.gamma, args.gamma_ratio, args.gamma_block)
    res = map_search(table, restarts=args.restarts, steps=args.steps, schedule=sched, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "map_dag.txt").write_text(format_dag(res.best_dag))
    (out / "map_report.json").write_text(json.dumps(res.report(), indent=2) + "\n")
    print(f"best log score {res.best_score:.6f}; found in {res.hits}/{len(res.restart_scores)} "
          f"restarts; bound {res.bound:.3g}")


def cmd_counts(args):
    lines = ["n,a_n"] + [f"{k},{count_dags(k)}" for k in range(1, args.n + 1)]
    part = ["lambda,count"] + [f"{'-'.join(map(str, lam))},{count_dags_in_partition(lam)}"
                               for lam in compositions(args.n)]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "dag_counts.csv").write_text("\n".join(lines) + "\n")
        (out / "partition_counts.csv").write_text("\n".join(part) + "\n")
        print(f"wrote {out / 'dag_counts.csv'} and {out / 'partition_counts.csv'}")
    else:
        print("\n".join(lines))
        print()
        print("\n".join(part))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dagmcmc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, required=True):
        sp.add_argument("--data", required=required, help="CSV with a header row of variable names")
        sp.add_argument("--max-parents", type=int, default=None, help="parent limit K (default n-1)")

    sp = sub.add_parser("simulate", help="simulate linear-Gaussian data from a (random) DAG")
    sp.add_argument("--n", type=int)
    sp.add_argument("--max-parents", type=int, default=None)
    sp.add_argument("--dag", help="DAG text file to simulate from instead of a random DAG")
    sp.add_argument("--obs", type=int, default=100, help="number of observations N")
    sp.add_argument("--coefficient", type=float, default=2.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("score-table", help="export the BGe parent-set score table")
    data_args(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_score_table)

    sp = sub.add_parser("run", help="run MCMC chains")
    data_args(sp)
    sp.add_argument("--sampler", choices=SAMPLERS, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--chains", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0, help="base seed; chain i uses seed+i")
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--burn-in", type=float, default=0.2)
    sp.add_argument("--p-rev", type=float, default=0.07)
    sp.add_argument("--no-reversals", action="store_true",
                    help="structure samplers: no single-edge reversals")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for the chains")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("exact", help="exact posterior by enumeration (n <= 5)")
    data_args(sp)
    sp.add_argument("--order-biased", action="store_true",
                    help="weight DAGs by their number of compatible orders")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("map-search", help="annealed order search for the top-scoring DAG")
    data_args(sp)
    sp.add_argument("--restarts", type=int, default=100)
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--gamma-ratio", type=float, default=1.2)
    sp.add_argument("--gamma-block", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_map_search)

    sp = sub.add_parser("counts", help="DAG counts per node count and per partition")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_counts)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
