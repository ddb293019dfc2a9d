"""Command-line front end.

Subcommands: generate, train, report, plot-data.  Exit codes: 0 success,
2 usage/config error, 3 solver divergence, 4 missing artifact.  The
CNODE_OUT environment variable overrides the default output root.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .constraints import constraints_for
from .datasets import (STATE_COLUMNS, SYSTEM_DEFAULTS, TASKS, make_task,
                       save_dataset, system_spec, task_spec)
from .errors import CnodeError, ConfigError, DivergenceError, ReportError
from .network import Mlp, load_params
from .report import (aggregate, format_table, load_result,
                     render_curves_figure, render_metrics_figure,
                     write_curves_csv, write_table_csv)
from .solver import ode_solve
from .training import run_experiment, write_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_MISSING = 4


def default_output_root():
    return Path(os.environ.get("CNODE_OUT", "runs"))


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cnode",
        description="Constrained Neural-ODE training toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    systems = sorted(SYSTEM_DEFAULTS)

    gen = sub.add_parser("generate", help="write train/test dataset CSVs")
    gen.add_argument("--system", required=True, choices=systems)
    gen.add_argument("--task", default="reconstruction", choices=TASKS)
    gen.add_argument("--scale", default="paper", choices=["paper", "desk"])
    gen.add_argument("--out", default=None, help="output directory")

    tr = sub.add_parser("train", help="run one or more training cells")
    tr.add_argument("--config", default=None,
                    help="JSON config file (flat, or a result.json echo); "
                         "flags override file values")
    tr.add_argument("--system", choices=systems)
    tr.add_argument("--task", choices=TASKS)
    tr.add_argument("--method",
                    choices=["vanilla", "quadratic", "self-adaptive"])
    tr.add_argument("--mu", type=float)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--seeds", default=None,
                    help="comma-separated seed list; one run per seed")
    tr.add_argument("--k-max", type=int, dest="k_max")
    tr.add_argument("--lr", type=float)
    tr.add_argument("--solver-method", choices=["euler", "rk4"],
                    dest="solver_method")
    tr.add_argument("--substeps", type=int)
    tr.add_argument("--paper-scale", action="store_true",
                    help="full grids and k_max=10000")
    tr.add_argument("--out", default=None, help="output root directory")
    tr.add_argument("--run-dir", default=None,
                    help="explicit run directory (single run only)")

    rep = sub.add_parser("report", help="aggregate run metrics")
    rep.add_argument("run_dirs", nargs="+")
    rep.add_argument("--out", default=None,
                     help="directory for report.csv and report.png")

    pd = sub.add_parser("plot-data",
                        help="export truth/prediction curves for one run")
    pd.add_argument("run_dir")
    pd.add_argument("--out", default=None, help="output directory")
    return parser


def cmd_generate(args):
    out = Path(args.out) if args.out else default_output_root() / "datasets"
    out.mkdir(parents=True, exist_ok=True)
    base = system_spec(args.system, args.task, scale=args.scale)
    train, test = make_task(base, task_spec(args.system, args.task,
                                            args.scale))
    paths = []
    for split, traj in (("train", train), ("test", test)):
        path = out / f"{args.system}_{args.task}_{split}.csv"
        save_dataset(path, traj, args.system, base.params)
        paths.append(path)
    for p in paths:
        print(p)
    return EXIT_OK


def _config_from_args(args, seed=None):
    values = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if isinstance(data, dict) and isinstance(data.get("config"), dict):
            data = data["config"]  # result.json echo
        values.update(data)
    for key in ("system", "task", "method", "mu", "seed", "k_max", "lr",
                "solver_method", "substeps"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.paper_scale:
        values["scale"] = "paper"
        if args.k_max is None:
            values["k_max"] = 10000
    if seed is not None:
        values["seed"] = seed
    if "system" not in values:
        raise ConfigError("--system (or a config file) is required")
    return ExperimentConfig.from_dict(values)


def _run_dir_name(config):
    name = f"{config.system}_{config.task}_{config.method}"
    if config.method == "quadratic":
        name += f"_mu{config.mu:g}"
    return f"{name}_s{config.seed}"


def cmd_train(args):
    seeds = None
    if args.seeds:
        seeds = [int(s) for s in args.seeds.replace(";", ",").split(",") if s]
        if args.run_dir:
            raise ConfigError("--run-dir cannot be combined with --seeds")
    out_root = Path(args.out) if args.out else default_output_root()
    rc = EXIT_OK
    for seed in (seeds or [None]):
        config = _config_from_args(args, seed=seed)
        if config.output_dir and not args.out:
            out_root = Path(config.output_dir)
        run_dir = Path(args.run_dir) if args.run_dir \
            else out_root / _run_dir_name(config)
        result = run_experiment(config)
        write_run(run_dir, result)
        print(run_dir)
        if result.status == "diverged":
            print(f"run diverged: {run_dir}", file=sys.stderr)
            rc = EXIT_DIVERGED
    return rc


def cmd_report(args):
    results = [load_result(d) for d in args.run_dirs]
    rows = aggregate(results)
    print(format_table(rows))
    out = Path(args.out) if args.out else Path(args.run_dirs[0]).parent
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(rows, out / "report.csv")
    render_metrics_figure(rows, out / "report.png")
    print(out / "report.csv")
    print(out / "report.png")
    return EXIT_OK


def cmd_plot_data(args):
    run_dir = Path(args.run_dir)
    params_path = run_dir / "params.bin"
    if not params_path.exists():
        raise FileNotFoundError(f"missing artifact: {params_path}")
    result = load_result(run_dir)
    config = ExperimentConfig.from_dict(result["config"])
    theta = load_params(params_path)
    base = system_spec(config.system, config.task,
                       params=config.system_params, scale=config.scale)
    _, test = make_task(base, task_spec(config.system, config.task,
                                        config.scale))
    net = Mlp(config.layers())

    def f(y):
        return net.forward_array(theta, y)

    pred = ode_solve(f, np.asarray(test.states[0], dtype=float), test.grid,
                     method=config.solver_method, substeps=config.substeps)
    cols = STATE_COLUMNS[config.system]
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "curves.csv"
    png_path = out / "curves.png"
    write_curves_csv(csv_path, test.grid.points, test.values(),
                     pred.values(), cols)
    render_curves_figure(png_path, test.grid.points, test.values(),
                         pred.values(), cols,
                         title=f"{config.system} / {config.task} / "
                               f"{config.method_label()}")
    print(csv_path)
    print(png_path)
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "report": cmd_report,
    "plot-data": cmd_plot_data,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except CnodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
