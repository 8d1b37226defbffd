"""Command-line interface.

Subcommands: ``bound`` (print the certified trajectory count), ``run``
(execute a configured experiment), ``reproduce`` (bundled desk-scale
experiments with charts), ``gather`` (trajectory pool to CSV) and ``eval``
(replay a stored policy against a stored pool).

Exit codes: 0 success, 1 usage, 2 validation, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..bounds import BoundInputs, required_trajectories
from ..core import SchemaError
from ..environments.tickets import PriceCsvError
from ..evaluation import evaluate, gather_full, load_pool_csv, save_pool_csv
from ..policies import load_policy
from .config import ConfigError, build_domain, load_config, resolve_output_dir
from .reproduce import FIGURES, ReproduceOptions, reproduce_figure
from .runner import run_to_directory

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stopsearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    bound = sub.add_parser("bound", help="print the certified trajectory count")
    bound.add_argument("--epsilon", type=float, required=True)
    bound.add_argument("--delta", type=float, required=True)
    bound.add_argument("--vmax", type=float, required=True)
    bound.add_argument("--d", type=int, required=True, help="policy-class VC dimension")
    bound.add_argument("--horizon", type=int, required=True)
    bound.add_argument("--constant", type=float, default=1.0)

    run = sub.add_parser("run", help="execute a configured experiment")
    run.add_argument("--config", required=True, help="INI experiment config")

    rep = sub.add_parser("reproduce", help="run a bundled desk-scale experiment")
    rep.add_argument("--figure", required=True, choices=FIGURES)
    rep.add_argument("--out-dir", default="reproductions")
    rep.add_argument("--seeds", type=int, default=20)
    rep.add_argument("--episodes", type=int, default=30)
    rep.add_argument("--candidates", type=int, default=500)
    rep.add_argument("--eval-episodes", type=int, default=3000)
    rep.add_argument(
        "--budgets", default="30,100,300,1000", help="comma list (tutoring-budget)"
    )
    rep.add_argument("--no-plot", action="store_true")

    gather = sub.add_parser("gather", help="gather a trajectory pool into a CSV")
    gather.add_argument("--config", required=True, help="config providing [domain]")
    gather.add_argument("--n", type=int, required=True)
    gather.add_argument("--seed", type=int, required=True)
    gather.add_argument("--out", required=True)

    evaluate_cmd = sub.add_parser("eval", help="evaluate a stored policy on a pool")
    evaluate_cmd.add_argument("--config", required=True, help="config providing [domain]")
    evaluate_cmd.add_argument("--policy", required=True)
    evaluate_cmd.add_argument("--pool", required=True)
    evaluate_cmd.add_argument("--out", default=None)

    return parser


def _cmd_bound(args) -> int:
    inputs = BoundInputs(
        epsilon=args.epsilon,
        delta=args.delta,
        v_max=args.vmax,
        d=args.d,
        horizon=args.horizon,
        constant_c=args.constant,
    )
    print(required_trajectories(inputs))
    return EXIT_OK


def _cmd_run(args) -> int:
    config = load_config(args.config)
    table, _ = run_to_directory(config)
    print(f"wrote {len(table.rows)} rows to {config.output_dir / 'results.csv'}")
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    budgets = tuple(int(part) for part in str(args.budgets).split(",") if part.strip())
    options = ReproduceOptions(
        seeds=args.seeds,
        episodes=args.episodes,
        budgets=budgets,
        n_candidates=args.candidates,
        eval_episodes=args.eval_episodes,
        render=not args.no_plot,
    )
    output = reproduce_figure(args.figure, resolve_output_dir(args.out_dir), options)
    for method, path in sorted(output.csv_paths.items()):
        print(f"{method}: {path}")
    if output.png_path is not None:
        print(f"chart: {output.png_path}")
    return EXIT_OK


def _cmd_gather(args) -> int:
    config = load_config(args.config)
    domain = build_domain(config.domain, args.seed)
    pool = gather_full(domain, args.n, args.seed)
    path = save_pool_csv(pool, resolve_output_dir(args.out))
    print(f"wrote {len(pool)} trajectories to {path}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = load_config(args.config)
    domain = build_domain(config.domain, 0)
    policy = load_policy(args.policy)
    pool = load_pool_csv(args.pool)
    report = evaluate(policy, pool, domain.reward)
    print(f"estimate = {report.estimate!r}")
    print(f"n_used = {report.n_used}")
    if args.out:
        out = Path(resolve_output_dir(args.out))
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            fh.write("trajectory_id,return\n")
            for i, value in enumerate(report.per_trajectory_returns):
                fh.write(f"{i},{value!r}\n")
        print(f"per-trajectory returns: {out}")
    return EXIT_OK


_COMMANDS = {
    "bound": _cmd_bound,
    "run": _cmd_run,
    "reproduce": _cmd_reproduce,
    "gather": _cmd_gather,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, PriceCsvError, SchemaError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
