"""Command-line entry point.

Subcommands: train, eval, baseline, sweep, pn check. Exit codes:
0 success, 1 usage/config error, 2 runtime error, 3 verification
failure (pn check).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (
    SWEEP_GRID_DEFAULT,
    cmd_baseline,
    cmd_eval,
    cmd_pn_check,
    cmd_sweep,
    cmd_train,
    load_config,
)
from .junction import ConfigError
from .petri import PetriNetError, parse_net, traffic_light_net


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pncrl",
        description="Petri-net-constrained reinforcement learning on a 4-way junction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train an agent from a run config")
    p_train.add_argument("--config", required=True, help="run config JSON file")
    p_train.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a config entry by dotted key path (repeatable)",
    )

    p_eval = sub.add_parser("eval", help="evaluate a trained model")
    p_eval.add_argument("--model", required=True, help="directory containing model.bin + model.json")
    p_eval.add_argument("--episodes", type=int, default=200)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--output", default=None, help="output directory (default: <model>/eval)")

    p_base = sub.add_parser("baseline", help="evaluate a round-robin baseline")
    p_base.add_argument("--version", choices=("v1", "v2"), required=True)
    p_base.add_argument("--episodes", type=int, default=200)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--output", default=None)

    p_sweep = sub.add_parser("sweep", help="train one agent per reward-weight grid cell")
    p_sweep.add_argument("--config", required=True, help="base run config JSON file")
    p_sweep.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE"
    )
    p_sweep.add_argument(
        "--grid", default=",".join(str(v) for v in SWEEP_GRID_DEFAULT),
        help="comma-separated weight values applied to each of w1..w4",
    )
    p_sweep.add_argument("--eval-episodes", type=int, default=50)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--output", required=True, help="leaderboard output directory")

    p_pn = sub.add_parser("pn", help="Petri net utilities")
    pn_sub = p_pn.add_subparsers(dest="pn_command", required=True)
    p_check = pn_sub.add_parser("check", help="bounded reachability analysis")
    p_check.add_argument("file", help="net JSON file, or the builtin name 'traffic_light'")
    p_check.add_argument("--bound", type=int, default=1000, help="node bound for exploration")

    return parser


def _load_net(spec: str):
    if spec == "traffic_light":
        return traffic_light_net()
    return parse_net(Path(spec).read_text())


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg = load_config(args.config, args.overrides)
            cmd_train(cfg)
            return 0
        if args.command == "eval":
            cmd_eval(args.model, episodes=args.episodes, seed=args.seed, output_dir=args.output)
            return 0
        if args.command == "baseline":
            cmd_baseline(
                args.version, episodes=args.episodes, seed=args.seed, output_dir=args.output
            )
            return 0
        if args.command == "sweep":
            cfg = load_config(args.config, args.overrides)
            grid = tuple(float(v) for v in args.grid.split(","))
            if any(v < 0 for v in grid):
                raise ConfigError("grid values must be >= 0")
            cmd_sweep(
                cfg,
                grid=grid,
                eval_episodes=args.eval_episodes,
                workers=args.workers,
                output_dir=args.output,
            )
            return 0
        if args.command == "pn" and args.pn_command == "check":
            net = _load_net(args.file)
            report = cmd_pn_check(net, bound=args.bound)
            for line in report.lines():
                print(line)
            return 0 if report.passed else 3
        raise AssertionError(f"unhandled command {args.command!r}")
    except (ConfigError, PetriNetError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(run())


if __name__ == "__main__":
    main()
