"""Command-line entry point.

Subcommands:
  simulate  --config F --controller {baseline|fixed:<idx>} --out DIR --seed S
  train     --config F --out DIR --seed S [--resume CKPT]
  evaluate  --config F --checkpoint C --out DIR --seed S
  selftest  (gradient check + toy-MDP policy check)
"""
from __future__ import annotations

import argparse
import sys

from . import engine, selftest
from .config import ConfigError, SimConfig, parse_config


def _load(path: str | None) -> SimConfig:
    if path is None:
        cfg = SimConfig()
        cfg.validate()
        return cfg
    return parse_config(path)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file (defaults when omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="64-bit run seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicesim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a non-learning controller")
    _add_common(p_sim)
    p_sim.add_argument("--controller", required=True,
                       help="baseline or fixed:<action index>")

    p_train = sub.add_parser("train", help="train the DRL controller")
    _add_common(p_train)
    p_train.add_argument("--resume", help="checkpoint to continue from")

    p_eval = sub.add_parser("evaluate", help="evaluate a trained checkpoint")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", help="trained checkpoint JSON")

    sub.add_parser("selftest", help="run the built-in correctness checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "selftest":
            return selftest.run()
        cfg = _load(args.config)
        if args.command == "simulate":
            spec = args.controller
            if spec == "baseline":
                engine.evaluate(cfg, args.out, args.seed, "baseline")
            elif spec.startswith("fixed:"):
                engine.evaluate(cfg, args.out, args.seed, "fixed",
                                action_index=int(spec.split(":", 1)[1]))
            else:
                print(f"slicesim: unknown controller {spec!r}", file=sys.stderr)
                return 2
        elif args.command == "train":
            engine.train(cfg, args.out, args.seed, resume=args.resume)
        elif args.command == "evaluate":
            if not args.checkpoint:
                print("slicesim: evaluate requires --checkpoint", file=sys.stderr)
                return 2
            engine.evaluate(cfg, args.out, args.seed, "drl",
                            checkpoint=args.checkpoint)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"slicesim: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
