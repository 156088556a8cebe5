"""Command-line entry point: ``eremu run|ablate|sweep-l``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .config import REPLAY_MODES, RunConfig
from .errors import ConfigError, RunError


def _positive_ints(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("l values must be positive integers")
    return values


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eremu", description="Adaptive experience-replay simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=_seed, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory for metrics.json and table.csv")

    p_run = sub.add_parser("run", parents=[common], help="run one replay mode over the schedule")
    p_run.add_argument("--mode", choices=REPLAY_MODES, help="replay mode (overrides the config)")

    sub.add_parser("ablate", parents=[common], help="distance-ranked vs random selection on identical data")

    p_sweep = sub.add_parser("sweep-l", parents=[common], help="one run per selection count l")
    p_sweep.add_argument("--mode", choices=REPLAY_MODES, help="replay mode (overrides the config)")
    p_sweep.add_argument(
        "--l-values", type=_positive_ints, default=list(range(1, 11)), help="comma-separated l values (default 1..10)"
    )
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "mode", None):
        cfg.replay_mode = args.mode
    if args.out:
        cfg.output = args.out
    return cfg.validate()


def _summary(reports, label) -> str:
    return "\n".join(f"{label(r)}: overall_mean={r.overall_mean:.4f} current_mean={r.current_mean:.4f}" for r in reports)


def execute(args) -> str:
    cfg = _load_config(args)
    if args.command == "run":
        reports, label, extra = [harness.run(cfg)], (lambda r: r.mode), None
    elif args.command == "ablate":
        ab = harness.run_ablation(cfg)
        reports, label, extra = ab.reports, (lambda r: r.mode), {"difference": ab.difference}
    else:
        reports = harness.sweep_l(cfg, args.l_values)
        means = [r.overall_mean for r in reports]
        label = lambda r: f"l={r.config['l']}"
        extra = {
            "l_values": list(args.l_values),
            "overall_means": means,
            "spread": float(np.max(means) - np.min(means)),
        }
    text = _summary(reports, label)
    if extra and "difference" in extra:
        text += f"\ndifference={extra['difference']:.4f}"
    if extra and "spread" in extra:
        text += f"\nspread={extra['spread']:.4f}"
    if cfg.output:
        m, t = harness.write_metrics(reports, cfg.output, label, extra)
        text += f"\nwrote {m} and {t}"
    return text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        print(execute(args))
    except (ConfigError, RunError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"eremu: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
