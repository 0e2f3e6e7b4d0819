"""Command line entry point.

Subcommands cover the full workflow: render synthetic sequences to disk,
track a sequence directory, score a prediction file, and run the whole
benchmark with tables and figures.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, format_config, load_config
from .pipeline import track_sequence
from .report import (
    run_suite,
    sequence_render_seed,
    write_run_log,
    write_single_report,
)
from .seqio import (
    GROUNDTRUTH_FILE,
    read_groundtruth,
    read_predictions,
    read_sequence,
    write_predictions,
    write_sequence,
)
from .simulator import render_sequence, standard_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longtrack",
        description="Long-term single-object tracking toolkit.",
    )
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="print the default configuration template and exit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="render synthetic sequences to disk")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--spec", metavar="NAME", help="one named scenario")
    group.add_argument(
        "--suite", action="store_true", help="every scenario in the benchmark"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("track", help="track a sequence directory")
    p.add_argument("--sequence", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--config", metavar="FILE", help="configuration overrides")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="score a prediction file")
    p.add_argument("--pred", required=True, metavar="FILE")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--gt", metavar="FILE", help="ground-truth box file")
    group.add_argument(
        "--sequence", metavar="DIR", help="sequence directory holding ground truth"
    )
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("suite", help="run the full benchmark")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", metavar="FILE", help="configuration overrides")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-plots", action="store_true")
    return parser


def _load(config_path: str | None) -> RunConfig:
    return load_config(config_path) if config_path else RunConfig()


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    if args.suite:
        for i, spec in enumerate(standard_suite()):
            seq = render_sequence(spec, seed=sequence_render_seed(args.seed, i))
            write_sequence(out / spec.name, seq)
            print(f"{spec.name}: {len(seq)} frames")
        return 0
    specs = {s.name: s for s in standard_suite()}
    if args.spec not in specs:
        names = ", ".join(sorted(specs))
        raise ValueError(f"unknown scenario {args.spec!r}; choose from: {names}")
    seq = render_sequence(specs[args.spec], seed=args.seed)
    write_sequence(out, seq)
    print(f"{args.spec}: {len(seq)} frames")
    return 0


def _cmd_track(args) -> int:
    frames, boxes, _meta = read_sequence(args.sequence)
    if not boxes or boxes[0] is None:
        raise ValueError("sequence has no first-frame ground-truth box to start from")
    config = _load(args.config)
    rng = np.random.default_rng(args.seed)
    preds, recs = track_sequence(frames, boxes[0], config, rng=rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_predictions(out / "predictions.txt", preds)
    write_run_log(out / "run_log.csv", recs)
    present = sum(1 for p in preds if p.box is not None)
    print(f"tracked {len(preds)} frames ({present} reported present)")
    return 0


def _cmd_evaluate(args) -> int:
    preds = read_predictions(args.pred)
    if args.gt:
        gt = read_groundtruth(args.gt)
    else:
        gt = read_groundtruth(Path(args.sequence) / GROUNDTRUTH_FILE)
    if len(preds) != len(gt):
        raise ValueError(
            f"prediction/ground-truth length mismatch: {len(preds)} vs {len(gt)}"
        )
    m = write_single_report(args.out, preds, gt, plots=not args.no_plots)
    print(
        f"best_f={m.best_f:.4f} (tau={m.best_tau:.4f}) pr={m.pr:.4f} re={m.re:.4f} "
        f"auc={m.auc:.4f} precision={m.precision:.4f} "
        f"false_presence={m.false_presence:.4f}"
    )
    return 0


def _cmd_suite(args) -> int:
    config = _load(args.config)
    results = run_suite(
        args.out,
        seed=args.seed,
        config=config,
        jobs=args.jobs,
        plots=not args.no_plots,
    )
    for r in results:
        m = r.metrics
        print(
            f"{r.name:24s} auc={m.auc:.4f} best_f={m.best_f:.4f} "
            f"recaptured={m.recaptured}/{m.reappearances}"
        )
    mean_auc = float(np.mean([r.metrics.auc for r in results]))
    mean_f = float(np.mean([r.metrics.best_f for r in results]))
    print(f"{'mean':24s} auc={mean_auc:.4f} best_f={mean_f:.4f}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "track": _cmd_track,
    "evaluate": _cmd_evaluate,
    "suite": _cmd_suite,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        print(format_config(RunConfig()), end="")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
