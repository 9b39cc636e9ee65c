"""Command-line entry point.

Subcommands mirror the pipeline stages: synth, build-dataset, train-seg,
train-lm, eval, report. Exit codes: 0 success, 1 usage error, 2 data
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config, with_overrides
from .errors import DataError, NumericError, UsageError
from . import pipeline


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcgkit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file (defaults apply if omitted)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--force", action="store_true", help="overwrite a non-empty output dir")

    p = sub.add_parser("synth", help="generate the synthetic corpus")
    common(p)

    p = sub.add_parser("build-dataset", help="split patients and build MC items")
    common(p)

    for name in ("train-seg", "train-lm"):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} on the built dataset")
        common(p)
        p.add_argument("--dataset-dir", required=True, help="directory from build-dataset")
        p.add_argument("--resume", action="store_true", help="continue from the checkpoint")

    p = sub.add_parser("eval", help="score a dataset and write predictions + report")
    common(p)
    p.add_argument("--lm", required=True, help="audio-LM checkpoint")
    p.add_argument("--segmenter", help="segmenter checkpoint (required for WS)")
    p.add_argument("--mode", choices=("NS", "WS"), default="NS")
    p.add_argument("--dataset", choices=pipeline.EVAL_DATASETS, default="circor_test")
    p.add_argument("--dataset-dir", help="build-dataset output (for circor_test)")

    p = sub.add_parser("report", help="merge eval reports into the final tables")
    common(p)
    p.add_argument("--reports", nargs="+", required=True, help="report.json files")

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config = load_config(args.config)
    config = with_overrides(config, seed=args.seed, out_dir=None)

    if args.command == "synth":
        out = pipeline.run_synth(config, out_dir=args.out, force=args.force)
    elif args.command == "build-dataset":
        out = pipeline.run_build_dataset(config, out_dir=args.out, force=args.force)
    elif args.command == "train-seg":
        out = pipeline.run_train_seg(
            config, args.dataset_dir, out_dir=args.out,
            resume=args.resume, force=args.force,
        )
    elif args.command == "train-lm":
        out = pipeline.run_train_lm(
            config, args.dataset_dir, out_dir=args.out,
            resume=args.resume, force=args.force,
        )
    elif args.command == "eval":
        out = pipeline.run_eval(
            config,
            lm_ckpt=args.lm,
            mode=args.mode,
            dataset=args.dataset,
            dataset_dir=args.dataset_dir,
            segmenter_ckpt=args.segmenter,
            out_dir=args.out,
            force=args.force,
        )
    elif args.command == "report":
        out = pipeline.run_report(args.reports, config, out_dir=args.out, force=args.force)
    else:  # pragma: no cover - argparse enforces the choices
        raise UsageError(f"unknown command {args.command!r}")
    print(out)
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
