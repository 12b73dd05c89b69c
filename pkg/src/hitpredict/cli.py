"""Command-line front end.

Exit codes: 0 success, 1 validation/data error, 2 environment/IO error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import workflow
from .config import RunConfig
from .errors import HitPredictError

def _common(suppress=False):
    # global flags are accepted before or after the subcommand; the copy on
    # each subcommand uses SUPPRESS so it cannot reset a value given earlier
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="run configuration file (key = value lines)", **kw)
    p.add_argument("--seed", type=int, help="master seed (config key: seed)", **kw)
    p.add_argument("--out", help="output directory (config key: paths.out)", **kw)
    p.add_argument("--threads", type=int, help="worker threads (config key: threads)", **kw)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key; repeatable", **kw)
    p.add_argument("-v", "--verbose", action="store_true", **kw)
    return p


def build_parser():
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(prog="hitpredict", description=__doc__.splitlines()[0],
                                     parents=[_common()])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-fixtures", parents=[common],
                       help="record the synthetic offline fixture set")
    p.add_argument("--dir", help="fixture directory (default: paths.fixtures)")

    p = sub.add_parser("ingest", parents=[common], help="acquire tracks into the dataset CSV")
    p.add_argument("--fixtures", help="fixture directory (config key: paths.fixtures)")
    p.add_argument("--mode", choices=["replay", "record", "live"], help="transport backend")

    p = sub.add_parser("prepare", parents=[common], help="cleanup, balance and split the dataset")
    p.add_argument("--dataset", help="tracks CSV (config key: paths.dataset)")

    for name, text in [("pca", "fit PCA on the training split and report variance"),
                       ("train", "train base and grid-searched models"),
                       ("evaluate", "score saved models on validation and test sets"),
                       ("report", "collect reports into report.csv and charts")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--dataset", help="tracks CSV (config key: paths.dataset)")

    p = sub.add_parser("predict", parents=[common], help="classify tracks with a saved model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--output", type=Path, help="predictions CSV (default: stdout)")
    return parser


def resolve_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    pairs = {}
    for item in args.set or []:
        if "=" not in item:
            raise HitPredictError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    flags = {
        "seed": args.seed, "paths.out": args.out, "threads": args.threads,
        "paths.fixtures": getattr(args, "fixtures", None), "ingest.mode": getattr(args, "mode", None),
        "paths.dataset": getattr(args, "dataset", None),
    }
    pairs.update({k: str(v) for k, v in flags.items() if v is not None})
    return cfg.override(pairs)


def dispatch(args, cfg):
    cmd = args.command
    if cmd == "make-fixtures":
        return workflow.run_make_fixtures(cfg, args.dir)
    if cmd == "ingest":
        return workflow.run_ingest(cfg)
    if cmd in ("prepare", "train", "pca", "evaluate") and not cfg.dataset.exists():
        raise FileNotFoundError(f"dataset not found: {cfg.dataset}")
    if cmd == "prepare":
        return workflow.run_prepare(cfg)
    if cmd == "pca":
        return workflow.run_pca(cfg)
    if cmd == "train":
        return workflow.run_train(cfg)
    if cmd == "evaluate":
        return workflow.run_evaluate(cfg)
    if cmd == "report":
        reports = workflow.run_report(cfg)
        return [r.row() for r in reports]
    if cmd == "predict":
        if not args.model.exists():
            raise FileNotFoundError(f"model file not found: {args.model}")
        if not args.input.exists():
            raise FileNotFoundError(f"input file not found: {args.input}")
        output = args.output or Path("/dev/stdout")
        info = workflow.run_predict(args.model, args.input, output)
        return info if args.output else None
    raise AssertionError(cmd)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        result = dispatch(args, cfg)
    except HitPredictError as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 2
    if result is not None:
        print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
