"""Command-line driver.

Subcommands map onto the pipeline stages plus the lattice histogram:

    beldec [--config cfg.json] [--seed N] [--out-dir DIR] <command>

Exit codes: 0 success, 2 configuration error (bad config, unknown rule,
missing stage input), 3 numeric failure (total conflict, degenerate
training scores).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .belief import TotalConflictError
from .fusion import DegenerateScoreError
from .harness import (
    RULE_NAMES,
    ConfigError,
    lattice_stats_csv,
    load_config,
    run_pipeline,
    stage_decide,
    stage_features,
    stage_fit,
    stage_fuse,
    stage_gen,
    stage_report,
    stage_score,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beldec",
        description="Belief-decision texture classification experiments.",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument(
        "--out-dir", default="beldec_out", metavar="DIR", help="artifact directory"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", help="render the synthetic imagettes")
    sub.add_parser("features", help="extract co-occurrence features")
    sub.add_parser("fit", help="fit the pairwise scorer and the mass model")
    sub.add_parser("score", help="score the test and hetero splits")
    sub.add_parser("fuse", help="fuse pairwise masses per observation")
    decide = sub.add_parser("decide", help="apply the decision rules")
    decide.add_argument(
        "--rule",
        action="append",
        metavar="NAME",
        help=f"restrict to a rule (repeatable); one of {', '.join(RULE_NAMES)}",
    )
    sub.add_parser("report", help="write confusion tables and the summary")
    sub.add_parser("pipeline", help="run every stage in order")
    stats = sub.add_parser("lattice-stats", help="lattice cardinality histogram")
    stats.add_argument("--classes", type=int, required=True, metavar="N")
    stats.add_argument("--out", metavar="PATH", help="output CSV (default in out-dir)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "gen":
            stage_gen(cfg, out)
        elif args.command == "features":
            stage_features(cfg, out)
        elif args.command == "fit":
            stage_fit(cfg, out)
        elif args.command == "score":
            stage_score(cfg, out)
        elif args.command == "fuse":
            stage_fuse(cfg, out)
        elif args.command == "decide":
            rules = args.rule
            if rules is None and cfg.rule is not None:
                rules = [cfg.rule]
            stage_decide(cfg, out, rules)
        elif args.command == "report":
            stage_report(cfg, out)
        elif args.command == "pipeline":
            run_pipeline(cfg, out)
        elif args.command == "lattice-stats":
            target = args.out or out / f"lattice_stats_{args.classes}.csv"
            try:
                lattice_stats_csv(args.classes, target)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"beldec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TotalConflictError, DegenerateScoreError) as exc:
        print(f"beldec: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
