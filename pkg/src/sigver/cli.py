"""Batch command line: ingest, extract, match, evaluate, selftest.

Every command returns a process exit code: 0 on success, 1 on any
domain/input error (printed to stderr), 2 for bad command line usage
(via argparse). Heavy stages print a short statistics block; timing goes
to the console only and never into result files.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .batch import run_evaluate, run_extract, run_ingest, run_match
from .cache import resolve_cache_root
from .config import RunConfig, load_config
from .errors import SigverError
from .selftest import run_selftest


def _config_from(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def _cmd_ingest(args) -> int:
    t0 = time.perf_counter()
    stats = run_ingest(args.manifest, resolve_cache_root(args.cache), _config_from(args))
    print(
        f"ingested dataset {stats.dataset}: {stats.users} users, "
        f"{stats.genuine} genuine, {stats.forgery} forgeries "
        f"[{time.perf_counter() - t0:.1f}s]"
    )
    return 0


def _cmd_extract(args) -> int:
    t0 = time.perf_counter()
    stats = run_extract(
        resolve_cache_root(args.cache),
        _config_from(args),
        jobs=args.jobs,
        debug_dir=args.debug_dir,
    )
    print(f"extracted artifacts for {stats.images} images")
    print("artifact  computed  cached")
    for kind in ("skeleton", "graph", "model"):
        print(f"{kind:<9} {stats.computed[kind]:8d} {stats.cached[kind]:7d}")
    for label, row in (("graph", stats.graph_nodes), ("model", stats.model_nodes)):
        print(
            f"{label} nodes: min {row[0]}  median {row[1]:g}  "
            f"mean {row[2]:.2f}  max {row[3]}"
        )
    print(f"[{time.perf_counter() - t0:.1f}s]")
    return 0


def _cmd_match(args) -> int:
    t0 = time.perf_counter()
    stats = run_match(
        resolve_cache_root(args.cache),
        _config_from(args),
        jobs=args.jobs,
        references=args.references,
    )
    print("system   computed  cached")
    for system in ("ged", "inkball"):
        print(
            f"{system:<8} {stats.pairs_computed[system]:8d} "
            f"{stats.pairs_cached[system]:7d}"
        )
    print(f"[{time.perf_counter() - t0:.1f}s]")
    return 0


def _cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    result = run_evaluate(
        resolve_cache_root(args.cache),
        _config_from(args),
        args.out,
        references=args.references,
        allow_degenerate=args.allow_degenerate,
    )
    sys.stdout.write((result.out_dir / "report.txt").read_text(encoding="utf-8"))
    print(f"[{time.perf_counter() - t0:.1f}s]")
    return 0


def _cmd_selftest(args) -> int:
    return run_selftest(seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigver",
        description="Offline signature verification: structural matching "
        "of skeleton graphs and part models over batch datasets.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=False):
        p.add_argument("--cache", help="cache directory (or set SIGVER_CACHE)")
        p.add_argument("--config", help="run configuration file")
        if jobs:
            p.add_argument(
                "--jobs",
                type=int,
                help="worker processes (0 = all cores); overrides config",
            )

    p = sub.add_parser("ingest", help="validate a dataset manifest into a cache")
    p.add_argument("--manifest", required=True, help="dataset manifest file")
    common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("extract", help="compute skeletons, graphs, and models")
    common(p, jobs=True)
    p.add_argument(
        "--debug-dir",
        help="also write per-image enhanced/binary/skeleton stage dumps here",
    )
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("match", help="fill the pairwise distance matrices")
    common(p, jobs=True)
    p.add_argument(
        "--references",
        type=int,
        help="genuine signatures per user reserved as references "
        "(default: manifest setting)",
    )
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("evaluate", help="score trials and write reports")
    common(p)
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--references", type=int, help="override manifest reference count")
    p.add_argument(
        "--allow-degenerate",
        action="store_true",
        help="continue with a tiny epsilon when reference sets are degenerate",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("selftest", help="cross-check against brute-force oracles")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SigverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
