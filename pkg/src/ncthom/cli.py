"""Command line driver: ``verify [SUITE ...] [options]``.

Exit status is 0 when every requested suite passes, 1 when a check fails
and 2 for configuration or usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor

from .config import GROUP_ORDERS, SUITE_NAMES, ConfigError, RunConfig, load_config
from .finite_group import CyclicAction
from .orbifold import hp_report
from .report import SuiteResult, config_hash, emit_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _group(text: str) -> int:
    t = text.strip().upper()
    k = int(t[1:]) if t.startswith("Z") else int(t)
    if k not in GROUP_ORDERS:
        raise argparse.ArgumentTypeError(f"unsupported group {text!r}; choose from Z1, Z2, Z3, Z4, Z6")
    return k


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="verify", description="Run numerical verification suites.")
    p.add_argument("suites", nargs="*", metavar="SUITE", help=f"suite names or 'all' ({', '.join(SUITE_NAMES)})")
    p.add_argument("--suite", action="append", default=[], dest="extra", metavar="NAME", help="repeatable")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--grid-L", type=float, dest="grid_L")
    p.add_argument("--grid-h", type=float, dest="grid_h")
    p.add_argument("--group", type=_group, action="append", metavar="Zk", help="restrict to these groups")
    p.add_argument("--refine", type=int)
    p.add_argument("--n", type=int, help="dimension for the symbol decay suite")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def resolve(args) -> tuple[RunConfig, list]:
    cfg = load_config(args.config)
    names = list(args.suites) + list(args.extra)
    if not names or "all" in names:
        names = list(cfg.suites) if not names else list(SUITE_NAMES)
    unknown = [s for s in names if s not in SUITE_NAMES]
    if unknown:
        raise ConfigError(f"unknown suite(s): {', '.join(unknown)}")
    names = list(dict.fromkeys(names))
    groups = tuple(sorted(set(args.group))) if args.group else None
    cfg = cfg.with_overrides(grid_L=args.grid_L, grid_h=args.grid_h, refine=args.refine, n=args.n, groups=groups)
    return cfg, names


def _threads() -> int:
    raw = os.environ.get("NCT_THREADS", "")
    try:
        return max(1, int(raw)) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"NCT_THREADS must be an integer, got {raw!r}")


def _safe_run(name: str, cfg: RunConfig) -> SuiteResult:
    from .suites import run_suite
    try:
        return run_suite(name, cfg)
    except Exception as exc:  # a crashing suite is a failed suite
        return SuiteResult(name, [], error=f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")


def run_all(names, cfg: RunConfig, threads: int = 1) -> list:
    """Run suites in parallel; results come back in the requested order."""
    workers = max(1, min(threads, len(names)))
    if workers == 1:
        return [_safe_run(n, cfg) for n in names]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: _safe_run(n, cfg), names))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg, names = resolve(args)
        threads = _threads()
    except ConfigError as exc:
        print(f"verify: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    results = run_all(names, cfg, threads)
    for r in results:
        status = "PASS" if r.passed else ("ERROR" if r.error else "FAIL")
        print(f"{status:5s} {r.name} ({r.seconds:.1f} s)", file=sys.stderr)
        for rec in r.records:
            if not rec.passed:
                print(f"      failed: {rec.lemma_id}", file=sys.stderr)
        if r.error:
            print(r.error, file=sys.stderr)

    digest = config_hash(cfg.canonical())
    try:
        if any(r.records for r in results):
            text = emit_report(results, args.format, args.out, digest)
            if args.out is None:
                if names == ["hp-dims"] and args.format == "json":
                    reps = [hp_report(CyclicAction.standard(k)) for k in cfg.groups]
                    sys.stdout.write(json.dumps(reps[0] if len(reps) == 1 else reps, sort_keys=True, indent=2) + "\n")
                else:
                    sys.stdout.write(text)
    except OSError as exc:
        print(f"verify: cannot write report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
