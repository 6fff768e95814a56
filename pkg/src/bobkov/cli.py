"""Command line entry point: ``bobkov <subcommand> --config PATH [--seed N] [--out DIR]``.

The thread count of the numerical backends can be capped with the
``BOBKOV_THREADS`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

SUBCOMMANDS = ("deficit", "perimeter", "fit", "verify", "stability")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _apply_thread_override() -> int | None:
    raw = os.environ.get("BOBKOV_THREADS")
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise SystemExit("BOBKOV_THREADS must be a positive integer")
    for var in THREAD_VARS:
        os.environ[var] = str(n)
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bobkov", description="Gaussian isoperimetric deficits and stability experiments")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = _apply_thread_override()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    # numerical modules are imported after the thread override is in place
    from . import experiments as E
    from . import ledger as L

    try:
        cfg = E.ExperimentConfig.load(args.config)
    except (OSError, json.JSONDecodeError, E.ConfigError, TypeError) as exc:
        print(f"bobkov: bad config: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if threads is not None:
        cfg = replace(cfg, workers=threads)
    out = args.out or cfg.out

    try:
        if args.subcommand == "deficit":
            rep = E.cmd_deficit(cfg, out)
            print(f"delta = {rep['delta']:.6g} (error {rep['error']:.2g})")
        elif args.subcommand == "perimeter":
            rep = E.cmd_perimeter(cfg, out)
            print(f"minkowski {rep['minkowski']['value']:.6g}, semigroup {rep['semigroup']['value']:.6g}, "
                  f"agree={rep['agree']}")
        elif args.subcommand == "fit":
            rep = E.cmd_fit(cfg, out)
            print(f"{rep['kind']}: a={rep['a']} b={rep['b']} objective={rep['objective']:.6g}")
        elif args.subcommand == "verify":
            results, _ = E.cmd_verify(cfg, out)
            bad = L.failures(results)
            for r in bad:
                print(f"FAIL {r.name} [{r.input}] margin={r.margin:.3g} tolerance={r.tolerance:.3g}")
            print(f"{len(results)} checks, {len(bad)} assert failures")
            return 1 if bad else 0
        else:
            curve = E.cmd_stability(cfg, out)
            s = curve.summary()
            print(f"{s['family']}: {s['points']} points, slope {s['slope']:.4f} "
                  f"[{s['slope_ci95'][0]:.4f}, {s['slope_ci95'][1]:.4f}], spearman {s['spearman']:.4f}, "
                  f"bound holds={s['bound_holds']}")
    except E.ConfigError as exc:
        print(f"bobkov: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
