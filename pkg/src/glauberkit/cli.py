"""Command line: ``glauberkit <experiment> [--config PATH] [--seed S] [--replicas N] [--out DIR]``.

Exit codes: 0 all checks passed, 2 a check failed, 3 setup error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ExperimentConfig
from .errors import GlauberKitError
from .experiments import run_experiment
from .outputs import emit_outputs

EXIT_OK, EXIT_ASSERT, EXIT_SETUP = 0, 2, 3

log = logging.getLogger("glauberkit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glauberkit", description="Glauber dynamics experiments")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML experiment config")
        sp.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
        sp.add_argument("--replicas", type=int, help="number of replicas (overrides the config)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != args.experiment:
            raise GlauberKitError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    else:
        cfg = ExperimentConfig(args.experiment)
    d = cfg.to_dict()
    for k in ("seed", "replicas", "out"):
        v = getattr(args, k)
        if v is not None:
            d[k] = v
    return ExperimentConfig.from_mapping(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        result = run_experiment(cfg)
        files = emit_outputs(result, cfg.echo(), cfg.out)
    except (GlauberKitError, OSError, ValueError) as e:
        print(f"setup error: {e}", file=sys.stderr)
        return EXIT_SETUP
    for note in result.notes:
        print(f"note: {note}")
    for c in result.checks:
        print(f"{'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    print(f"wrote {len(files)} files to {cfg.out}")
    return EXIT_OK if result.ok else EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
