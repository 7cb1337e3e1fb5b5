# cli.py
#
# Command-line front end.  Subcommands: thermal-density, photoassociate,
# resonances, partition, purity-scan.  Exit codes: 0 success, 2 config
# error, 3 numeric abort, 4 non-converged truncation.

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .curves import CurveFormatError
from .observables import ProjectionResidualError
from .propagator import NormDriftError, SpectralBoundsError
from .thermal import EmptyEnsembleError, TruncationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_TRUNCATION = 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hotpa",
        description="Femtosecond two-photon photoassociation of a hot "
                    "thermal gas: thermal random-phase ensembles, pulse "
                    "propagation, purity and coherence observables.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=None, help="override ensemble.seed")
        p.add_argument("--deterministic", action="store_true",
                       help="deterministic reduction order and manifests")
        p.add_argument("--method", default=None,
                       choices=["grid", "eigen", "gaussian",
                                "gaussian-projected", "gaussian-propagated"],
                       help="override ensemble.method")
        p.add_argument("--filter", default=None,
                       choices=["all", "no-bound", "no-bound-no-resonance"],
                       help="override ensemble.filter")
        p.add_argument("--out", default=None, help="output directory")

    for name, help_text in [
            ("thermal-density", "initial thermal pair density table"),
            ("photoassociate", "pump-pulse run: yields, purity, coherence"),
            ("resonances", "shape-resonance scan over partial waves"),
            ("partition", "box partition function vs classical closed form"),
            ("purity-scan", "purity and coherence vs pulse intensity")]:
        p = sub.add_parser(name, help=help_text)
        common(p)
        if name == "purity-scan":
            p.add_argument("--intensities", default="1e10,1e11,1e12,5e12,2e13",
                           help="comma-separated peak intensities in W/cm^2")
    return ap


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.ensemble.seed = args.seed
    if args.deterministic:
        cfg.outputs.deterministic = True
    if args.method is not None:
        cfg.ensemble.method = args.method
    if args.filter is not None:
        cfg.ensemble.filter = args.filter
    if args.out is not None:
        cfg.outputs.directory = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (ConfigError, CurveFormatError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from . import runs
    try:
        if args.command == "thermal-density":
            res = runs.run_thermal_density(cfg)
        elif args.command == "photoassociate":
            res = runs.run_photoassociate(cfg)
        elif args.command == "resonances":
            res = runs.run_resonance_scan(cfg)
        elif args.command == "partition":
            res = runs.run_partition(cfg)
        elif args.command == "purity-scan":
            intensities = [float(s) for s in args.intensities.split(",") if s]
            res = runs.run_purity_scan(cfg, intensities)
        else:  # pragma: no cover - argparse enforces choices
            return EXIT_CONFIG
    except (ConfigError, CurveFormatError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralBoundsError, NormDriftError, FloatingPointError) as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TruncationError, ProjectionResidualError, EmptyEnsembleError) as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    print(f"wrote {res['outdir']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
