"""Command-line entry point: ``linesource --preset exp2_removal_3d --out results``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import LineSourceError
from .experiments import DEFAULT_ALPHAS, PRESETS, ExperimentConfig, levels_csv, run_experiment

log = logging.getLogger("linesource")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="linesource",
        description="Mixed finite element convergence studies for line and point sources.")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--levels", type=_int_list, default=None,
                   help="subdivisions per axis, e.g. '4,8,16' (default depends on preset)")
    p.add_argument("--alpha", type=_float_list, default=list(DEFAULT_ALPHAS),
                   help="weight exponents for exp1_standard_2d (default '0,0.5,1')")
    p.add_argument("--kappa", type=float, default=1.0, help="permeability (default 1)")
    p.add_argument("--network", type=Path, default=None,
                   help="network CSV (ax,ay,az,bx,by,bz,base,slope); required for custom")
    p.add_argument("--out", type=Path, default=None, help="directory for CSV tables and VTK files")
    p.add_argument("--solver", choices=("auto", "direct", "minres"), default="auto")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = ExperimentConfig(preset=args.preset, levels=tuple(args.levels or ()),
                                  alphas=tuple(args.alpha), kappa=args.kappa,
                                  network=args.network, out=args.out, method=args.solver)
        result = run_experiment(config)
    except LineSourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for name, table in result.tables.items():
        print(f"# {config.preset} {name}")
        print(table.to_csv(), end="")
    print(f"# {config.preset} levels")
    print(levels_csv(result), end="")
    for path in result.files:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
