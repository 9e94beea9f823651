"""Command-line entry point: ``asqgsk {keyrate,selection,reconcile,leakage,calibrate}``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError
from .config import FORMATS, QUANTIZERS, build_config, load_config
from .emit import emit
from .experiments import EXPERIMENTS, all_points_invalid, run_experiment
from .pipeline import MODES

log = logging.getLogger("asqgsk")

EXIT_OK, EXIT_CONFIG, EXIT_CALIBRATION = 0, 2, 3


def _float_list(text):
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _gamma(text):
    if text.lower() == "tied":
        return "tied"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--gamma takes a number or 'tied', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file; flags override it")
    common.add_argument("--m", type=int, help="bits per QAM symbol (even)")
    common.add_argument("--snr", type=_float_list, help="SNR points in dB, e.g. 20,25,30")
    common.add_argument("--ier", type=_float_list, help="target initial error rates, e.g. 0.1,0.01")
    common.add_argument("--blocks", type=int, help="coherence blocks per point")
    common.add_argument("--calib-blocks", type=int, help="blocks used for guard-band calibration")
    common.add_argument("--seed", type=int)
    common.add_argument("--mode", choices=MODES, help="CSR selection on blocks where both channels agree")
    common.add_argument("--quantizer", choices=QUANTIZERS, help="CSR quantizer")
    common.add_argument("--gamma", type=_gamma, help="estimation-error variance, or 'tied' to sigma^2")
    common.add_argument("--ldpc-matrix", help="alist file of the reconciliation code")
    common.add_argument("--max-iter", type=int, help="sum-product iterations")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--reproducible", action="store_true", default=None,
                        help="omit the timestamp line so equal seeds give identical files")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="asqgsk", description="Three-node group key generation experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return ap


def config_from_args(args):
    file_values = load_config(args.config) if args.config else {}
    flags = dict(m=args.m, snr_db=args.snr, target_ier=args.ier, n_blocks=args.blocks,
                 n_calib_blocks=args.calib_blocks, seed=args.seed, mode=args.mode,
                 quantizer=args.quantizer, ldpc_matrix=args.ldpc_matrix, max_iter=args.max_iter,
                 workers=args.workers, out=args.out, fmt=args.format, reproducible=args.reproducible)
    if args.gamma == "tied":
        file_values["gamma"] = None
    else:
        flags["gamma"] = args.gamma
    return build_config(file_values, **flags)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s on %d SNR point(s)", args.command, len(cfg.snr_db))
    rows = run_experiment(args.command, cfg)
    text = emit(rows, cfg.fmt, cfg.out, cfg.reproducible)
    if cfg.out is None:
        sys.stdout.write(text)
    if all_points_invalid(rows):
        print("calibration failed at every point", file=sys.stderr)
        return EXIT_CALIBRATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
