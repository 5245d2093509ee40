"""Command-line entry point (``isardip``).

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver did not
converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io as fio
from .dip import DipConfig, EarlyStop
from .harness import METHODS, ConfigError, complete, format_summary, load_config, run_grid
from .lowrank import SolverConfig
from .metrics import add_noise, score_images, snr_db
from .neural import NetworkConfig
from .radar import default_params, random_scene, rd_image, simulate_echo, to_db_image
from .sampling import KINDS, apply_mask, full_mask, gen_mask

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOCONV = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _channels(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad channel list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isardip", description="ISAR echo completion and imaging.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="random point-scatterer scene -> CISR echo")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--rows", type=int, default=64, help="aperture (angle) samples")
    s.add_argument("--cols", type=int, default=64, help="frequency samples")
    s.add_argument("--scatterers", type=int, default=5)
    s.add_argument("--extent", type=int, default=None,
                   help="confine scatterers to +/- extent cells around the origin")
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("mask", help="generate a sampling mask (IMSK)")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--kind", choices=KINDS, default="pixel")
    s.add_argument("--ratio", type=float, required=True, help="missing fraction in [0, 1)")
    s.add_argument("--seed", type=int, default=0)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--like", help="take the shape from this CISR file")
    g.add_argument("--shape", type=int, nargs=2, metavar=("ROWS", "COLS"))

    s = sub.add_parser("complete", help="fill the unobserved entries of an echo")
    s.add_argument("input", help="CISR echo (entries off the mask are ignored)")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--mask", help="IMSK file; omit to treat every entry as observed")
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=None)
    s.add_argument("--tol", type=float, default=1e-5)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--channels", type=_channels, default=None,
                   help="comma-separated DIP widths, e.g. 32,16,16,16,16,32")
    s.add_argument("--no-early-stop", action="store_true")

    s = sub.add_parser("image", help="range-Doppler image of an echo as PGM")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--top-db", type=float, default=20.0)
    s.add_argument("--no-shift", action="store_true", help="keep zero Doppler at the corner")

    s = sub.add_parser("metrics", help="score an estimate against a reference echo")
    s.add_argument("reference")
    s.add_argument("estimate")

    s = sub.add_parser("experiment", help="run a configured grid")
    s.add_argument("--config", required=True)
    s.add_argument("--single-thread", action="store_true",
                   help="sequential and byte-reproducible (runtime_s written as 0)")
    s.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("noise", help="add complex Gaussian noise at a given SNR")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--snr-db", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    return p


def _cmd_simulate(a) -> int:
    scene = random_scene(default_params(a.rows, a.cols), a.scatterers, a.seed, a.extent)
    fio.save_matrix(simulate_echo(scene), a.output)
    return EXIT_OK


def _cmd_mask(a) -> int:
    rows, cols = fio.load_matrix(a.like).shape if a.like else a.shape
    fio.save_mask(gen_mask(a.kind, a.ratio, rows, cols, a.seed), a.output)
    return EXIT_OK


def _cmd_complete(a) -> int:
    M = fio.load_matrix(a.input)
    mask = fio.load_mask(a.mask) if a.mask else full_mask(*M.shape)
    if mask.shape != M.shape:
        raise ValueError(f"dimension mismatch: echo {M.shape}, mask {mask.shape}")
    solver = SolverConfig(tol=a.tol, **({"max_iters": a.max_iters} if a.max_iters else {}))
    net = NetworkConfig(**({"channels": a.channels, "depth": len(a.channels)} if a.channels else {}))
    dip = DipConfig(net=net, lr=a.lr, seed=a.seed,
                    early_stop=EarlyStop(enabled=not a.no_early_stop),
                    **({"max_iters": a.max_iters} if a.max_iters else {}))
    Z, its, conv, _ = complete(a.method, apply_mask(M, mask), mask, solver, dip, a.seed)
    fio.save_matrix(Z, a.output)
    print(f"{a.method}: {its} iterations, converged={conv}")
    if a.method in ("nnm", "ialm") and not conv:
        print("solver did not converge", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def _cmd_image(a) -> int:
    img = rd_image(fio.load_matrix(a.input))
    if not a.no_shift:
        img = np.fft.fftshift(img)
    fio.write_pgm(fio.db_to_gray(to_db_image(img, a.top_db), a.top_db), a.output)
    return EXIT_OK


def _cmd_metrics(a) -> int:
    ref, est = fio.load_matrix(a.reference), fio.load_matrix(a.estimate)
    out = score_images(rd_image(ref), rd_image(est))
    out["snr_db"] = snr_db(ref, est)
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _cmd_experiment(a) -> int:
    cfg = load_config(a.config)
    _, summary = run_grid(cfg, jobs=1 if a.single_thread else a.jobs,
                          deterministic=a.single_thread)
    print(format_summary(summary), end="")
    return EXIT_OK


def _cmd_noise(a) -> int:
    fio.save_matrix(add_noise(fio.load_matrix(a.input), a.snr_db, a.seed), a.output)
    return EXIT_OK


_COMMANDS = {"simulate": _cmd_simulate, "mask": _cmd_mask, "complete": _cmd_complete,
             "image": _cmd_image, "metrics": _cmd_metrics, "experiment": _cmd_experiment,
             "noise": _cmd_noise}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"isardip: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.cmd](args)
    except ConfigError as exc:
        print(f"isardip: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"isardip: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
