"""``ecm-sim`` command line.

Exit codes: 0 success, 2 bad command line or config, 3 invalid sweep grid,
4 output not writable, 5 dataset missing or corrupt.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .datasets import DatasetError

EXIT_OK, EXIT_CONFIG, EXIT_GRID, EXIT_OUTPUT, EXIT_DATASET = 0, 2, 3, 4, 5

logger = logging.getLogger("ecmsim")


def _prepare_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write-test"
    probe.write_text("")
    probe.unlink()
    return out


def _single(config, out: Path, architecture: str):
    config = ex.replace(config, architecture=architecture, sweep="", grid=())
    result = ex.SweepResult(config)
    for repeat in range(config.repeats):
        accuracy, est = ex.run_once(
            config, np.random.SeedSequence(config.seed, spawn_key=(0, repeat)))
        result.rows.append((None, repeat, accuracy, 0.0))
        logger.info("repeat %d: accuracy %.4f", repeat, accuracy)
        if repeat == 0:
            if architecture == "simple":
                est.register_.save_csv(out / "register.csv")
                est.crossbar_.save_conductance_csv(out / "conductance.csv")
            elif architecture == "elm":
                ex.save_elm_bundle(est, out / "model")
    result.write(out / f"{architecture}.csv")
    _, mean, std = result.aggregates()[0]
    print(f"accuracy mean={mean:.4f} std={std:.4f} over {config.repeats} repeat(s)")


def cmd_simple(config, out, threads):
    _single(config, out, "simple")


def cmd_elm(config, out, threads):
    """ELM run; ``architecture = direct`` in the config runs the pixel-regression baseline."""
    _single(config, out, "direct" if config.architecture == "direct" else "elm")


def cmd_sweep(config, out, threads):
    if not config.sweep:
        raise ex.GridError("sweep needs 'sweep' and 'grid' in the config")
    result = ex.run_sweep(config, threads=threads)
    path = result.write(out / f"sweep_{config.sweep}.csv")
    for value, mean, std in result.aggregates():
        print(f"{config.sweep}={value:g}\taccuracy={mean:.4f} +/- {std:.4f}")
    print(f"wrote {path}")


def cmd_map(config, out, threads):
    """Imprint a crossbar per the config and dump every column as a 2-D map."""
    config = ex.replace(config, sweep="", grid=())
    train, _ = ex.load_task(config)
    _, est = ex.run_once(ex.replace(config, K=1),
                         np.random.SeedSequence(config.seed, spawn_key=(0, 0)))
    cb = est.crossbar_
    for column in range(cb.columns):
        ex.save_matrix_csv(out / f"map_col{column:03d}.csv",
                           ex.emit_conductance_map(cb, column, train.shape))
    cb.save_conductance_csv(out / "conductance.csv")
    print(f"wrote {cb.columns} conductance maps to {out}")


COMMANDS = {"simple": cmd_simple, "elm": cmd_elm, "sweep": cmd_sweep, "map": cmd_map}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ecm-sim", description="ECM memristive crossbar learning simulator")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--data-dir", help="MNIST directory (default: $ECMSIM_DATA_DIR)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        config = ex.load_config(args.config, seed=args.seed, data_dir=args.data_dir)
    except ex.GridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID
    except (ex.ConfigError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = _prepare_out(args.out)
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    try:
        COMMANDS[args.command](config, out, max(1, args.threads))
    except DatasetError as exc:
        print(f"error: dataset: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except ex.GridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID
    except ex.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
