"""Seeded parameter sweeps over the simulated learning systems, written as CSV.

A run is described by a flat ``key = value`` config file (see
:class:`ExperimentConfig` for the keys).  Each (grid point, repeat) pair gets
its own seed ``SeedSequence(seed, spawn_key=(point, repeat))``; appending
grid points or repeats therefore never changes existing rows.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .datasets import PatternSet, add_noise, load_mnist, make_glyphs, mnist_dir
from .elm import CrossbarELMClassifier, DirectRidgeClassifier
from .signature import SignatureClassifier

TASKS = ("glyphs", "mnist")
ARCHITECTURES = ("simple", "elm", "direct")

# Maps sweep axis names onto config fields.
AXES = {"dt": "dt", "n": "n", "cv": "cv", "M": "M", "N": "N", "K": "K",
        "noise": "noise", "T": "T", "lam": "lam", "J": "J"}


class ConfigError(ValueError):
    """Malformed config file or invalid parameter values."""


class GridError(ConfigError):
    """Sweep axis or grid values are invalid."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a sweep.

    ``lam`` and ``current_scale`` accept ``None`` (written ``auto``) for the
    data-derived defaults.  ``J`` is the number of output columns of the
    simple architecture (defaults to the class count).
    """

    task: str = "glyphs"
    architecture: str = "simple"
    first_layer: str = "imprinted"
    sweep: str = ""
    grid: tuple = ()
    repeats: int = 1
    seed: int = 0
    n: int = 45
    dt: float = 2e-4
    T: float = 1.0
    N: int = 100
    K: int = 100
    M: int = 100
    J: int | None = None
    lam: float | None = None
    noise: float = 0.1
    cv: float = 0.0
    gain: float = 10.0
    offset_range: float = 1.0
    current_scale: float | None = None
    threshold: int = 128
    data_dir: str | None = None
    record_wall_time: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}")
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"architecture must be one of {ARCHITECTURES}")
        if self.first_layer not in ("imprinted", "random"):
            raise ConfigError("first_layer must be 'imprinted' or 'random'")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.sweep:
            if self.sweep not in AXES:
                raise GridError(f"unknown sweep axis {self.sweep!r}; choose from {sorted(AXES)}")
            if not self.grid:
                raise GridError("sweep axis given but grid is empty")
            if any(not math.isfinite(v) for v in self.grid):
                raise GridError("grid values must be finite")
        elif self.grid:
            raise GridError("grid given without a sweep axis")
        return self

    def points(self):
        """Per-point configs, in grid order."""
        if not self.sweep:
            return [(None, self)]
        name = AXES[self.sweep]
        kind = _field_types()[name]
        out = []
        for value in self.grid:
            try:
                out.append((value, replace(self, **{name: _coerce(kind, value)}),))
            except (TypeError, ValueError) as exc:
                raise GridError(f"bad grid value {value!r} for {name}: {exc}") from None
        return out

    def to_lines(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "grid":
                text = ",".join(repr(float(v)) for v in value)
            elif value is None:
                text = "auto"
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{f.name}={text}")
        return lines


def _field_types():
    return {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(kind: str, value):
    if value is None:
        return None
    if "None" in kind and str(value).strip().lower() in ("auto", "none", ""):
        return None
    if kind.startswith("int"):
        as_float = float(value)
        if not as_float.is_integer():
            raise ValueError(f"{value!r} is not an integer")
        return int(as_float)
    if kind.startswith("float"):
        return float(value)
    if kind == "bool":
        text = str(value).strip().lower()
        if text not in ("1", "0", "true", "false", "yes", "no"):
            raise ValueError(f"{value!r} is not a boolean")
        return text in ("1", "true", "yes")
    if kind == "tuple":
        return tuple(float(v) for v in str(value).split(",") if v.strip())
    return str(value).strip()


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines ('#' starts a comment)."""
    kinds = _field_types()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(kinds[key], value)
        except ValueError as exc:
            exc_type = GridError if key == "grid" else ConfigError
            raise exc_type(f"line {lineno}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values).validate()


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)


# -- data ------------------------------------------------------------------

_DATA_CACHE: dict = {}


def load_task(config: ExperimentConfig):
    """``(train, test)`` pattern sets for the config's task (MNIST is cached)."""
    if config.task == "glyphs":
        glyphs = make_glyphs()
        return glyphs, glyphs
    root = mnist_dir(config.data_dir)
    key = (str(root), config.threshold)
    if key not in _DATA_CACHE:
        _DATA_CACHE[key] = (load_mnist(root, "train", config.threshold),
                            load_mnist(root, "test", config.threshold))
    return _DATA_CACHE[key]


def _draw(patterns: PatternSet, count: int, rng):
    """``count`` clean images with labels: uniform class draws for the glyph
    prototypes, a random subset (or everything) for a real dataset."""
    if len(patterns) == patterns.n_classes:
        labels = rng.integers(patterns.n_classes, size=count)
        return patterns.images[labels], labels
    if count > len(patterns):
        raise ConfigError(f"asked for {count} items, {patterns.split} split has {len(patterns)}")
    if count == len(patterns):
        return patterns.images, patterns.labels
    idx = np.sort(rng.choice(len(patterns), size=count, replace=False))
    return patterns.images[idx], patterns.labels[idx]


def make_estimator(config: ExperimentConfig, random_state):
    if config.architecture == "simple":
        return SignatureClassifier(
            n_presentations=config.n, dt=config.dt, wait_time=config.T,
            noise=config.noise, cv=config.cv, n_columns=config.J,
            random_state=random_state)
    if config.architecture == "elm":
        return CrossbarELMClassifier(
            n_hidden=config.M, first_layer=config.first_layer,
            n_presentations=config.n, dt=config.dt, wait_time=config.T,
            noise=config.noise, cv=config.cv, gain=config.gain,
            offset_range=config.offset_range, current_scale=config.current_scale,
            alpha=config.lam, random_state=random_state)
    return DirectRidgeClassifier(noise=config.noise, alpha=config.lam,
                                 random_state=random_state)


def run_once(config: ExperimentConfig, seed: np.random.SeedSequence):
    """One simulation; returns ``(accuracy, fitted estimator)``."""
    if config.N < 1 or config.K < 1:
        raise ConfigError("N and K must be >= 1")
    train, test = load_task(config)
    data_ss, model_ss, test_ss = seed.spawn(3)
    data_rng = np.random.default_rng(data_ss)
    X, y = _draw(train, config.N, data_rng)
    X_test, y_test = _draw(test, config.K, data_rng)
    est = make_estimator(config, model_ss).fit(X, y)
    X_test = add_noise(X_test, config.noise, np.random.default_rng(test_ss))
    return float(est.score(X_test, y_test)), est


def _job(args):
    point, repeat, config = args
    start = time.perf_counter()
    seed = np.random.SeedSequence(config.seed, spawn_key=(point, repeat))
    accuracy, _ = run_once(config, seed)
    return point, repeat, accuracy, time.perf_counter() - start


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)  # (sweep_value, repeat, accuracy, wall_seconds)

    def aggregates(self):
        """``(sweep_value, mean, std)`` per grid point, std with ddof=0."""
        out = {}
        for value, _, acc, _ in self.rows:
            out.setdefault(value, []).append(acc)
        return [(v, float(np.mean(a)), float(np.std(a))) for v, a in out.items()]

    def mean(self, value=None) -> float:
        return next(m for v, m, _ in self.aggregates() if value is None or v == value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.config.to_lines():
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sweep_value", "repeat", "accuracy", "wall_seconds"])
        for value, repeat, acc, wall in self.rows:
            writer.writerow([_fmt(value), repeat, repr(acc),
                             repr(round(wall, 6)) if self.config.record_wall_time else ""])
        for value, mean, std in self.aggregates():
            writer.writerow([_fmt(value), "mean", repr(mean), ""])
            writer.writerow([_fmt(value), "std", repr(std), ""])
        return buf.getvalue()

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path


def _fmt(value):
    return "" if value is None else repr(float(value))


def run_sweep(config: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Run every (grid point, repeat); rows come back sorted by (point, repeat)."""
    config.validate()
    points = config.points()
    jobs = [(p, r, cfg) for p, (_, cfg) in enumerate(points) for r in range(config.repeats)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(job) for job in jobs]
    results.sort(key=lambda r: (r[0], r[1]))
    rows = [(points[p][0], r, acc, wall) for p, r, acc, wall in results]
    return SweepResult(config, rows)


def emit_conductance_map(cb, column: int, shape) -> np.ndarray:
    """One column's conductances reshaped to the task's 2-D image layout."""
    if not 0 <= column < cb.columns:
        raise IndexError(f"column {column} out of range")
    G = cb.conductances()[:, column]
    if int(np.prod(shape)) != G.size:
        raise ValueError(f"shape {shape} does not hold {G.size} devices")
    return G.reshape(shape)


def save_matrix_csv(path, matrix) -> None:
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.9e")


def save_elm_bundle(est: CrossbarELMClassifier, directory) -> Path:
    """Write a fitted ELM as CSV matrices plus ``metadata.txt`` (key=value)."""
    from .elm import map_weights_to_conductance_pairs

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    readout = est.readout_
    save_matrix_csv(directory / "W_out.csv", readout.W_out)
    save_matrix_csv(directory / "offsets.csv", est.bank_.offsets)
    save_matrix_csv(directory / "first_layer_conductance.csv", est.crossbar_.conductances())
    g_plus, g_minus, scale, clipped = map_weights_to_conductance_pairs(readout.W_out)
    save_matrix_csv(directory / "W_out_G_plus.csv", g_plus)
    save_matrix_csv(directory / "W_out_G_minus.csv", g_minus)
    meta = {
        "n_hidden": est.n_hidden, "n_classes": len(est.classes_),
        "classes": ",".join(str(c) for c in est.classes_),
        "first_layer": est.first_layer, "lambda": repr(float(readout.lam)),
        "gain": repr(float(est.bank_.gain)), "current_scale": repr(float(est.bank_.current_scale)),
        "v_read": repr(float(est.v_read)), "pair_scale": repr(float(scale)), "pair_clipped": clipped,
    }
    (directory / "metadata.txt").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
    return directory


def load_elm_bundle(directory) -> dict:
    """Read back a bundle written by :func:`save_elm_bundle` (arrays + metadata)."""
    directory = Path(directory)
    meta = dict(line.split("=", 1) for line in
                (directory / "metadata.txt").read_text().splitlines() if line)
    out = {"metadata": meta}
    for name in ("W_out", "offsets", "first_layer_conductance", "W_out_G_plus", "W_out_G_minus"):
        out[name] = np.loadtxt(directory / f"{name}.csv", delimiter=",", ndmin=2)
    out["offsets"] = out["offsets"].ravel()
    return out
