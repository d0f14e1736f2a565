"""Pattern sources: the 6x6 three-glyph task, MNIST from IDX files, pixel noise."""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

#: Environment variable naming the directory that holds the MNIST IDX files.
DATA_DIR_ENV = "ECMSIM_DATA_DIR"

#: Fallback location checked when neither a path nor the variable is given.
DEFAULT_DATA_DIR = Path("~/.cache/ecmsim/mnist")

_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class DatasetError(ValueError):
    """Base class for dataset loading problems."""


class DatasetNotFoundError(DatasetError, FileNotFoundError):
    pass


class BadMagicError(DatasetError):
    pass


class TruncatedFileError(DatasetError):
    pass


class CountMismatchError(DatasetError):
    pass


@dataclass
class PatternSet:
    """Binary images with integer class labels.

    ``images`` has shape ``(n_items, L)`` and dtype bool; ``shape`` is the 2-D
    layout used when a pixel vector is shown as an image.
    """

    images: np.ndarray
    labels: np.ndarray
    n_classes: int
    shape: tuple
    split: str = "train"

    @property
    def n_pixels(self) -> int:
        return self.images.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, n: int) -> "PatternSet":
        return PatternSet(self.images[:n], self.labels[:n], self.n_classes,
                          self.shape, self.split)


# Reconstructed 6x6 glyphs, 8 active pixels each ('#').  The originals are only
# shown as pictures; pairwise Hamming distances are 8 (O/Z), 10 (Z/X), 16 (O/X).
_GLYPHS = {
    "O": ["......",
          "..##..",
          ".#..#.",
          ".#..#.",
          "..##..",
          "......"],
    "Z": ["......",
          "..###.",
          "...#..",
          "..#...",
          ".###..",
          "......"],
    "X": ["......",
          ".#..#.",
          "..##..",
          "..##..",
          ".#..#.",
          "......"],
}
GLYPH_NAMES = tuple(_GLYPHS)


def make_glyphs() -> PatternSet:
    """The canonical 'O', 'Z', 'X' glyphs as a 3-item pattern set (labels 0, 1, 2)."""
    images = np.array([[c == "#" for c in "".join(rows)] for rows in _GLYPHS.values()])
    return PatternSet(images, np.arange(len(images)), len(images), (6, 6), "canonical")


def _read_idx(path: Path, magic: int, ndim: int):
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        data = f.read()
    header = 4 + 4 * ndim
    if len(data) < header:
        raise TruncatedFileError(f"{path}: file shorter than its {header}-byte header")
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise BadMagicError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    size = int(np.prod(dims))
    if len(data) - header < size:
        raise TruncatedFileError(
            f"{path}: expected {size} payload bytes, found {len(data) - header}")
    return np.frombuffer(data, dtype=np.uint8, count=size, offset=header).reshape(dims)


def _locate(directory: Path, name: str) -> Path:
    for candidate in (directory / name, directory / (name + ".gz")):
        if candidate.exists():
            return candidate
    raise DatasetNotFoundError(f"{name} not found in {directory}")


def mnist_dir(path=None) -> Path:
    """Resolve the MNIST directory: explicit ``path``, else ``$ECMSIM_DATA_DIR``,
    else ``~/.cache/ecmsim/mnist``."""
    if path is None:
        path = os.environ.get(DATA_DIR_ENV) or DEFAULT_DATA_DIR.expanduser()
    path = Path(path)
    if not path.is_dir():
        raise DatasetNotFoundError(f"MNIST directory {path} does not exist")
    return path


def binarize(raw, threshold: int = 128) -> np.ndarray:
    """Pixel is active iff its raw 0-255 value is >= ``threshold``."""
    return np.asarray(raw) >= threshold


def load_mnist(path=None, split: str = "train", threshold: int = 128) -> PatternSet:
    """Read one MNIST split from big-endian IDX files and binarize it."""
    if split not in _MNIST_FILES:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    directory = mnist_dir(path)
    image_name, label_name = _MNIST_FILES[split]
    raw = _read_idx(_locate(directory, image_name), IMAGE_MAGIC, 3)
    labels = _read_idx(_locate(directory, label_name), LABEL_MAGIC, 1)
    if raw.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{raw.shape[0]} images but {labels.shape[0]} labels in {split} split")
    n, rows, cols = raw.shape
    images = binarize(raw.reshape(n, rows * cols), threshold)
    return PatternSet(images, labels.astype(np.int64), 10, (rows, cols), split)


def add_noise(img, flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Invert each pixel independently with probability ``flip_prob``."""
    if not 0.0 <= flip_prob <= 1.0:
        raise ValueError("flip_prob must lie in [0, 1]")
    img = np.asarray(img, dtype=bool)
    return img ^ (rng.random(img.shape) < flip_prob)


class NoisyExamples:
    """Draws fresh noisy copies of randomly chosen images of a requested class.

    All randomness comes from the single generator passed in, so a given
    (seed, call sequence) always yields the same images.
    """

    def __init__(self, patterns: PatternSet, flip_prob: float, rng: np.random.Generator):
        self.patterns = patterns
        self.flip_prob = flip_prob
        self.rng = rng
        self._by_class = {c: np.flatnonzero(patterns.labels == c)
                          for c in range(patterns.n_classes)}

    def draw(self, label: int, n: int) -> np.ndarray:
        pool = self._by_class.get(label)
        if pool is None or len(pool) == 0:
            raise LookupError(f"no examples of class {label} left to draw from")
        picks = pool[self.rng.integers(len(pool), size=n)] if len(pool) > 1 else np.repeat(pool, n)
        return add_noise(self.patterns.images[picks], self.flip_prob, self.rng)

    def labeled(self, n: int):
        """``n`` noisy examples with class labels drawn uniformly over classes."""
        labels = self.rng.integers(self.patterns.n_classes, size=n)
        images = np.empty((n, self.patterns.n_pixels), dtype=bool)
        for c in range(self.patterns.n_classes):
            rows = np.flatnonzero(labels == c)
            if len(rows):
                images[rows] = self.draw(c, len(rows))
        return images, labels
