import gzip
import itertools
import struct

import numpy as np
import pytest

from ecmsim.datasets import (BadMagicError, CountMismatchError, DatasetNotFoundError,
                             NoisyExamples, TruncatedFileError, add_noise, binarize,
                             load_mnist, make_glyphs)


def test_glyphs():
    g = make_glyphs()
    assert g.images.shape == (3, 36) and g.n_classes == 3
    assert list(g.images.sum(axis=1)) == [8, 8, 8]
    for a, b in itertools.combinations(g.images, 2):
        assert (a != b).sum() >= 4


def _write_idx(directory, split, images, labels, image_magic=0x803, label_magic=0x801,
               truncate=0, gz=False):
    names = {"train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
             "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")}[split]
    n, r, c = images.shape
    img = struct.pack(">IIII", image_magic, n, r, c) + images.astype(np.uint8).tobytes()
    lab = struct.pack(">II", label_magic, len(labels)) + labels.astype(np.uint8).tobytes()
    if truncate:
        img = img[:-truncate]
    opener = gzip.open if gz else open
    suffix = ".gz" if gz else ""
    with opener(directory / (names[0] + suffix), "wb") as f:
        f.write(img)
    with opener(directory / (names[1] + suffix), "wb") as f:
        f.write(lab)


@pytest.fixture
def raw():
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(5, 4, 3))
    images[0] = 0
    return images, np.array([3, 1, 4, 1, 5])


@pytest.mark.parametrize("gz", [False, True])
def test_load_small_idx(tmp_path, raw, gz):
    images, labels = raw
    _write_idx(tmp_path, "test", images, labels, gz=gz)
    ps = load_mnist(tmp_path, "test")
    assert len(ps) == 5 and ps.shape == (4, 3) and ps.n_pixels == 12
    assert np.array_equal(ps.images, images.reshape(5, 12) >= 128)
    assert not ps.images[0].any()
    assert list(ps.labels) == [3, 1, 4, 1, 5]


def test_bad_magic(tmp_path, raw):
    _write_idx(tmp_path, "train", *raw, image_magic=0x801)
    with pytest.raises(BadMagicError):
        load_mnist(tmp_path, "train")


def test_bad_label_magic(tmp_path, raw):
    _write_idx(tmp_path, "train", *raw, label_magic=0x803)
    with pytest.raises(BadMagicError):
        load_mnist(tmp_path, "train")


def test_truncated(tmp_path, raw):
    _write_idx(tmp_path, "train", *raw, truncate=7)
    with pytest.raises(TruncatedFileError):
        load_mnist(tmp_path, "train")


def test_count_mismatch(tmp_path, raw):
    images, labels = raw
    _write_idx(tmp_path, "train", images, labels[:4])
    with pytest.raises(CountMismatchError):
        load_mnist(tmp_path, "train")


def test_missing(tmp_path):
    with pytest.raises(DatasetNotFoundError):
        load_mnist(tmp_path, "train")
    with pytest.raises(DatasetNotFoundError):
        load_mnist(tmp_path / "nope", "train")


def test_env_var(tmp_path, raw, monkeypatch):
    _write_idx(tmp_path, "test", *raw)
    monkeypatch.setenv("ECMSIM_DATA_DIR", str(tmp_path))
    assert len(load_mnist(split="test")) == 5


def test_binarize_pure():
    raw = np.array([0, 127, 128, 255])
    assert list(binarize(raw)) == [False, False, True, True]
    assert np.array_equal(binarize(raw), binarize(raw.copy()))


def test_noise_extremes(rng):
    img = make_glyphs().images[0]
    assert np.array_equal(add_noise(img, 0.0, rng), img)
    assert np.array_equal(add_noise(img, 1.0, rng), ~img)
    with pytest.raises(ValueError):
        add_noise(img, 1.5, rng)


def test_noise_flip_rate():
    img = make_glyphs().images[1]
    rng = np.random.default_rng(7)
    noisy = add_noise(np.repeat(img[None], 10_000, axis=0), 0.1, rng)
    assert (noisy != img).sum(axis=1).mean() == pytest.approx(3.6, abs=0.1)


def test_noise_seeded():
    img = make_glyphs().images
    a = add_noise(img, 0.2, np.random.default_rng(3))
    b = add_noise(img, 0.2, np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_noisy_examples_draw_class():
    g = make_glyphs()
    src = NoisyExamples(g, 0.0, np.random.default_rng(0))
    assert np.array_equal(src.draw(2, 4), np.repeat(g.images[2][None], 4, axis=0))
    images, labels = src.labeled(30)
    assert np.array_equal(images, g.images[labels])
    with pytest.raises(LookupError):
        src.draw(7, 1)


def test_mnist_counts(mnist):
    train, test = mnist
    assert len(train) == 60_000 and len(test) == 10_000
    assert train.n_pixels == 784 and train.n_classes == 10
    assert set(np.unique(test.labels)) == set(range(10))


def test_mnist_active_fraction(mnist):
    # computed once with a separate struct/numpy reader: 0.134229
    _, test = mnist
    assert test.images.mean() == pytest.approx(0.13422946, abs=1e-7)
    assert test.images.mean() == pytest.approx(0.13, abs=0.02)
