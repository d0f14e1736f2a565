"""Dual-crossbar ELM-style classifier.

The first crossbar (imprinted, or set to random OFF-state conductances) maps a
binary image to M currents; a bank of offset tanh units turns them into hidden
activations, and a linear readout is fitted in closed form by ridge
regression on the training set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_binary_images, check_binary_xy, seed_streams
from .crossbar import Crossbar, VariabilitySpec, build_crossbar
from .datasets import NoisyExamples, PatternSet, add_noise
from .device import G_INIT, DeviceParams

logger = logging.getLogger(__name__)

FIRST_LAYER_MODES = ("imprinted", "random")


class RankDeficiencyError(np.linalg.LinAlgError):
    """The unregularized normal equations are singular."""


@dataclass
class ActivationBank:
    """Per-neuron ``tanh(gain * I / current_scale + offset)`` nonlinearity."""

    offsets: np.ndarray
    gain: float = 10.0
    current_scale: float = 1.0

    def __post_init__(self):
        if self.gain <= 0 or self.current_scale <= 0:
            raise ValueError("gain and current_scale must be positive")
        self.offsets = np.asarray(self.offsets, dtype=float)

    @classmethod
    def random(cls, n_hidden, rng, gain=10.0, current_scale=1.0, offset_range=1.0):
        offsets = rng.uniform(-offset_range, offset_range, size=n_hidden)
        return cls(offsets, gain, current_scale)

    def __call__(self, currents):
        currents = np.asarray(currents)
        if currents.shape[-1] != len(self.offsets):
            raise ValueError(f"expected {len(self.offsets)} currents, got {currents.shape[-1]}")
        return np.tanh(self.gain * currents / self.current_scale + self.offsets)


def default_current_scale(images, v_read=0.1, g_max=4e-3) -> float:
    """``v_read * g_max * mean active pixels``, so typical pre-activations are O(1)."""
    return float(v_read * g_max * max(np.asarray(images).sum(axis=1).mean(), 1.0))


def project(cb: Crossbar, bank: ActivationBank, img) -> np.ndarray:
    """Hidden activations for one image or a batch (rows = images)."""
    return bank(cb.read_currents(img))


@dataclass
class ReadoutModel:
    """Trained second layer: ``W_out`` is ``J x M``."""

    W_out: np.ndarray
    lam: float
    bank: ActivationBank | None = None

    def decision_function(self, hidden) -> np.ndarray:
        return np.asarray(hidden) @ self.W_out.T

    def predict(self, hidden) -> np.ndarray:
        return np.argmax(self.decision_function(np.atleast_2d(hidden)), axis=1)


class NormalEquations:
    """Streaming accumulator of ``H H^T`` and ``Y H^T``.

    Chunks are given sample-major (``n_samples x M`` hidden activations and
    ``n_samples x J`` targets) and always summed in call order, so the result
    does not depend on how the caller parallelized the projection.
    """

    def __init__(self, n_hidden: int, n_outputs: int):
        self.gram = np.zeros((n_hidden, n_hidden))
        self.cross = np.zeros((n_outputs, n_hidden))
        self.n_samples = 0

    def add(self, hidden, targets) -> "NormalEquations":
        hidden = np.asarray(hidden, dtype=float)
        targets = np.asarray(targets, dtype=float)
        self.gram += hidden.T @ hidden
        self.cross += targets.T @ hidden
        self.n_samples += len(hidden)
        return self

    def default_lambda(self, rel=1e-3) -> float:
        return rel * np.trace(self.gram) / self.gram.shape[0]

    def solve(self, lam) -> np.ndarray:
        """``W = Y H^T (H H^T + lam I)^-1`` by Cholesky; never forms the inverse."""
        if self.n_samples == 0:
            raise ValueError("no training samples accumulated")
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        A = self.gram + lam * np.eye(len(self.gram))
        try:
            factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        except np.linalg.LinAlgError:
            raise RankDeficiencyError(
                "H H^T is singular; use a ridge regularizer lambda > 0") from None
        if lam == 0:
            d = np.diag(factor[0])
            if d.min() <= np.sqrt(np.finfo(float).eps) * d.max():
                raise RankDeficiencyError(
                    "H H^T is numerically singular; use a ridge regularizer lambda > 0")
        return scipy.linalg.cho_solve(factor, self.cross.T).T


def solve_readout(H, Y, lam=0.0) -> ReadoutModel:
    """Closed-form ridge readout.

    ``H`` is ``M x N`` (one column per training example) and ``Y`` the ``J x N``
    one-hot targets; ``lam = 0`` gives plain least squares.
    """
    H = np.asarray(H, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if H.ndim != 2 or Y.ndim != 2 or H.shape[1] != Y.shape[1]:
        raise ValueError("H and Y must be 2-D with one column per example")
    if H.shape[1] < 1:
        raise ValueError("need at least one training example")
    eqs = NormalEquations(H.shape[0], Y.shape[0]).add(H.T, Y.T)
    return ReadoutModel(eqs.solve(lam), lam)


def map_weights_to_conductance_pairs(W, g_max=4e-3, scale=None):
    """Split signed weights over two non-negative conductance arrays.

    Returns ``(G_plus, G_minus, scale, n_clipped)`` with
    ``W ~= scale * (G_plus - G_minus)`` and both arrays in ``[0, g_max]``.
    Positive weights go to ``G_plus``, negative ones to ``G_minus``.  By
    default ``scale = max|W| / g_max`` so nothing is clipped; with an explicit
    ``scale``, entries beyond ``g_max`` are clipped and counted.
    """
    W = np.asarray(W, dtype=float)
    if scale is None:
        peak = np.abs(W).max() if W.size else 0.0
        scale = peak / g_max if peak > 0 else 1.0
    G = W / scale
    n_clipped = int(np.count_nonzero(np.abs(G) > g_max))
    G = np.clip(G, -g_max, g_max)
    return np.maximum(G, 0.0), np.maximum(-G, 0.0), scale, n_clipped


class CrossbarELMClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """ELM-style classifier with an imprinted (or random) memristive first layer.

    ``fit`` imprints ``n_hidden`` columns (epoch ``m`` uses ``n_presentations``
    noisy examples of class ``m mod J``), waits ``wait_time``, projects every
    training image (with fresh pixel noise) through the crossbar and the tanh
    bank, then solves the ridge readout.  With ``first_layer="random"`` the
    conductances are instead drawn uniformly from ``random_range`` (multiples of
    ``g_init``) and read without any wait.

    Parameters
    ----------
    n_hidden : int
        Hidden neurons M (first-layer columns).
    first_layer : {"imprinted", "random"}
    alpha : float or None
        Ridge regularizer.  ``None`` uses ``1e-3 * trace(H H^T) / M``; ``0``
        is ordinary least squares.
    current_scale : float or None
        Divisor applied to currents before the tanh; ``None`` uses
        ``v_read * A * mean active pixels`` of the noisy training images.
    chunk_size : int
        Images projected per block while accumulating the normal equations.
    """

    def __init__(self, n_hidden=100, first_layer="imprinted", n_presentations=50,
                 dt=2e-4, wait_time=1.0, noise=0.1, cv=0.0, gain=10.0,
                 offset_range=1.0, current_scale=None, alpha=None,
                 random_range=(1.0, 50.0), device=None, g_init=G_INIT, v_read=0.1,
                 chunk_size=5000, random_state=None):
        self.n_hidden = n_hidden
        self.first_layer = first_layer
        self.n_presentations = n_presentations
        self.dt = dt
        self.wait_time = wait_time
        self.noise = noise
        self.cv = cv
        self.gain = gain
        self.offset_range = offset_range
        self.current_scale = current_scale
        self.alpha = alpha
        self.random_range = random_range
        self.device = device
        self.g_init = g_init
        self.v_read = v_read
        self.chunk_size = chunk_size
        self.random_state = random_state

    def _build_first_layer(self, X, y_idx, n_classes, streams):
        var_ss, imprint_ss, random_ss = streams
        device = self.device or DeviceParams()
        cb = build_crossbar(X.shape[1], self.n_hidden, device,
                            VariabilitySpec(self.cv, int(var_ss.generate_state(1)[0])),
                            g_init=self.g_init, v_read=self.v_read)
        if self.first_layer == "imprinted":
            source = NoisyExamples(PatternSet(X, y_idx, n_classes, ()), self.noise,
                                   np.random.default_rng(imprint_ss))
            epochs = [(m, m % n_classes) for m in range(self.n_hidden)]
            cb.run_imprint_phase(epochs, self.n_presentations, self.dt, source)
            cb.wait(self.wait_time)
        elif self.first_layer == "random":
            lo, hi = self.random_range
            rng = np.random.default_rng(random_ss)
            cb.set_conductances(rng.uniform(lo * self.g_init, hi * self.g_init, size=cb.shape))
        else:
            raise ValueError(f"first_layer must be one of {FIRST_LAYER_MODES}")
        return cb

    def fit(self, X, y):
        X, y = check_binary_xy(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        n_classes = len(self.classes_)
        *layer_streams, bank_ss, train_ss = seed_streams(self.random_state, 5)

        self.crossbar_ = self._build_first_layer(X, y_idx, n_classes, layer_streams)
        noisy = add_noise(X, self.noise, np.random.default_rng(train_ss))
        scale = self.current_scale
        if scale is None:
            g_max = float(np.mean(self.crossbar_.params.A))
            scale = default_current_scale(noisy, self.v_read, g_max)
        self.bank_ = ActivationBank.random(self.n_hidden, np.random.default_rng(bank_ss),
                                           self.gain, scale, self.offset_range)

        eqs = NormalEquations(self.n_hidden, n_classes)
        targets = np.eye(n_classes)[y_idx]
        for start in range(0, len(noisy), self.chunk_size):
            block = slice(start, start + self.chunk_size)
            eqs.add(project(self.crossbar_, self.bank_, noisy[block]), targets[block])
        lam = eqs.default_lambda() if self.alpha is None else self.alpha
        logger.debug("readout: M=%d N=%d lambda=%.3g current_scale=%.3g",
                     self.n_hidden, len(noisy), lam, scale)
        self.readout_ = ReadoutModel(eqs.solve(lam), lam, self.bank_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Hidden-layer activations, ``n_samples x n_hidden``."""
        check_is_fitted(self)
        X = check_binary_images(X, self.n_features_in_)
        return np.vstack([project(self.crossbar_, self.bank_, X[s:s + self.chunk_size])
                          for s in range(0, len(X), self.chunk_size)]) if len(X) else \
            np.empty((0, self.n_hidden))

    def decision_function(self, X):
        return self.readout_.decision_function(self.transform(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


class DirectRidgeClassifier(ClassifierMixin, BaseEstimator):
    """Ridge readout trained directly on (noisy) binary pixels, no first layer."""

    def __init__(self, noise=0.1, alpha=None, random_state=None):
        self.noise = noise
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_binary_xy(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        (train_ss,) = seed_streams(self.random_state, 1)
        noisy = add_noise(X, self.noise, np.random.default_rng(train_ss))
        eqs = NormalEquations(X.shape[1], len(self.classes_))
        eqs.add(noisy, np.eye(len(self.classes_))[y_idx])
        lam = eqs.default_lambda() if self.alpha is None else self.alpha
        self.readout_ = ReadoutModel(eqs.solve(lam), lam)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        return self.readout_.decision_function(
            check_binary_images(X, self.n_features_in_).astype(float))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
