"""Single-crossbar classifier: imprint, wait, average current signatures,
classify by smallest L1 distance to a stored signature."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_binary_images, check_binary_xy, seed_streams
from .crossbar import Crossbar, VariabilitySpec, build_crossbar
from .datasets import NoisyExamples, PatternSet, add_noise
from .device import G_INIT, DeviceParams


class UntrainedClassError(RuntimeError):
    """A register row has never seen an example, so it cannot be compared."""


@dataclass
class SignatureRegister:
    """Running mean of read currents, one row per true class.

    ``means[c, j]`` is the average current of output neuron ``j`` over the
    training examples of class ``c``.
    """

    means: np.ndarray
    counts: np.ndarray = field(default=None)

    @classmethod
    def empty(cls, n_classes: int, n_outputs: int | None = None) -> "SignatureRegister":
        n_outputs = n_classes if n_outputs is None else n_outputs
        return cls(np.zeros((n_classes, n_outputs)), np.zeros(n_classes, dtype=np.int64))

    def update(self, label: int, currents) -> None:
        self.counts[label] += 1
        self.means[label] += (currents - self.means[label]) / self.counts[label]

    def save_csv(self, path) -> None:
        """Register as a CSV matrix in Amperes (row = class, column = neuron)."""
        np.savetxt(path, self.means, delimiter=",", fmt="%.9e")


def train_register(cb: Crossbar, images, labels, n_classes: int) -> SignatureRegister:
    """Read each training image and fold its currents into its class's mean."""
    reg = SignatureRegister.empty(n_classes, cb.columns)
    if len(labels) == 0:
        return reg
    currents = cb.read_currents(images)
    for label, current in zip(labels, currents):
        reg.update(label, current)
    return reg


def signature_errors(reg: SignatureRegister, currents) -> np.ndarray:
    """Total L1 error of each test current vector against every class row."""
    currents = np.atleast_2d(currents)
    return np.abs(currents[:, None, :] - reg.means[None, :, :]).sum(axis=2)


def classify(reg: SignatureRegister, currents):
    """Class whose stored signature is closest (L1) to ``currents``.

    Accepts one current vector or a batch; ties go to the lowest class index.
    """
    missing = np.flatnonzero(reg.counts == 0)
    if len(missing):
        raise UntrainedClassError(f"register has no examples for classes {missing.tolist()}")
    errors = signature_errors(reg, currents)
    pred = np.argmin(errors, axis=1)
    return int(pred[0]) if np.ndim(currents) == 1 else pred


def evaluate(reg: SignatureRegister, cb: Crossbar, images, labels) -> float:
    """Fraction of test images whose predicted class is the true one."""
    if len(labels) == 0:
        raise ValueError("evaluation needs at least one test image")
    return float(np.mean(classify(reg, np.atleast_2d(cb.read_currents(images))) == labels))


class SignatureClassifier(ClassifierMixin, BaseEstimator):
    """Single-crossbar STP/LTP imprinting classifier.

    ``fit`` runs the whole protocol on a fresh crossbar: one imprinting epoch
    per output column (``n_presentations`` noisy examples of the column's
    class, period ``dt``), a spike-free wait of ``wait_time`` seconds, then
    one read of every training image (with fresh pixel noise) to build the
    current-signature register.  ``predict`` reads the given images as-is;
    add test noise beforehand if wanted.

    Parameters
    ----------
    n_presentations : int
        Noisy examples presented per imprinting epoch.
    dt : float
        Onset-to-onset period between presentations, seconds.
    wait_time : float
        Relaxation period between imprinting and training, seconds.
    noise : float
        Pixel flip probability applied to imprinting and training images.
    cv : float
        Device-to-device coefficient of variation of U, A and a.
    n_columns : int, optional
        Output neurons; defaults to the number of classes.  Column ``m`` is
        imprinted with class ``m mod J``.
    device : DeviceParams, optional
        Nominal device constants.
    random_state : int, optional
        Seed for variability sampling and every noise draw.
    """

    def __init__(self, n_presentations=45, dt=2e-4, wait_time=1.0, noise=0.1,
                 cv=0.0, n_columns=None, device=None, g_init=G_INIT, v_read=0.1,
                 random_state=None):
        self.n_presentations = n_presentations
        self.dt = dt
        self.wait_time = wait_time
        self.noise = noise
        self.cv = cv
        self.n_columns = n_columns
        self.device = device
        self.g_init = g_init
        self.v_read = v_read
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_binary_xy(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        n_classes = len(self.classes_)
        n_columns = n_classes if self.n_columns is None else self.n_columns
        var_ss, imprint_ss, train_ss = seed_streams(self.random_state, 3)
        var_seed = int(var_ss.generate_state(1)[0])

        self.crossbar_ = build_crossbar(
            X.shape[1], n_columns, self.device or DeviceParams(),
            VariabilitySpec(self.cv, var_seed), g_init=self.g_init, v_read=self.v_read)
        source = NoisyExamples(PatternSet(X, y_idx, n_classes, ()), self.noise,
                               np.random.default_rng(imprint_ss))
        epochs = [(m, m % n_classes) for m in range(n_columns)]
        self.crossbar_.run_imprint_phase(epochs, self.n_presentations, self.dt, source)
        self.crossbar_.wait(self.wait_time)

        noisy = add_noise(X, self.noise, np.random.default_rng(train_ss))
        self.register_ = train_register(self.crossbar_, noisy, y_idx, n_classes)
        self.n_features_in_ = X.shape[1]
        return self

    def currents(self, X):
        check_is_fitted(self)
        return self.crossbar_.read_currents(check_binary_images(X, self.n_features_in_))

    def predict(self, X):
        return self.classes_[classify(self.register_, np.atleast_2d(self.currents(X)))]
