"""An L x M crossbar of ECM devices driven by a shared simulation clock.

Rows are input lines (one per pixel), columns are output neurons.  Device
state is kept lazily as three L x M arrays (conductance after the last event,
time of that event, time constant), so imprinting a column only touches the
devices that actually receive a spike.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import G_INIT, G_FLOOR, DeviceParams, DeviceState, relax_arrays, spike_arrays

#: Values swept in device-variability studies.
STANDARD_CV_VALUES = (0.025, 0.05, 0.1, 0.15)


@dataclass(frozen=True)
class VariabilitySpec:
    """Device-to-device spread of U, A and a, as coefficient of variation."""

    cv: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.cv < 0:
            raise ValueError("cv must be non-negative")


def _sample_positive(rng, mean, cv, shape, upper=None):
    """Normal(mean, cv*mean) draws, redrawn (not clipped) outside (0, upper]."""
    values = rng.normal(mean, cv * mean, size=shape)
    bad = (values <= 0) if upper is None else (values <= 0) | (values > upper)
    while bad.any():
        values[bad] = rng.normal(mean, cv * mean, size=int(bad.sum()))
        bad = (values <= 0) if upper is None else (values <= 0) | (values > upper)
    return values


class Crossbar:
    """Grid of ECM devices with per-device parameters and a global clock.

    Use :func:`build_crossbar` to create one.  Mutating methods return
    ``self`` so protocol steps can be chained.
    """

    def __init__(self, params: DeviceParams, g_init=G_INIT, *,
                 v_read=0.1, v_prog=0.42, pulse_width=100e-6):
        shape = np.shape(params.U)
        if len(shape) != 2:
            raise ValueError("crossbar params must be L x M arrays")
        self.params = params
        self.rows, self.columns = shape
        self.g_init = g_init
        self.v_read = v_read
        self.v_prog = v_prog
        self.pulse_width = pulse_width
        self.clock = 0.0
        self.g_last = np.full(shape, float(g_init))
        self.t_last = np.zeros(shape)
        self.tau = params.a * (self.g_last / params.g_unit) ** params.b

    @property
    def shape(self):
        return self.rows, self.columns

    def state(self) -> DeviceState:
        """Snapshot of all device states (arrays are copies)."""
        return DeviceState(self.g_last.copy(), self.t_last.copy(), self.tau.copy())

    def conductances(self, t=None) -> np.ndarray:
        """L x M conductances at time ``t`` (default: the current clock)."""
        t = self.clock if t is None else t
        if t < self.clock:
            raise ValueError("cannot evaluate conductances before the current clock")
        return relax_arrays(self.g_last, self.t_last, self.tau, t)

    def _column_params(self, column):
        p = self.params
        return p.U[:, column], p.A[:, column], p.a[:, column]

    def _check_column(self, column):
        if not 0 <= column < self.columns:
            raise IndexError(f"column {column} out of range for {self.columns} columns")

    def _check_pixels(self, pixels):
        pixels = np.asarray(pixels)
        if pixels.shape[-1] != self.rows:
            raise ValueError(
                f"pixel vectors have length {pixels.shape[-1]}, crossbar has {self.rows} rows")
        return pixels

    def imprint(self, patterns, column: int, dt: float) -> "Crossbar":
        """Present each row of ``patterns`` in turn on ``column``.

        A presentation fires one programming spike, at the current clock, on
        every device of ``column`` whose pixel is active; the clock then moves
        on by ``dt`` (the onset-to-onset period).
        """
        self._check_column(column)
        if dt <= 0:
            raise ValueError("dt must be positive")
        patterns = np.atleast_2d(self._check_pixels(patterns)).astype(bool)
        U, A, a = self._column_params(column)
        b, g_unit = self.params.b, self.params.g_unit
        g = self.g_last[:, column].copy()
        t_last = self.t_last[:, column].copy()
        tau = self.tau[:, column].copy()
        clock = self.clock
        for pixels in patterns:
            idx = np.flatnonzero(pixels)
            if len(idx):
                g[idx], tau[idx] = spike_arrays(g[idx], t_last[idx], tau[idx], clock,
                                                U[idx], A[idx], a[idx], b, g_unit)
                t_last[idx] = clock
            clock += dt
        self.g_last[:, column] = g
        self.t_last[:, column] = t_last
        self.tau[:, column] = tau
        self.clock = clock
        return self

    def imprint_pattern(self, pixels, column: int, dt: float) -> "Crossbar":
        """Single pattern presentation; see :meth:`imprint`."""
        pixels = self._check_pixels(pixels)
        if pixels.ndim != 1:
            raise ValueError("imprint_pattern takes one pixel vector")
        return self.imprint(pixels[None, :], column, dt)

    def run_imprint_phase(self, epochs, n: int, dt: float, source) -> "Crossbar":
        """Imprint one epoch per ``(column, label)`` pair.

        ``source.draw(label, n)`` must return ``n`` pixel vectors; they are
        presented on ``column`` one after another with period ``dt``.
        """
        if n < 0:
            raise ValueError("n must be non-negative")
        for column, label in epochs:
            self._check_column(column)
            if n == 0:
                continue
            self.imprint(source.draw(label, n), column, dt)
        return self

    def wait(self, T: float) -> "Crossbar":
        """Let the crossbar relax, without any spike, for ``T`` seconds."""
        if T < 0:
            raise ValueError("wait time must be non-negative")
        self.clock += T
        return self

    def read_currents(self, pixels) -> np.ndarray:
        """Output currents (A) for one pixel vector or a batch (rows = images).

        Reads are non-perturbing and do not advance the clock.
        """
        pixels = self._check_pixels(pixels)
        G = self.conductances()
        return self.v_read * (pixels.astype(float) @ G)

    def set_conductances(self, G) -> "Crossbar":
        """Overwrite every device with conductance ``G`` at the current clock."""
        G = np.broadcast_to(np.asarray(G, dtype=float), self.shape)
        if np.any(G <= 0) or np.any(G > self.params.A):
            raise ValueError("conductances must lie in (0, A]")
        self.g_last = np.maximum(G, G_FLOOR).copy()
        self.t_last = np.full(self.shape, self.clock)
        self.tau = self.params.a * (self.g_last / self.params.g_unit) ** self.params.b
        return self

    def save_conductance_csv(self, path) -> None:
        """CSV matrix of conductances (Siemens): row = input line, column = neuron."""
        np.savetxt(path, self.conductances(), delimiter=",", fmt="%.9e")


def build_crossbar(L: int, M: int, nominal: DeviceParams | None = None,
                   var: VariabilitySpec | None = None, g_init=G_INIT, **kwargs) -> Crossbar:
    """Create an L x M crossbar, sampling per-device U, A and a.

    Each of U, A, a is drawn independently from Normal(nominal, cv * nominal)
    and redrawn while non-positive (U also while above 1).  The exponent b is
    never varied.  ``cv = 0`` gives every device the nominal values.
    """
    if L < 1 or M < 1:
        raise ValueError("crossbar dimensions must be positive")
    nominal = DeviceParams() if nominal is None else nominal
    var = VariabilitySpec() if var is None else var
    shape = (L, M)
    if var.cv == 0:
        U, A, a = (np.full(shape, float(getattr(nominal, k))) for k in "UAa")
    else:
        rng = np.random.default_rng(var.seed)
        U = _sample_positive(rng, nominal.U, var.cv, shape, upper=1.0)
        A = _sample_positive(rng, nominal.A, var.cv, shape)
        a = _sample_positive(rng, nominal.a, var.cv, shape)
    params = DeviceParams(U=U, A=A, a=a, b=nominal.b, V_th=nominal.V_th,
                          g_unit=nominal.g_unit)
    return Crossbar(params, g_init=g_init, **kwargs)
