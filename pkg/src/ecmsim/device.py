"""Conductance evolution of a single ECM (electrochemical metallization) cell.

The model is event driven: a device only stores the conductance right after
its last event, the time of that event and the relaxation time constant in
force.  The conductance at any later time is obtained lazily::

    tau_fac = a * (G / g_unit) ** b              (recomputed after each spike)
    G(t)    = G_last * exp(-(t - t_last) / tau_fac)
    G'      = G(t) + U * (A - G(t))              (programming spike at t)

Every function here is pure and works element-wise, so the same code drives a
scalar device or a whole crossbar column stored as numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

#: Conductance unit the power law is expressed in (1 uS).  With this unit the
#: nominal prefactor puts 0.9 mS devices at tau ~ 1.6 s and 3 mS devices at
#: tau ~ 196 s.
G_UNIT = 1e-6

#: Lower bound on any conductance, keeps ``tau_fac`` finite and G > 0.
G_FLOOR = 1e-30

#: Default starting conductance of a fresh (OFF) device.
G_INIT = 10e-6


@dataclass(frozen=True)
class DeviceParams:
    """Physical constants of one device (or arrays of them, one per device).

    Parameters
    ----------
    U : float
        Synaptic efficiency, the fraction of the remaining headroom
        ``A - G`` gained on each programming spike.
    A : float
        Maximum conductance in Siemens.
    a : float
        Power-law prefactor of the relaxation time constant, seconds.
    b : float
        Power-law exponent.
    V_th : float, optional
        Programming threshold in Volts.  Informational only; every
        programming pulse is assumed to exceed it.
    g_unit : float
        Conductance unit (Siemens) that ``G`` is divided by before the power
        law is applied.
    """

    U: float = 0.025
    A: float = 4e-3
    a: float = 2.42e-12
    b: float = 4.0
    V_th: float | None = None
    g_unit: float = G_UNIT

    def __post_init__(self):
        U = np.asarray(self.U)
        if np.any(U <= 0) or np.any(U > 1):
            raise ValueError("U must lie in (0, 1]")
        for name in ("A", "a", "b", "g_unit"):
            if np.any(np.asarray(getattr(self, name)) <= 0):
                raise ValueError(f"{name} must be positive")

    def tau_fac(self, g):
        """Relaxation time constant (seconds) of a device at conductance ``g``."""
        return self.a * (np.asarray(g) / self.g_unit) ** self.b

    def ltp_threshold(self, T=1.0):
        """Conductance at which ``tau_fac`` equals ``T`` seconds."""
        return self.g_unit * (T / self.a) ** (1.0 / self.b)


@dataclass(frozen=True)
class DeviceState:
    """Lazy device state: conductance right after the last event, its time
    stamp and the time constant set by the last spike."""

    g_last: float
    t_last: float
    tau_fac: float

    @classmethod
    def fresh(cls, params: DeviceParams, g0=G_INIT, t0=0.0) -> "DeviceState":
        g0 = np.asarray(g0, dtype=float) if np.ndim(g0) else float(g0)
        return cls(g0, t0, params.tau_fac(g0) if np.ndim(g0) else float(params.tau_fac(g0)))


def _check_time(state: DeviceState, t) -> None:
    if np.any(np.asarray(t) < np.asarray(state.t_last)):
        raise ValueError(
            f"time must not run backward (t={t!r} < t_last={state.t_last!r})")


def relax_arrays(g_last, t_last, tau, t):
    g = g_last * np.exp(-(t - t_last) / tau)
    return np.maximum(g, G_FLOOR)


def spike_arrays(g_last, t_last, tau, t, U, A, a, b, g_unit):
    """Array kernel behind :func:`apply_spike`: returns ``(g_new, tau_new)``."""
    g = relax_arrays(g_last, t_last, tau, t)
    g_new = g + U * (A - g)
    return g_new, a * (g_new / g_unit) ** b


def relaxed_conductance(state: DeviceState, t):
    """Conductance of ``state`` at time ``t`` assuming no spike since ``t_last``."""
    _check_time(state, t)
    g = relax_arrays(state.g_last, state.t_last, state.tau_fac, t)
    return float(g) if np.ndim(g) == 0 else g


def apply_spike(state: DeviceState, t, params: DeviceParams) -> DeviceState:
    """Relax ``state`` up to ``t`` then apply one programming spike there."""
    _check_time(state, t)
    g_new, tau = spike_arrays(state.g_last, state.t_last, state.tau_fac, t,
                              params.U, params.A, params.a, params.b,
                              params.g_unit)
    if np.ndim(tau) == 0:
        tau = float(tau)
        g_new = float(g_new)
    return DeviceState(g_new, t, tau)


def step_no_spike(state: DeviceState, t) -> DeviceState:
    """Advance ``state`` to ``t`` without a spike; ``tau_fac`` is kept."""
    return replace(state, g_last=relaxed_conductance(state, t), t_last=t)
