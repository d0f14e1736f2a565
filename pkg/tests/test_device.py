import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecmsim.device import (G_FLOOR, DeviceParams, DeviceState, apply_spike,
                           relaxed_conductance, step_no_spike)

P = DeviceParams()
uS, mS = 1e-6, 1e-3


def state(g, tau=None, t=0.0):
    return DeviceState(g, t, P.tau_fac(g).item() if tau is None else tau)


def test_defaults():
    assert (P.U, P.A, P.a, P.b) == (0.025, 4e-3, 2.42e-12, 4.0)


@pytest.mark.parametrize("kwargs", [dict(U=0), dict(U=1.5), dict(A=0), dict(a=-1), dict(b=0)])
def test_params_rejected(kwargs):
    with pytest.raises(ValueError):
        DeviceParams(**kwargs)


def test_relax_ltp_device():
    assert relaxed_conductance(state(3 * mS, 196.02), 100.0) == pytest.approx(1.801212886e-3, rel=1e-9)


def test_relax_stp_device_hits_floor():
    # unclamped value is 0.9 mS * exp(-100 / 1.587) = 3.877e-31 S, below the floor
    assert 0.9e-3 * math.exp(-100 / 1.587) == pytest.approx(3.87695e-31, rel=1e-5)
    assert relaxed_conductance(state(0.9 * mS, 1.587), 100.0) == G_FLOOR


def test_relax_zero_delay():
    s = state(1.234 * mS, t=5.0)
    assert relaxed_conductance(s, 5.0) == 1.234 * mS


def test_relax_one_time_constant():
    s = state(1 * mS)
    assert s.tau_fac == pytest.approx(2.42, rel=1e-12)
    assert relaxed_conductance(s, 2.42) == pytest.approx(367.879441171 * uS, rel=1e-9)


def test_time_must_not_run_backward():
    s = state(1 * mS, t=1.0)
    for fn in (lambda: relaxed_conductance(s, 0.5), lambda: apply_spike(s, 0.5, P),
               lambda: step_no_spike(s, 0.5)):
        with pytest.raises(ValueError):
            fn()


def test_spike_from_fresh_device():
    s = apply_spike(state(10 * uS), 0.0, P)
    assert s.g_last == pytest.approx(109.75 * uS, rel=1e-12)
    assert s.tau_fac == pytest.approx(3.51102144e-4, rel=1e-8)


def test_spike_fixed_point_at_ceiling():
    assert apply_spike(state(P.A), 0.0, P).g_last == P.A


def test_tau_uses_post_spike_conductance():
    # the spike lands exactly on 3000 uS
    g0 = (3000 * uS - P.U * P.A) / (1 - P.U)
    s = apply_spike(state(g0, tau=1e9), 0.0, P)
    assert s.g_last == pytest.approx(3000 * uS, rel=1e-12)
    assert s.tau_fac == pytest.approx(196.02, rel=1e-9)


def test_step_no_spike_keeps_tau():
    s = state(2 * mS)
    s2 = step_no_spike(s, 3.0)
    assert s2.tau_fac == s.tau_fac and s2.t_last == 3.0
    assert step_no_spike(s, 0.0) == s


def test_ltp_threshold():
    assert P.ltp_threshold(1.0) == pytest.approx(801.7632734 * uS, rel=1e-9)
    assert P.tau_fac(P.ltp_threshold(1.0)) == pytest.approx(1.0)


def _scalar_train(n, dt, g=10.0):
    """Independent replay in uS / plain floats."""
    tau = 2.42e-12 * g ** 4
    for k in range(n):
        if k:
            g *= math.exp(-dt / tau)
        g += 0.025 * (4000.0 - g)
        tau = 2.42e-12 * g ** 4
    return g * uS, tau


@pytest.mark.parametrize("n, ltp", [(12, False), (60, True)])
def test_pulse_train_regimes(n, ltp):
    """A short pulse train stays STP (gone by 100 s), a long one reaches LTP."""
    s = state(10 * uS)
    for k in range(n):
        s = apply_spike(s, k * 1e-4, P)
    g_ref, tau_ref = _scalar_train(n, 1e-4)
    assert s.g_last == pytest.approx(g_ref, rel=1e-9)
    kept = relaxed_conductance(s, s.t_last + 100.0) / s.g_last
    assert (kept > 0.5) if ltp else (kept < 0.01)


def test_array_states_broadcast():
    g = np.array([10 * uS, 1 * mS, 3 * mS])
    s = DeviceState(g, np.zeros(3), P.tau_fac(g))
    out = apply_spike(s, 0.0, P)
    for i in range(3):
        assert out.g_last[i] == apply_spike(state(float(g[i])), 0.0, P).g_last


# --- properties -------------------------------------------------------------

events = st.lists(st.tuples(st.floats(1e-6, 5.0), st.booleans()), min_size=1, max_size=60)


@settings(max_examples=200, deadline=None)
@given(events)
def test_bounded(seq):
    s, t = state(10 * uS), 0.0
    for gap, spike in seq:
        t += gap
        s = apply_spike(s, t, P) if spike else step_no_spike(s, t)
        assert 0 < s.g_last <= P.A
        assert s.tau_fac > 0


@settings(max_examples=100, deadline=None)
@given(st.floats(50e-6, 4e-3), st.floats(1e-4, 10.0))
def test_relaxation_decreasing(g, dt):
    s = state(g)
    g1 = relaxed_conductance(s, dt)
    g2 = relaxed_conductance(s, 2 * dt)
    assert g2 < g1 < g or g2 == g1 == G_FLOOR


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-5, 4e-3), st.floats(0, 1.0))
def test_spike_increases(g, dt):
    s = state(g)
    relaxed = relaxed_conductance(s, dt)
    after = apply_spike(s, dt, P).g_last
    assert after > relaxed or relaxed == P.A


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-5, 3.9e-3), st.floats(1e-7, 1e-4))
def test_tau_monotone(g, dg):
    assert P.tau_fac(g + dg) > P.tau_fac(g)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 4e-3), st.floats(0, 50.0), st.floats(0, 50.0))
def test_no_spike_composition(g, t1, extra):
    s = state(g)
    direct = step_no_spike(s, t1 + extra)
    stepped = step_no_spike(step_no_spike(s, t1), t1 + extra)
    assert stepped.g_last == pytest.approx(direct.g_last, rel=1e-12, abs=G_FLOOR)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-5, 2e-3), st.integers(0, 4)), min_size=1, max_size=40))
def test_lazy_matches_eager(train):
    """Spike-only evaluation equals evaluation with no-spike steps interleaved."""
    lazy = eager = state(10 * uS)
    t = 0.0
    for gap, n_idle in train:
        for k in range(n_idle):
            eager = step_no_spike(eager, t + gap * (k + 1) / (n_idle + 1))
        t += gap
        lazy, eager = apply_spike(lazy, t, P), apply_spike(eager, t, P)
        assert eager.g_last == pytest.approx(lazy.g_last, rel=1e-12)
