import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from driven_lindblad.bloch import to_bloch
from driven_lindblad.dynamics import (DropEvent, TimeSeries, adiabaticity_diagnostic, bloch_generator,
                                      detect_drops, evolve_bloch, evolve_superop, inversion_series,
                                      liouvillian_generator, log_linear_fit, trace_distance)
from driven_lindblad.errors import DimensionMismatch, MissingChannel, ValidationError
from driven_lindblad.oracles import random_qubit_model, random_qubit_state
from driven_lindblad.presets import preset_params
from driven_lindblad.qubit import DrivenQubitParams, bloch_matrix, locate_eps
from driven_lindblad.superop import ModelSpec, RateLaw, build_liouvillian


def test_timeseries_contract():
    ts = TimeSeries([0, 1, 2], {"a": [1, 2, 3]})
    assert ts.columns() == ["t", "a"]
    assert len(ts) == 3
    with pytest.raises(MissingChannel):
        ts["b"]
    with pytest.raises(ValueError):
        TimeSeries([0, 0, 1])
    with pytest.raises(ValueError):
        TimeSeries([0, 1], {"a": [1]})


def test_generators_match_liouvillian():
    model = random_qubit_model(np.random.default_rng(7), n_channels=3)
    assert np.allclose(liouvillian_generator(model).matrix(0.9), build_liouvillian(model, 0.9))
    p = DrivenQubitParams(0.2, 0.1, 1.5, 0.7)
    from driven_lindblad.qubit import model_spec

    gen = bloch_generator(model_spec(p))
    assert np.allclose(gen.matrix(1.1), bloch_matrix(p, 1.1), atol=1e-13)


def test_unitary_precession_closed_form():
    # H = sz / 2 rotates the Bloch vector about z at unit angular frequency.
    model = ModelSpec.build(np.diag([0.5, -0.5]))
    t = np.linspace(0, 10, 41)
    ts = evolve_bloch(model, [1.0, 0, 0], t, rtol=1e-11, atol=1e-13)
    assert np.allclose(ts["rx"], np.cos(t), atol=1e-8)
    assert np.allclose(ts["ry"], np.sin(t), atol=1e-8)
    assert np.allclose(ts["purity"], 1.0, atol=1e-8)


def test_dephasing_closed_form():
    # Constant-rate version of the driven model with delta = g = 0: rx decays at gamma0.
    p = DrivenQubitParams(0.0, 0.0, 0.0, 1.0)
    model = ModelSpec.build(np.zeros((2, 2)), [(np.array([[0, -1j], [1j, 0]]) / 2, RateLaw.constant(0.3))])
    t = np.linspace(0, 5, 11)
    ts = evolve_bloch(model, [0.6, 0.5, 0.0], t, rtol=1e-11, atol=1e-13)
    assert np.allclose(ts["rx"], 0.6 * np.exp(-0.3 * t), atol=1e-9)
    assert np.allclose(ts["ry"], 0.5, atol=1e-9)
    assert p.period > 0


@given(st.integers(0, 10_000))
def test_superop_and_bloch_agree(seed):
    rng = np.random.default_rng(seed)
    model = random_qubit_model(rng)
    rho0 = random_qubit_state(rng)
    t = np.linspace(0, 2, 9)
    rhos, R = evolve_superop(model, rho0, t, rtol=1e-11, atol=1e-13)
    ts = evolve_bloch(model, to_bloch(rho0), t, rtol=1e-11, atol=1e-13)
    assert np.abs(R - np.column_stack([ts["rx"], ts["ry"], ts["rz"]])).max() < 1e-8
    assert np.abs(np.trace(rhos, axis1=1, axis2=2) - 1).max() < 1e-9


def test_evolve_bloch_validation():
    p = preset_params("fig1")
    with pytest.raises(DimensionMismatch):
        evolve_bloch(p, [0.1, 0.2], [0, 1])
    with pytest.raises(ValidationError):
        evolve_bloch(p, [1.0, 1.0, 0.0], [0, 1])
    ts = evolve_bloch(p, [0.0, 0.0, 1.0], [0.0])
    assert ts["bloch_norm"][0] == 1.0
    assert ts.markers["ep_times"] == locate_eps(p, 0)


def test_trace_distance():
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1.0])
    assert trace_distance(a, b) == pytest.approx(1.0)
    assert trace_distance(a, a) == 0.0


def test_detect_drops_synthetic():
    t = np.linspace(0, 10, 1001)
    y = np.exp(-0.01 * t) - 0.3 / (1 + np.exp(-(t - 3) * 20)) - 0.3 / (1 + np.exp(-(t - 7) * 20))
    ev = detect_drops(t, y)
    assert len(ev) == 2
    assert ev[0].peak == pytest.approx(3.0, abs=0.02)
    assert ev[1].peak == pytest.approx(7.0, abs=0.02)
    assert ev[0].distance_to(3.0) == 0.0
    assert detect_drops(t, t) == []
    assert detect_drops([0, 1], [1, 0]) == []


def test_drop_event_distance():
    d = DropEvent(1.0, 2.0, 1.5, -1.0)
    assert d.distance_to(0.5) == 0.5
    assert d.distance_to(2.5) == 0.5


def test_log_linear_fit_exact():
    t = np.linspace(0, 3, 20)
    s, a, r2 = log_linear_fit(t, 2.0 * np.exp(-0.7 * t))
    assert s == pytest.approx(-0.7)
    assert a == pytest.approx(np.log(2.0))
    assert r2 == pytest.approx(1.0)


def test_adiabaticity_diagnostic_before_ep():
    # Frozen: the slow branch tracks its adiabatic reference to ~0.1 before the first EP,
    # the fast branch to ~1e-8.
    p = preset_params("fig1")
    t = np.linspace(0, 59.0, 473)
    slow = adiabaticity_diagnostic(p, "+", t)
    fast = adiabaticity_diagnostic(p, "-", t)
    assert slow["trace_distance"].max() < 0.1
    assert fast["trace_distance"].max() < 1e-6
    assert not slow["complex_flag"].any()
    inv = inversion_series(slow)
    assert np.array_equal(inv["inversion"], slow["rz"])
