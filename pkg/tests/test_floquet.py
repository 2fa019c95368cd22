import numpy as np
import pytest
from scipy.integrate import solve_ivp

from driven_lindblad.errors import NoBulk
from driven_lindblad.floquet import (EDGE, SCATTERED, build_floquet, floquet_exponents, floquet_spectrum,
                                     gamma_sweep, ipr_vs_spectrum, ladder_candidates, ladder_fit,
                                     sensitivity_probe)
from driven_lindblad.qubit import DrivenQubitParams, bloch_matrix


def scipy_exponents(p):
    """Independent oracle: plain forward monodromy with scipy's DOP853.

    Multipliers below ~1e-16 of the dominant one are lost to rounding here.
    """
    f = lambda t, y: (bloch_matrix(p, t) @ y.reshape(3, 3)).ravel()  # noqa: E731
    sol = solve_ivp(f, (0, p.period), np.eye(3).ravel(), method="DOP853", rtol=1e-12, atol=1e-14)
    mu = np.linalg.eigvals(sol.y[:, -1].reshape(3, 3)).astype(complex)
    return np.log(mu) / p.period


def test_floquet_matrix_structure():
    p = DrivenQubitParams(0.05, 0.0, 0.1, 0.05)
    HF = build_floquet(p, 3)
    H = HF.matrix
    assert H.shape == (21, 21) and HF.size == 21
    assert np.array_equal(HF.rungs, np.arange(-3, 4))
    blk = H[9:12, 9:12]  # m = 0
    assert np.allclose(blk, 1j * bloch_matrix(p, 0.0, gamma=p.gamma0))
    assert np.allclose(H[12:15, 12:15] - blk, p.omega * np.eye(3))
    assert np.allclose(H[9:12, 12:15], -0.5j * p.gamma0 * np.diag([1, 0, 1]))
    assert np.allclose(H[12:15, 9:12], H[9:12, 12:15])
    assert np.count_nonzero(H[:3, 6:]) == 0


def test_unitary_control_ladders():
    # gamma0 = 0: exponents 0 and +-i sqrt(delta^2 + g^2), so eps = omega m + {0, -+sqrt}.
    p = DrivenQubitParams(0.03, 0.01, 0.0, 0.05)
    spec = floquet_spectrum(build_floquet(p, 40))
    c = np.hypot(0.03, 0.01)
    m = np.arange(-40, 41)
    ref = np.concatenate([p.omega * m, p.omega * m + c, p.omega * m - c])
    ev = spec.eigenvalues
    assert np.abs(np.sort(ev.real) - np.sort(ref)).max() < 1e-10
    assert np.abs(ev.imag).max() < 1e-10
    rep = ladder_fit(spec, bulk_margin=5)
    assert rep.n_ladders == 3 and rep.scattered.size == 0


def test_unitary_control_degenerate_offsets():
    p = DrivenQubitParams(0.05, 0.0, 0.0, 0.05)
    rep = ladder_fit(floquet_spectrum(build_floquet(p, 30)), bulk_margin=5)
    assert len(rep.ladders) == 1
    assert rep.ladders[0].multiplicity == 3 and rep.n_ladders == 3


@pytest.mark.parametrize("gamma0", [0.1, 0.5, 5.0])
def test_floquet_exponents_against_scipy(gamma0):
    p = DrivenQubitParams(0.05, 0.0, gamma0, 0.05)
    ours = floquet_exponents(p)
    assert ours.real.sum() == pytest.approx(-2 * gamma0, rel=1e-8)
    if gamma0 <= 0.5:
        ref = scipy_exponents(p)
        assert ours[0].real == pytest.approx(ref.real.max(), abs=1e-8)
        if gamma0 <= 0.1:
            assert np.allclose(np.sort(ours.real), np.sort(ref.real), atol=1e-8)


def test_floquet_exponents_frozen():
    nu = floquet_exponents(DrivenQubitParams(0.05, 0.0, 5.0, 0.05))
    assert nu.real == pytest.approx([-0.0031273931, -4.99687261, -5.0], abs=1e-8)
    nu = floquet_exponents(DrivenQubitParams(0.05, 0.0, 0.1, 0.05))
    assert nu.real == pytest.approx([-0.01160302, -0.08839698, -0.1], abs=1e-7)
    assert sorted(abs(nu.imag)) == pytest.approx([0.0, 0.025, 0.025], abs=1e-9)


def test_fig3a_small_truncation_matches_monodromy():
    p = DrivenQubitParams(0.05, 0.0, 0.1, 0.05)
    spec = floquet_spectrum(build_floquet(p, 60))
    rep = ladder_fit(spec, bulk_margin=15)
    assert rep.n_ladders == 3
    assert rep.scattered.size == 0
    cand = ladder_candidates(p)["monodromy"]
    for lad in rep.ladders:
        dre = (cand.real - lad.offset.real + p.omega / 2) % p.omega - p.omega / 2
        assert np.min(np.hypot(dre, cand.imag - lad.offset.imag)) < 1e-6
    assert np.all(spec.ipr >= 1) and np.all(spec.ipr <= spec.size)
    assert np.all(rep.labels[spec.edge_mask(15)] == EDGE)


def test_ladder_fit_no_bulk():
    spec = floquet_spectrum(build_floquet(DrivenQubitParams(0.05, 0.0, 0.1, 0.05), 5))
    with pytest.raises(NoBulk):
        ladder_fit(spec, bulk_margin=10)


def test_ipr_vs_spectrum_excludes_edges():
    p = DrivenQubitParams(0.05, 0.0, 0.1, 0.05)
    spec = floquet_spectrum(build_floquet(p, 30))
    rows = ipr_vs_spectrum(spec, 5)  # no fit yet: bulk labelled scattered
    assert {r[2] for r in rows} == {SCATTERED}
    rep = ladder_fit(spec, bulk_margin=5)
    rows = ipr_vs_spectrum(spec, 5)
    assert len(rows) == rep.bulk_count
    assert all(r[2] != EDGE for r in rows)


def test_gamma_sweep_small():
    out = gamma_sweep(DrivenQubitParams(0.05, 0.0, 0.1, 0.05), [0.1, 5.0], m_max=60, bulk_margin=15)
    assert out[0]["scattered_fraction"] == 0.0
    assert out[1]["scattered_fraction"] > out[0]["scattered_fraction"]


def test_sensitivity_probe_validation():
    p = DrivenQubitParams(0.05, 0.0, 0.1, 0.05)
    with pytest.raises(ValueError):
        sensitivity_probe(p, (10, 20), 1e-9)
    with pytest.raises(ValueError):
        sensitivity_probe(p, (10, 20, 30), 0.0)
    with pytest.raises(ValueError):
        sensitivity_probe(p, (10, 20, 30), 1e-9, mode="nope")
    rep = sensitivity_probe(p, (20, 30, 40), 1e-9, bulk_margin=5)
    assert len(rep.displacement) == 3 and all(d >= 0 for d in rep.displacement)
