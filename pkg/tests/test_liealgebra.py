import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from driven_lindblad.errors import ClosureOverflow, DimensionMismatch, XiSingular
from driven_lindblad.liealgebra import (PAULI_LABELS, SuperOpElement, closure, closure_residual, commutator,
                                        decompose, ep_existence_probe, ep_scan, jacobi_residual, model_pieces,
                                        pauli_string, pauli_terms, small_model, small_model_generators,
                                        structure_constants, wei_norman_propagate, wei_norman_xi)
from driven_lindblad.linalg import matrix_exp
from driven_lindblad.qubit import DrivenQubitParams, model_spec
from driven_lindblad.superop import build_liouvillian, propagator

FIVE = ("zI", "Iz", "yy", "yI", "Iy")


def unit(label):
    return SuperOpElement(np.eye(16)[PAULI_LABELS.index(label)], label)


def test_pauli_strings_orthonormal():
    P = np.array([pauli_string(l) for l in PAULI_LABELS])
    G = np.einsum("aij,bij->ab", P.conj(), P) / 4
    assert np.allclose(G, np.eye(16))
    assert np.allclose(pauli_string("xz"), np.kron([[0, 1], [1, 0]], np.diag([1, -1])))


@given(st.integers(0, 10_000))
def test_decompose_roundtrip(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    el = decompose(A)
    assert np.allclose(el.matrix, A)
    assert el.norm == pytest.approx(np.linalg.norm(el.coeffs))


def test_commutator_pauli():
    c = commutator(unit("xI"), unit("yI"))
    assert c.terms() == pytest.approx({"zI": 2j})
    with pytest.raises(DimensionMismatch):
        decompose(np.eye(3))


def test_five_generators_close_at_15():
    c = closure([unit(l) for l in FIVE])
    assert c.dim == 15
    assert jacobi_residual(c) <= 1e-9
    assert closure_residual(c) <= 1e-9
    assert closure([unit("zI"), unit("Iz")]).dim == 2


def test_closure_permutation_invariant():
    dims = {closure([unit(l) for l in perm]).dim for perm in itertools.permutations(FIVE)}
    assert dims == {15}


def test_closure_errors():
    with pytest.raises(ValueError):
        closure([unit("zI"), unit("zI")])
    with pytest.raises(ClosureOverflow):
        closure([unit(l) for l in FIVE], max_dim=10)


def test_structure_constants_antisymmetric():
    c = closure([unit(l) for l in FIVE])
    s = structure_constants(c)
    assert np.allclose(s, -s.transpose(1, 0, 2), atol=1e-12)
    assert np.allclose(c.structure_constants, s)
    X = c.basis[3].matrix + 2 * c.basis[7].matrix
    coords, rem = c.coordinates(X)
    assert np.linalg.norm(rem) < 1e-12
    assert coords[3] == pytest.approx(1) and coords[7] == pytest.approx(2)


def test_small_model_algebra():
    gens = small_model_generators()
    H3, Du, Dd, D33 = (g.matrix for g in gens)
    assert np.allclose(Du @ Dd - Dd @ Du, 2 * (Du - Dd))
    for D in (Du, Dd, D33):
        assert np.allclose(H3 @ D, D @ H3)
    assert closure(gens).dim == 4


def test_model_closures():
    p = DrivenQubitParams(1.0, 0.5, 0.2, 1.0)
    L0 = build_liouvillian(model_spec(p), 0.0)
    assert closure(pauli_terms(L0)).dim == 15
    L0 = build_liouvillian(model_spec(DrivenQubitParams(1.0, 0.0, 0.2, 1.0)), 0.0)
    assert closure(pauli_terms(L0)).dim == 6
    # Hamiltonian piece and unit dissipator alone generate a small algebra.
    assert closure(model_pieces(model_spec(p))).dim == 4


def test_wei_norman_xi_identity_at_zero():
    c = closure(small_model_generators())
    assert np.allclose(wei_norman_xi(np.zeros(c.dim), c), np.eye(c.dim), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        wei_norman_xi(np.zeros(c.dim + 1), c)


def test_wei_norman_small_model_matches_expm():
    Om = 1.0
    model = small_model(Om, 0.2, 0.5, 0.1)
    c = closure(small_model_generators())
    t = np.linspace(0, 5 / Om, 26)
    res = wei_norman_propagate(model, c, t)
    L = build_liouvillian(model, 0.0)
    err = max(np.abs(S - matrix_exp(L * s)).max() for S, s in zip(res.S, t))
    assert err < 1e-8


def test_wei_norman_driven_model_breaks_down_deterministically():
    # Frozen breakdown time of the 15-dim ansatz for this parameter point.
    p = DrivenQubitParams(1.0, 0.5, 0.2, 1.0)
    ms = model_spec(p)
    c = closure(pauli_terms(build_liouvillian(ms, 0.0)))
    t = np.linspace(0, p.period, 201)
    times = []
    for _ in range(2):
        with pytest.raises(XiSingular) as exc:
            wei_norman_propagate(ms, c, t)
        times.append(exc.value.t)
    assert times[0] == times[1]
    assert times[0] == pytest.approx(1.3783, abs=1e-3)
    # Before breakdown the product ansatz is accurate.
    tt = np.linspace(0, 1.2, 7)
    res = wei_norman_propagate(ms, c, tt)
    assert np.abs(res.S[-1] - propagator(ms, 1.2, 1e-3)).max() < 1e-6


def test_wei_norman_rejects_out_of_span():
    c = closure([unit("zI"), unit("Iz")])
    with pytest.raises(ValueError):
        wei_norman_propagate(lambda t: pauli_string("xx"), c, [0.0, 1.0])


def test_ep_scan_and_probe():
    fam = lambda **k: model_spec(DrivenQubitParams(**k))  # noqa: E731
    grid = [dict(delta=0.05, g=0.0, gamma0=10.0, omega=0.05), dict(delta=1.0, g=0.0, gamma0=0.2, omega=1.0)]
    pts = ep_existence_probe(fam, grid, n_scan=801)
    assert pts[0].has_ep and not pts[1].has_ep
    assert pts[0].t_ep == pytest.approx(60.00106360530731, abs=1e-3)
    assert pts[0].closure_dim == 6
    has_ep, gap, cond, t_ep = ep_scan(small_model(1.0, 0.2, 0.5, 0.1))
    assert not has_ep and t_ep is None
