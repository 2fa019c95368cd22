import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from driven_lindblad.bloch import (V_SINGULAR_VARIANT, bloch_scale, build_bloch_liouvillian, extend, from_bloch,
                                   generator_basis, purity, similarity_check, similarity_matrix, to_bloch)
from driven_lindblad.errors import DimensionMismatch
from driven_lindblad.oracles import random_hermitian, random_qubit_model, spectrum_distance
from driven_lindblad.superop import ModelSpec, RateLaw, build_liouvillian, vectorize

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


@pytest.mark.parametrize("D", [2, 3, 4])
def test_generator_basis_orthogonality(D):
    lam = generator_basis(D).stacked
    assert lam.shape == (D * D - 1, D, D)
    G = np.einsum("aij,bji->ab", lam, lam)
    assert np.allclose(G, D * np.eye(D * D - 1), atol=1e-13)
    assert np.allclose(np.trace(lam, axis1=1, axis2=2), 0)
    assert np.allclose(lam, lam.conj().transpose(0, 2, 1))
    assert bloch_scale(D) == pytest.approx(np.sqrt(D * (D - 1) / 2))


def test_qubit_basis_is_pauli():
    lam = generator_basis(2).stacked
    assert np.allclose(lam, [SX, SY, SZ])
    with pytest.raises(ValueError):
        generator_basis(1)


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_bloch_roundtrip(seed, D):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, D)
    rho = (A @ A.conj().T)
    rho /= np.trace(rho)
    assert np.allclose(from_bloch(to_bloch(rho)), rho, atol=1e-12)


def test_purity_and_pure_state():
    rho = np.array([[1, 0], [0, 0]], dtype=complex)
    R = to_bloch(rho)
    assert np.allclose(R, [0, 0, 1])
    assert purity(R) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatch):
        from_bloch(np.zeros(4), D=2)


def test_hamiltonian_projection():
    # Frozen oracle: H = delta sz + g sx gives 2 [[0,-delta,0],[delta,0,-g],[0,g,0]].
    d, g = 0.37, -1.2
    bl = build_bloch_liouvillian(ModelSpec.build(d * SZ + g * SX), 0.0)
    assert np.allclose(bl.M, 2 * np.array([[0, -d, 0], [d, 0, -g], [0, g, 0]]), atol=1e-14)
    assert np.allclose(bl.b, 0)


def _closed_form_dissipator(l):
    """Hand-derived qubit dissipator projection per unit coefficient (plus conjugate)."""
    l1, lx, ly, lz = l
    c = np.conj
    M = np.array([
        [-(abs(ly) ** 2 + abs(lz) ** 2), lx * c(ly) + 1j * l1 * c(lz), c(lz) * lx - 1j * l1 * c(ly)],
        [c(lx) * ly - 1j * l1 * c(lz), -(abs(lx) ** 2 + abs(lz) ** 2), ly * c(lz) + 1j * l1 * c(lx)],
        [lz * c(lx) + 1j * l1 * c(ly), c(ly) * lz - 1j * l1 * c(lx), -(abs(lx) ** 2 + abs(ly) ** 2)],
    ])
    b = 2j * np.array([c(ly) * lz, c(lz) * lx, c(lx) * ly])
    return (M + c(M)).real, (b + c(b)).real


@given(st.integers(0, 10_000))
def test_dissipator_projection_closed_form(seed):
    rng = np.random.default_rng(seed)
    l = rng.normal(size=4) + 1j * rng.normal(size=4)
    L = l[0] * np.eye(2) + l[1] * SX + l[2] * SY + l[3] * SZ
    bl = build_bloch_liouvillian(ModelSpec.build(np.zeros((2, 2)), [(L, RateLaw.constant(1.0))]), 0.0)
    M, b = _closed_form_dissipator(l)
    # Unit-rate 2 L rho L^dag - {L^dag L, rho}: twice the per-coefficient form, pump sign flipped.
    assert np.allclose(bl.M, 2 * M, atol=1e-12)
    assert np.allclose(bl.b, -2 * b, atol=1e-12)


def test_hermitian_jump_has_no_pump():
    bl = build_bloch_liouvillian(ModelSpec.build(SZ, [(SX + 0.3 * SY, RateLaw.constant(1.0))]), 0.0)
    assert np.allclose(bl.b, 0, atol=1e-15)


def test_similarity_matrix_column_stacking():
    V = similarity_matrix(2)
    rho = from_bloch([0.1, -0.4, 0.3])
    assert np.allclose(V @ np.r_[1.0, to_bloch(rho)], vectorize(rho))
    # The variant is singular; ours differs from it in one row only.
    assert np.linalg.matrix_rank(V_SINGULAR_VARIANT) == 3
    diff = np.abs(V - V_SINGULAR_VARIANT).sum(axis=1)
    assert np.count_nonzero(diff > 1e-15) == 1


@given(st.integers(0, 10_000))
def test_extended_bloch_similar_to_liouvillian(seed):
    model = random_qubit_model(np.random.default_rng(seed))
    assert similarity_check(model, 0.4) < 1e-10
    ext = extend(build_bloch_liouvillian(model, 0.4))
    assert spectrum_distance(np.linalg.eigvals(ext), np.linalg.eigvals(build_liouvillian(model, 0.4))) < 1e-9


def test_qutrit_projection_consistent():
    rng = np.random.default_rng(3)
    H = random_hermitian(rng, 3)
    L = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    model = ModelSpec.build(H, [(L, RateLaw.constant(0.5))])
    bl = build_bloch_liouvillian(model, 0.0)
    rho = from_bloch(0.2 * rng.normal(size=8))
    drho = (build_liouvillian(model, 0.0) @ vectorize(rho)).reshape(3, 3, order="F")
    assert np.allclose(bl.rhs(to_bloch(rho)), to_bloch(drho), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        similarity_check(model, 0.0)
