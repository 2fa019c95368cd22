"""Generalised Bloch-vector representation.

A state of dimension ``D`` is written as

    rho = (1/D) (I + c R . lambda),   c = sqrt(D (D - 1) / 2),

with Hermitian traceless generators normalised to ``Tr[l_i l_j] = D delta_ij``
(the usual Gell-Mann normalisation ``2 delta_ij`` rescaled by ``sqrt(D/2)``).
For ``D = 2`` the generators are exactly the Pauli matrices and ``c = 1``.

The Bloch Liouvillian ``(M, b)`` with ``dR/dt = M R + b`` is obtained by
projecting the Liouvillian's action on the generators:

    M_ij = Tr[l_i Lsup(l_j)] / D,    b_i = Tr[l_i Lsup(I)] / (c D).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .superop import ModelSpec, build_liouvillian, vectorize

__all__ = [
    "GeneratorBasis",
    "generator_basis",
    "bloch_scale",
    "to_bloch",
    "from_bloch",
    "BlochLiouvillian",
    "build_bloch_liouvillian",
    "extend",
    "similarity_matrix",
    "V_SINGULAR_VARIANT",
    "similarity_check",
    "purity",
]


@dataclass(frozen=True)
class GeneratorBasis:
    dim: int
    lambdas: tuple[np.ndarray, ...]

    @property
    def stacked(self) -> np.ndarray:
        return np.array(self.lambdas)


@lru_cache(maxsize=None)
def _gell_mann(D: int) -> tuple[np.ndarray, ...]:
    # Ordering generalises lambda_1..lambda_8: for each column k the symmetric and
    # antisymmetric off-diagonals (j, k), j < k, then the k-th diagonal generator.
    mats = []
    for k in range(1, D):
        for j in range(k):
            s = np.zeros((D, D), complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((D, D), complex)
            a[j, k] = -1j
            a[k, j] = 1j
            mats += [s, a]
        d = np.zeros((D, D), complex)
        d[np.arange(k), np.arange(k)] = 1.0
        d[k, k] = -k
        mats.append(d * np.sqrt(2.0 / (k * (k + 1))))
    scale = np.sqrt(D / 2.0)
    out = []
    for m in mats:
        m = m * scale
        m.setflags(write=False)
        out.append(m)
    return tuple(out)


def generator_basis(D: int) -> GeneratorBasis:
    """Generalised Gell-Mann matrices with ``Tr[l_i l_j] = D delta_ij`` (Pauli matrices for ``D = 2``)."""
    if D < 2:
        raise ValueError("dimension must be >= 2")
    return GeneratorBasis(D, _gell_mann(int(D)))


def bloch_scale(D: int) -> float:
    return float(np.sqrt(D * (D - 1) / 2.0))


def to_bloch(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    D = rho.shape[0]
    lam = generator_basis(D).stacked
    return np.einsum("kij,ji->k", lam, rho).real / bloch_scale(D)


def from_bloch(R, D: int | None = None, alpha: float = 1.0) -> np.ndarray:
    """Density matrix for Bloch vector ``R``; positivity is not checked for ``D > 2``."""
    R = np.asarray(R)
    if D is None:
        D = int(round(np.sqrt(R.size + 1)))
    if R.size != D * D - 1:
        raise DimensionMismatch(f"Bloch vector length {R.size} does not match D = {D}")
    lam = generator_basis(D).stacked
    return (alpha * np.eye(D) + bloch_scale(D) * np.einsum("k,kij->ij", R, lam)) / D


def purity(R) -> float:
    """``Tr rho^2`` of a qubit with Bloch vector ``R``."""
    return float((1.0 + np.dot(R, R)) / 2.0)


@dataclass(frozen=True)
class BlochLiouvillian:
    M: np.ndarray
    b: np.ndarray

    def rhs(self, R: np.ndarray) -> np.ndarray:
        return self.M @ R + self.b


def _projection(D: int, Lsup: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = generator_basis(D).stacked
    vecs = np.array([vectorize(l) for l in lam]).T  # columns vec(l_j)
    images = Lsup @ vecs
    # Tr[l_i X] = vec(l_i^T) . vec(X) = vec(l_i).conj() . vec(X) for Hermitian l_i.
    M = vecs.conj().T @ images / D
    b = vecs.conj().T @ (Lsup @ vectorize(np.eye(D))) / (bloch_scale(D) * D)
    return M, b


def build_bloch_liouvillian(model: ModelSpec, t: float) -> BlochLiouvillian:
    """Project the Liouvillian at time ``t`` onto the generator basis.

    Raises:
        ValidationError: if ``M`` or ``b`` carry an imaginary residue above 1e-12
            (the generator does not map Hermitian matrices to Hermitian ones).
    """
    D = model.dim
    M, b = _projection(D, build_liouvillian(model, t))
    scale = max(1.0, float(np.abs(M).max()), float(np.abs(b).max()))
    resid = max(float(np.abs(M.imag).max()), float(np.abs(b.imag).max()))
    if resid > 1e-12 * scale:
        raise ValidationError("model", f"Bloch Liouvillian has imaginary residue {resid:.2e}")
    return BlochLiouvillian(M.real.copy(), b.real.copy())


def extend(bl: BlochLiouvillian) -> np.ndarray:
    """Homogeneous form acting on ``(alpha, R)``: ``[[0, 0], [b, M]]``."""
    n = bl.M.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[1:, 0] = bl.b
    out[1:, 1:] = bl.M
    return out


def similarity_matrix(D: int) -> np.ndarray:
    """Matrix ``V`` with ``vec(rho) = V (alpha, R)`` for the column-stacking convention."""
    lam = generator_basis(D).stacked
    cols = [vectorize(np.eye(D)) / D] + [bloch_scale(D) * vectorize(l) / D for l in lam]
    return np.array(cols).T


# A frequently quoted 4x4 variant for the qubit.  Its third row equals -i times the second,
# so it is singular; the column-stacking map differs only in that row: (0, 1, -i, 0)/2.
V_SINGULAR_VARIANT = 0.5 * np.array(
    [[1, 0, 0, 1], [0, 1, 1j, 0], [0, -1j, 1, 0], [1, 0, 0, -1]], dtype=complex
)


def similarity_check(model: ModelSpec, t: float) -> float:
    """``|V Mext V^-1 - Lsup(t)|_F`` for a qubit model (zero up to rounding)."""
    if model.dim != 2:
        raise DimensionMismatch("similarity check is only defined for qubits")
    V = similarity_matrix(2)
    Mext = extend(build_bloch_liouvillian(model, t))
    return float(np.linalg.norm(V @ Mext @ np.linalg.inv(V) - build_liouvillian(model, t)))
