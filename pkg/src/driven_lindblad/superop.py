"""Column-stacked Liouville-space representation of the Lindblad equation.

Convention: ``vec(rho)`` stacks the columns of ``rho`` (Fortran order), so
``vec(A X B) = (B^T kron A) vec(X)``.  With a single channel the generator
reproduces

    drho/dt = -i[H, rho] + gamma(t) (2 L rho L^dag - {L^dag L, rho})

term by term, which in Kronecker form reads

    Lsup = -i (1 kron H - H^T kron 1)
           + gamma (2 L^* kron L - 1 kron L^dag L - (L^dag L)^T kron 1).

A pure state vectorises to ``conj(psi) kron psi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateSteadyState, DimensionMismatch, NoSteadyState, ValidationError
from .linalg import as_matrix, eig_general, matrix_exp

__all__ = [
    "RateLaw",
    "Channel",
    "ModelSpec",
    "vectorize",
    "devectorize",
    "hamiltonian_superop",
    "dissipator_superop",
    "build_liouvillian",
    "no_jump_liouvillian",
    "check_trace_preserving",
    "check_density_matrix",
    "DampingBasis",
    "damping_basis",
    "steady_state",
    "propagator",
    "propagator_self_check",
]


@dataclass(frozen=True)
class RateLaw:
    """Time-dependent rate: ``gamma0`` (constant) or ``gamma0 (1 + cos(omega t))`` (cosine)."""

    kind: str = "constant"
    gamma0: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "cosine"):
            raise ValidationError("kind", "must be 'constant' or 'cosine'")
        if not np.isfinite(self.gamma0) or self.gamma0 < 0:
            raise ValidationError("gamma0", "must be finite and >= 0")
        if not np.isfinite(self.omega) or self.omega < 0:
            raise ValidationError("omega", "must be finite and >= 0")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.gamma0
        return self.gamma0 * (1.0 + np.cos(self.omega * t))

    @classmethod
    def constant(cls, gamma0: float) -> "RateLaw":
        return cls("constant", gamma0, 0.0)

    @classmethod
    def cosine(cls, gamma0: float, omega: float) -> "RateLaw":
        return cls("cosine", gamma0, omega)


@dataclass(frozen=True)
class Channel:
    L: np.ndarray
    rate: RateLaw


@dataclass(frozen=True)
class ModelSpec:
    """Time-independent Hamiltonian plus jump channels with time-dependent rates."""

    H: np.ndarray
    channels: tuple[Channel, ...] = field(default_factory=tuple)

    def __post_init__(self):
        H = as_matrix(self.H, square=True, name="H")
        scale = max(np.linalg.norm(H), 1.0)
        if np.linalg.norm(H - H.conj().T) > 1e-12 * scale:
            raise ValidationError("H", "must be Hermitian")
        chans = []
        for ch in self.channels:
            L = as_matrix(ch.L, square=True, name="L")
            if L.shape != H.shape:
                raise DimensionMismatch(f"jump operator shape {L.shape} != H shape {H.shape}")
            chans.append(Channel(L, ch.rate))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "channels", tuple(chans))

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @classmethod
    def build(cls, H, channels: Sequence[tuple] = ()) -> "ModelSpec":
        """Convenience constructor from ``(L, RateLaw)`` pairs."""
        return cls(H, tuple(Channel(np.asarray(L), r) for L, r in channels))

    def rates(self, t: float) -> list[float]:
        return [ch.rate(t) for ch in self.channels]

    def period(self) -> float | None:
        """Common drive period, or None when all rates are constant."""
        omegas = {ch.rate.omega for ch in self.channels if ch.rate.kind == "cosine" and ch.rate.omega > 0}
        if not omegas:
            return None
        if len(omegas) > 1:
            raise ValidationError("channels", "rates with different drive frequencies have no common period")
        return 2 * np.pi / omegas.pop()


def vectorize(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    return rho.reshape(-1, order="F").copy()


def devectorize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatch(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F").copy()


def hamiltonian_superop(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator_superop(L) -> np.ndarray:
    """Unit-rate image of ``2 L rho L^dag - {L^dag L, rho}``."""
    L = np.asarray(L, dtype=complex)
    eye = np.eye(L.shape[0])
    LdL = L.conj().T @ L
    return 2 * np.kron(L.conj(), L) - np.kron(eye, LdL) - np.kron(LdL.T, eye)


def build_liouvillian(model: ModelSpec, t: float) -> np.ndarray:
    Lsup = hamiltonian_superop(model.H)
    for ch in model.channels:
        g = ch.rate(t)
        if g != 0.0:
            Lsup = Lsup + g * dissipator_superop(ch.L)
    return Lsup


def no_jump_liouvillian(model: ModelSpec, t: float) -> np.ndarray:
    """Liouvillian with the recycling term ``2 L rho L^dag`` dropped (not trace preserving)."""
    Lsup = hamiltonian_superop(model.H)
    eye = np.eye(model.dim)
    for ch in model.channels:
        LdL = ch.L.conj().T @ ch.L
        Lsup = Lsup - ch.rate(t) * (np.kron(eye, LdL) + np.kron(LdL.T, eye))
    return Lsup


def check_trace_preserving(Lmat) -> float:
    """``|vec(I)^H Lmat|_inf``; zero for any trace-preserving generator."""
    Lmat = np.asarray(Lmat, dtype=complex)
    d = int(round(np.sqrt(Lmat.shape[0])))
    if d * d != Lmat.shape[0] or Lmat.shape[0] != Lmat.shape[1]:
        raise DimensionMismatch(f"superoperator shape {Lmat.shape} is not D^2 x D^2")
    return float(np.max(np.abs(vectorize(np.eye(d)).conj() @ Lmat)))


def check_density_matrix(rho, tol: float = 1e-10) -> dict:
    """Violations of the density-matrix invariants (Hermiticity, unit trace, positivity)."""
    rho = np.asarray(rho, dtype=complex)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    hrho = (rho + rho.conj().T) / 2
    report = {
        "hermiticity": herm,
        "trace_error": float(abs(np.trace(rho) - 1.0)),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh(hrho))),
    }
    report["valid"] = (
        report["hermiticity"] <= tol and report["trace_error"] <= tol and report["min_eigenvalue"] >= -tol
    )
    return report


@dataclass(frozen=True)
class DampingBasis:
    """Eigenmodes of a time-frozen Liouvillian, sorted by decreasing real part.

    ``right`` and ``left`` hold vectors as columns and are scaled so that
    ``left[:, n]^H right[:, m] = delta_nm``.  The two diagnostics report,
    without correcting, how far the spectrum is from closure under complex
    conjugation and how far non-steady modes are from being traceless.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    steady_indices: tuple[int, ...]
    conjugation_mismatch: float
    max_trace_nonsteady: float
    vector_condition: float

    @property
    def steady_index(self) -> int | None:
        return self.steady_indices[0] if len(self.steady_indices) == 1 else None

    def expand(self, rho) -> np.ndarray:
        """Mode amplitudes ``d_n`` with ``vec(rho) = sum_n d_n right[:, n]``."""
        return self.left.conj().T @ vectorize(rho)

    def resum(self, amplitudes, t: float = 0.0) -> np.ndarray:
        return devectorize(self.right @ (np.asarray(amplitudes) * np.exp(self.values * t)))


def _conjugation_mismatch(values: np.ndarray) -> float:
    # Greedy matching of each eigenvalue with the nearest conjugate of another.
    remaining = list(values.conj())
    worst = 0.0
    for mu in values:
        dists = np.abs(np.array(remaining) - mu)
        k = int(np.argmin(dists))
        worst = max(worst, float(dists[k]))
        remaining.pop(k)
    return worst


def damping_basis(Lmat, tol: float | None = None) -> DampingBasis:
    Lmat = as_matrix(Lmat, square=True, name="Liouvillian")
    d = int(round(np.sqrt(Lmat.shape[0])))
    if d * d != Lmat.shape[0]:
        raise DimensionMismatch(f"superoperator shape {Lmat.shape} is not D^2 x D^2")
    scale = max(np.linalg.norm(Lmat), 1.0)
    if tol is None:
        tol = 1e-10 * scale
    dec = eig_general(Lmat, want_left=True)
    order = np.lexsort((-dec.values.imag, -dec.values.real))
    values = dec.values[order]
    right = dec.right_vectors[:, order]
    left = dec.left_vectors[:, order]
    overlaps = np.sum(left.conj() * right, axis=0)
    # Biorthogonal scaling; an overlap near zero signals coalescence and is left to the condition number.
    safe = np.where(np.abs(overlaps) > 1e-300, overlaps, 1.0)
    left = left / safe.conj()
    steady = tuple(int(i) for i in np.flatnonzero(np.abs(values) <= tol))
    identity = vectorize(np.eye(d))
    traces = np.abs(identity @ right)
    nonsteady = [i for i in range(values.size) if i not in steady]
    max_trace = float(np.max(traces[nonsteady])) if nonsteady else 0.0
    return DampingBasis(
        values=values,
        right=right,
        left=left,
        steady_indices=steady,
        conjugation_mismatch=_conjugation_mismatch(values),
        max_trace_nonsteady=max_trace,
        vector_condition=dec.vector_condition,
    )


def steady_state(model: ModelSpec, t: float = 0.0, tol: float | None = None) -> np.ndarray:
    """Unique zero mode of the frozen Liouvillian at time ``t`` as a unit-trace density matrix."""
    basis = damping_basis(build_liouvillian(model, t), tol)
    if not basis.steady_indices:
        raise NoSteadyState(f"no eigenvalue within tolerance of zero (closest: {np.min(np.abs(basis.values)):.3e})")
    if len(basis.steady_indices) > 1:
        raise DegenerateSteadyState(f"{len(basis.steady_indices)} zero modes; the steady state is not unique")
    rho = devectorize(basis.right[:, basis.steady_indices[0]])
    rho = rho / np.trace(rho)
    return (rho + rho.conj().T) / 2


def propagator(model: ModelSpec, t: float, dt: float) -> np.ndarray:
    """Midpoint product ``prod_k exp(Lsup(t_k + h/2) h)`` over ``ceil(t/dt)`` equal steps.

    Autonomous models (all rates constant) return ``exp(Lsup t)`` directly.
    """
    D2 = model.dim ** 2
    if t == 0:
        return np.eye(D2, dtype=complex)
    if dt <= 0 or t < 0:
        raise ValueError("need t >= 0 and dt > 0")
    n = max(1, int(np.ceil(t / dt - 1e-9)))
    h = t / n
    if all(ch.rate.kind == "constant" for ch in model.channels):
        return matrix_exp(build_liouvillian(model, 0.0) * t)
    Lh = hamiltonian_superop(model.H)
    Ds = [dissipator_superop(ch.L) for ch in model.channels]
    S = np.eye(D2, dtype=complex)
    for k in range(n):
        tm = (k + 0.5) * h
        G = Lh.copy()
        for ch, Dk in zip(model.channels, Ds):
            G += ch.rate(tm) * Dk
        S = matrix_exp(G * h) @ S
    return S


def propagator_self_check(model: ModelSpec, t: float, dt: float) -> float:
    """Frobenius difference between step sizes ``dt`` and ``dt/2`` (convergence estimate)."""
    return float(np.linalg.norm(propagator(model, t, dt) - propagator(model, t, dt / 2)))
