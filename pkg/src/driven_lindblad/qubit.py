"""Periodically dephased qubit.

The Bloch Liouvillian studied here is

    M(t) = [[-gamma(t), -delta, 0],
            [ delta,     0,     -g],
            [ 0,         g,     -gamma(t)]],   gamma(t) = gamma0 (1 + cos(omega t)).

As a Lindblad model it is realised by ``H = (delta sz + g sx) / 2`` and a single
jump operator ``L = sy / 2`` with rate ``gamma(t)``: with the
``2 L rho L^dag - {L^dag L, rho}`` dissipator this reproduces ``M(t)`` exactly
(see :func:`model_spec`).  Its eigenvalues are ``-gamma`` and
``-gamma/2 +- sqrt(gamma^2/4 - g^2 - delta^2)``; the last two coalesce at an
exceptional point when ``gamma(t) = 2 sqrt(g^2 + delta^2)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BranchCrossing, ValidationError
from .superop import ModelSpec, RateLaw

__all__ = [
    "PAULI",
    "DrivenQubitParams",
    "AdiabaticTriple",
    "gamma_of_t",
    "bloch_matrix",
    "model_spec",
    "adiabatic_eigenvalues",
    "radicand",
    "locate_eps",
    "AdiabaticState",
    "adiabatic_state",
    "BRANCHES",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

BRANCHES = ("0", "+", "-")


@dataclass(frozen=True)
class DrivenQubitParams:
    delta: float
    g: float
    gamma0: float
    omega: float

    def __post_init__(self):
        for name in ("delta", "g", "gamma0", "omega"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.gamma0 < 0:
            raise ValidationError("gamma0", "must be >= 0")
        if self.omega <= 0:
            raise ValidationError("omega", "must be > 0")

    @property
    def coupling(self) -> float:
        """``sqrt(g^2 + delta^2)``."""
        return float(np.hypot(self.g, self.delta))

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega


@dataclass(frozen=True)
class AdiabaticTriple:
    t: float
    nu0: complex
    nu_plus: complex
    nu_minus: complex

    def as_dict(self) -> dict[str, complex]:
        return {"0": self.nu0, "+": self.nu_plus, "-": self.nu_minus}


def gamma_of_t(p: DrivenQubitParams, t):
    return p.gamma0 * (1.0 + np.cos(p.omega * np.asarray(t, dtype=float)))


def bloch_matrix(p: DrivenQubitParams, t: float, gamma: float | None = None) -> np.ndarray:
    gm = gamma_of_t(p, t) if gamma is None else gamma
    return np.array([[-gm, -p.delta, 0.0], [p.delta, 0.0, -p.g], [0.0, p.g, -gm]])


def model_spec(p: DrivenQubitParams) -> ModelSpec:
    """Lindblad model whose Bloch Liouvillian is :func:`bloch_matrix`."""
    H = (p.delta * PAULI["z"] + p.g * PAULI["x"]) / 2
    return ModelSpec.build(H, [(PAULI["y"] / 2, RateLaw.cosine(p.gamma0, p.omega))])


def radicand(p: DrivenQubitParams, t):
    gm = gamma_of_t(p, t)
    return gm * gm / 4.0 - p.g ** 2 - p.delta ** 2


def adiabatic_eigenvalues(p: DrivenQubitParams, t: float) -> AdiabaticTriple:
    gm = float(gamma_of_t(p, t))
    root = np.sqrt(complex(radicand(p, t)))
    return AdiabaticTriple(t=float(t), nu0=complex(-gm), nu_plus=-gm / 2 + root, nu_minus=-gm / 2 - root)


def locate_eps(p: DrivenQubitParams, n_max: int = 0, polish: bool = True) -> list[float]:
    """Exceptional-point times in the drive periods ``[n T, (n + 1) T)``, ``n = 0 .. n_max``.

    The radicand vanishes at ``omega t = +-arccos(2 sqrt(g^2+delta^2)/gamma0 - 1) + 2 pi n``,
    so each period holds a pair (one tangential point, at ``omega t = 0 mod 2 pi``,
    when ``gamma0 = sqrt(g^2 + delta^2)``).  With ``polish`` each
    time is refined by Brent's method on the radicand ``gamma(t)^2/4 - g^2 - delta^2``.
    An empty list means the parameters admit no exceptional point.
    """
    c = p.coupling
    if p.gamma0 == 0.0 or c > p.gamma0:
        return []
    phase = float(np.arccos(np.clip(2 * c / p.gamma0 - 1.0, -1.0, 1.0)))
    T = p.period
    times = []
    for n in range(0, n_max + 2):
        for ph in (phase, -phase):
            t = (ph + 2 * np.pi * n) / p.omega
            if polish and phase > 0:
                t = _polish(p, t, phase)
            times.append(t)
    floor = 1e-12 * T
    horizon = (n_max + 1) * T - floor
    out = sorted(max(0.0, t) for t in times if -floor <= t < horizon)
    # Collapse coincident branches (tangential point at phase == 0).
    dedup: list[float] = []
    for t in out:
        if not dedup or t - dedup[-1] > 1e-9 * T:
            dedup.append(t)
    return dedup


def _polish(p: DrivenQubitParams, t: float, phase: float) -> float:
    # Bracket inside the monotone stretch of cos around the closed-form root.
    half = 0.5 * min(phase, np.pi - phase) / p.omega
    if half <= 0:
        return t
    a, b = t - half, t + half
    fa, fb = radicand(p, a), radicand(p, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        return t
    return float(brentq(lambda s: radicand(p, s), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


@dataclass
class AdiabaticState:
    """Continuity-tracked instantaneous eigenvector scaled by ``exp(int nu dt)``."""

    t: np.ndarray
    R: np.ndarray  # complex, shape (n, 3)
    eigenvalues: np.ndarray
    complex_flag: np.ndarray  # sample can no longer be represented by a real vector
    near_ep: np.ndarray
    crossings: list[float]

    @property
    def R_real(self) -> np.ndarray:
        return self.R.real


def _branch_index(vals: np.ndarray, branch: str, p: DrivenQubitParams, t: float) -> int:
    target = adiabatic_eigenvalues(p, t).as_dict()[branch]
    return int(np.argmin(np.abs(vals - target)))


def adiabatic_state(
    p: DrivenQubitParams, branch: str, t_grid, ep_distance: float = 1e-6, imag_tol: float = 1e-9
) -> AdiabaticState:
    """Adiabatic reference vector ``exp(int_0^t nu_n) R_n(t)`` on ``t_grid``.

    The branch is chosen by label at ``t = 0`` and followed by maximal overlap
    afterwards; each eigenvector is normalised to unit length (the norm of the
    starting vector) and its phase aligned with the previous sample.  The
    exponent is integrated with the trapezoid rule on ``t_grid``.  Samples
    within ``ep_distance`` of an exceptional point are flagged and a
    :class:`BranchCrossing` warning is issued; this is not fatal.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if abs(adiabatic_eigenvalues(p, 0.0).as_dict()[branch].imag) > 0:
        raise ValueError(f"branch {branch!r} has a complex eigenvalue at t = 0; no physical starting vector")
    n = t_grid.size
    vecs = np.empty((n, 3), complex)
    nus = np.empty(n, complex)
    eps = locate_eps(p, int(np.ceil(t_grid[-1] / p.period)) + 1)
    near = np.zeros(n, bool)
    prev = None
    for i, t in enumerate(t_grid):
        vals, V = np.linalg.eig(bloch_matrix(p, t))
        if prev is None:
            k = _branch_index(vals, branch, p, t)
            v = V[:, k].real.astype(complex)
            v /= np.linalg.norm(v)
            # Deterministic sign: largest component positive.
            v *= np.sign(v.real[np.argmax(np.abs(v.real))])
        else:
            overlaps = np.abs(V.conj().T @ prev)
            k = int(np.argmax(overlaps))
            v = V[:, k].astype(complex) / np.linalg.norm(V[:, k])
            ph = np.vdot(v, prev)
            v *= ph / abs(ph) if abs(ph) > 0 else 1.0
        vecs[i] = v
        nus[i] = vals[k]
        prev = v
        if eps and min(abs(t - e) for e in eps) <= ep_distance:
            near[i] = True
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (nus[1:] + nus[:-1]) * np.diff(t_grid))])
    R = np.exp(integral)[:, None] * vecs
    scale = np.maximum(np.linalg.norm(R, axis=1), 1e-300)
    cflag = np.max(np.abs(R.imag), axis=1) > imag_tol * np.maximum(scale, 1.0)
    crossings = [e for e in eps if t_grid[0] <= e <= t_grid[-1]]
    if near.any():
        warnings.warn(
            BranchCrossing(f"{int(near.sum())} samples within {ep_distance:g} of an exceptional point"),
            stacklevel=2,
        )
    return AdiabaticState(t=t_grid, R=R, eigenvalues=nus, complex_flag=cflag, near_ep=near, crossings=crossings)
