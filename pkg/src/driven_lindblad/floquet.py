"""Truncated non-Hermitian Floquet Hamiltonian of the driven qubit and its spectrum.

With ``H(t) = i M(t)`` and ``M(t) = Mbar + Mc cos(omega t)``, where ``Mbar`` is the
Bloch matrix at ``gamma = gamma0`` and ``Mc = -gamma0 diag(1, 0, 1)``, the Fourier
ladder ``m = -m_max .. m_max`` turns the periodic problem into a static
block-tridiagonal matrix:

    rung block     omega m I_3 + i Mbar
    hopping block  i Mc / 2            (both neighbours)

Eigenvalues ``eps`` of this matrix are related to Floquet exponents ``nu`` of
``dR/dt = M(t) R`` by ``eps = omega m + i nu``; in the untruncated lattice each
exponent generates a complete Wannier-Stark ladder.  Truncation produces edge
states, and for strong driving the eigenproblem becomes so ill-conditioned that
part of the bulk spectrum scatters away from the ladders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoBulk, ValidationError
from .linalg import eig_general, ode_integrate
from .qubit import DrivenQubitParams, adiabatic_eigenvalues, bloch_matrix

__all__ = [
    "SCATTERED",
    "EDGE",
    "FloquetHamiltonian",
    "build_floquet",
    "FloquetSpectrum",
    "floquet_spectrum",
    "Ladder",
    "LadderReport",
    "ladder_fit",
    "floquet_exponents",
    "ladder_candidates",
    "SensitivityReport",
    "sensitivity_probe",
    "ipr_vs_spectrum",
    "gamma_sweep",
]

SCATTERED = -1
EDGE = -2
LAMBDA = np.diag([1.0, 0.0, 1.0])


@dataclass(frozen=True)
class FloquetHamiltonian:
    m_max: int
    omega: float
    A_diag: np.ndarray
    A_hop: np.ndarray
    block_dim: int = 3

    @property
    def n_rungs(self) -> int:
        return 2 * self.m_max + 1

    @property
    def rungs(self) -> np.ndarray:
        return np.arange(-self.m_max, self.m_max + 1)

    @property
    def size(self) -> int:
        return self.block_dim * self.n_rungs

    @property
    def matrix(self) -> np.ndarray:
        b = self.block_dim
        n = self.n_rungs
        H = np.zeros((b * n, b * n), complex)
        I = np.eye(b)
        for k, m in enumerate(self.rungs):
            s = slice(b * k, b * k + b)
            H[s, s] = self.omega * m * I + self.A_diag
            if k + 1 < n:
                t = slice(b * k + b, b * k + 2 * b)
                H[s, t] = self.A_hop
                H[t, s] = self.A_hop
        return H


def build_floquet(p: DrivenQubitParams, m_max: int) -> FloquetHamiltonian:
    if int(m_max) != m_max or m_max < 1:
        raise ValidationError("m_max", "must be an integer >= 1")
    Mbar = bloch_matrix(p, 0.0, gamma=p.gamma0)
    Mc = -p.gamma0 * LAMBDA
    return FloquetHamiltonian(int(m_max), float(p.omega), 1j * Mbar, 0.5j * Mc)


@dataclass
class FloquetSpectrum:
    eigenvalues: np.ndarray
    ipr: np.ndarray
    center_of_mass: np.ndarray
    m_max: int
    omega: float
    residual: float
    vectors: np.ndarray | None = field(default=None, repr=False)
    ladder_id: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def edge_mask(self, margin: int) -> np.ndarray:
        return np.abs(self.center_of_mass) > self.m_max - margin


def _ipr_and_com(V: np.ndarray, m_max: int, block_dim: int = 3) -> tuple[np.ndarray, np.ndarray]:
    P = np.abs(V) ** 2
    P = P / P.sum(axis=0)
    ipr = 1.0 / np.sum(P * P, axis=0)
    per_rung = P.reshape(2 * m_max + 1, block_dim, -1).sum(axis=1)
    com = np.arange(-m_max, m_max + 1) @ per_rung
    return ipr, com


def floquet_spectrum(HF: FloquetHamiltonian, tol: float = 1e-10, keep_vectors: bool = False) -> FloquetSpectrum:
    """Full eigen-decomposition with per-state IPR ``1 / sum |c|^4`` and mean rung ``<m>``."""
    dec = eig_general(HF.matrix, tol=tol)
    ipr, com = _ipr_and_com(dec.right_vectors, HF.m_max, HF.block_dim)
    return FloquetSpectrum(
        eigenvalues=dec.values,
        ipr=ipr,
        center_of_mass=com,
        m_max=HF.m_max,
        omega=HF.omega,
        residual=dec.residual,
        vectors=dec.right_vectors if keep_vectors else None,
    )


@dataclass(frozen=True)
class Ladder:
    offset: complex  # eps = omega m + offset
    count: int
    multiplicity: int  # coincident ladders sharing this offset
    residual: float

    @property
    def nu(self) -> complex:
        """Floquet exponent: ``offset = i nu``."""
        return -1j * self.offset


@dataclass
class LadderReport:
    ladders: list[Ladder]
    labels: np.ndarray  # ladder index, SCATTERED or EDGE per state
    bulk_count: int
    expected_rungs: int
    tol: float

    @property
    def n_ladders(self) -> int:
        return sum(l.multiplicity for l in self.ladders)

    @property
    def scattered(self) -> np.ndarray:
        return np.flatnonzero(self.labels == SCATTERED)

    @property
    def scattered_fraction(self) -> float:
        return self.scattered.size / self.bulk_count

    @property
    def residual(self) -> float:
        return max((l.residual for l in self.ladders), default=0.0)


def _fold(eps: np.ndarray, omega: float) -> np.ndarray:
    """Re part mapped to the unit circle (period omega), Im part kept."""
    return np.exp(2j * np.pi * eps.real / omega)


def _distance(eps_a, eps_b, omega):
    # Circular distance of the real parts modulo omega, plus the imaginary gap.
    dre = np.abs(np.angle(_fold(eps_a, omega) * np.conj(_fold(eps_b, omega)))) * omega / (2 * np.pi)
    return np.hypot(dre, np.abs(eps_a.imag - eps_b.imag))


def _mean_offset(eps: np.ndarray, omega: float) -> complex:
    z = _fold(eps, omega).mean()
    re = float(_canonical_re(np.angle(z) * omega / (2 * np.pi), omega))
    return complex(re, eps.imag.mean())


def _ladder_stats(eps: np.ndarray, offset: complex, omega: float) -> tuple[float, int]:
    m = np.round((eps - offset).real / omega)
    resid = float(np.max(np.abs(eps - omega * m - offset)))
    _, counts = np.unique(m, return_counts=True)
    return resid, max(1, int(np.median(counts)))


def ladder_fit(spec: FloquetSpectrum, omega: float | None = None, bulk_margin: int = 25,
               tol: float | None = None, min_fraction: float = 0.8) -> LadderReport:
    """Group bulk eigenvalues into Wannier-Stark ladders ``eps = omega m + offset``.

    States whose mean rung lies within ``bulk_margin`` of the truncation edge are
    labelled ``EDGE``.  Bulk eigenvalues are folded modulo ``omega`` and grouped
    greedily: the seed is the state with most neighbours within ``tol``
    (default ``1e-6 omega``), the group is re-gathered around its mean offset
    twice, and it is accepted as a ladder when it holds at least ``min_fraction``
    of the expected rung count per coincident ladder.  Everything else is ``SCATTERED``.

    Raises:
        NoBulk: no rungs are left once the margin is removed.
    """
    omega = spec.omega if omega is None else omega
    tol = 1e-6 * omega if tol is None else tol
    n_inner = spec.m_max - bulk_margin
    if n_inner < 1:
        raise NoBulk(f"m_max = {spec.m_max} leaves no bulk with margin {bulk_margin}")
    expected = 2 * n_inner + 1
    labels = np.full(spec.size, SCATTERED, dtype=int)
    edge = spec.edge_mask(bulk_margin)
    labels[edge] = EDGE
    bulk = np.flatnonzero(~edge)
    if bulk.size == 0:
        raise NoBulk("every state is an edge state")
    eps = spec.eigenvalues[bulk]
    D = _distance(eps[:, None], eps[None, :], omega)
    near = D <= tol
    free = np.ones(bulk.size, bool)
    groups = []
    while free.any():
        counts = (near & free[None, :]).sum(axis=1)
        counts[~free] = -1
        seed = int(np.argmax(counts))
        members = near[seed] & free
        for _ in range(2):
            c = _mean_offset(eps[members], omega)
            members = (_distance(eps, np.full(eps.shape, c), omega) <= tol) & free
            if not members[seed]:
                members[seed] = True
        c = _mean_offset(eps[members], omega)
        resid, mult = _ladder_stats(eps[members], c, omega)
        if members.sum() >= min_fraction * expected * mult:
            groups.append((c, int(members.sum()), mult, resid, np.flatnonzero(members)))
        free &= ~members
    groups.sort(key=lambda g: (-g[0].imag, g[0].real))
    ladders = []
    for k, (c, n, mult, resid, idx) in enumerate(groups):
        ladders.append(Ladder(c, n, mult, resid))
        labels[bulk[idx]] = k
    spec.ladder_id = labels
    return LadderReport(ladders, labels, int(bulk.size), expected, tol)


def _canonical_re(re, omega):
    """Map real offsets into ``(-omega/2, omega/2]``."""
    re = (np.asarray(re, dtype=float) + omega / 2) % omega - omega / 2
    return np.where(np.isclose(re, -omega / 2, rtol=0, atol=1e-9 * omega), omega / 2, re)


def _monodromy(p: DrivenQubitParams, backward: bool, rtol: float, atol: float) -> np.ndarray:
    # Product of short-segment propagators so that no single integration sees
    # more than ~exp(10) growth (the backward map grows like exp(2 gamma0 T)).
    T = p.period
    n_seg = max(8, int(np.ceil(2 * p.gamma0 * T / 10)))
    edges = np.linspace(0.0, T, n_seg + 1)
    sign = -1.0 if backward else 1.0
    U = np.eye(3)
    for a, b in zip(edges[:-1], edges[1:]):
        if backward:
            a, b = T - b, T - a

        def rhs(s, y, a=a, b=b):
            t = b - s if backward else a + s
            return sign * (bloch_matrix(p, t) @ y.reshape(3, 3)).ravel()

        seg = ode_integrate(rhs, np.eye(3).ravel(), (0.0, b - a), rtol=rtol, atol=atol).y[-1].reshape(3, 3)
        U = seg @ U
    return U


def floquet_exponents(p: DrivenQubitParams, rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
    """Floquet exponents of ``dR/dt = M(t) R`` from the one-period monodromy matrix.

    Multipliers far below the dominant one are lost to rounding, so the slow
    exponents come from the forward monodromy ``U`` and the remaining fast ones
    from the backward map ``U^{-1}``; a single exponent still missing is restored
    from Liouville's formula (the exponents sum to ``-2 gamma0``).  Imaginary
    parts are folded into ``(-omega/2, omega/2]``; sorted by decreasing real part.
    """
    T = p.period
    mu = np.linalg.eigvals(_monodromy(p, False, rtol, atol)).astype(complex)
    mu = mu[np.argsort(-np.abs(mu))]
    n_ok = int(np.sum(np.abs(mu) >= 1e-8 * np.abs(mu[0])))
    nu = list(np.log(mu[:n_ok]) / T)
    if n_ok < 3:
        inv = np.linalg.eigvals(_monodromy(p, True, rtol, atol)).astype(complex)
        inv = inv[np.argsort(-np.abs(inv))]
        inv = inv[np.abs(inv) >= 1e-8 * np.abs(inv[0])]
        nu += list(-np.log(inv[: 3 - n_ok]) / T)
    if len(nu) == 2:
        nu.append(-2 * p.gamma0 - sum(nu))
    nu += [complex(np.nan, np.nan)] * (3 - len(nu))
    nu = np.array(nu, dtype=complex)
    nu = nu.real + 1j * _canonical_re(nu.imag, p.omega)
    return nu[np.argsort(-nu.real)]


def ladder_candidates(p: DrivenQubitParams) -> dict[str, np.ndarray]:
    """Candidate offsets ``i nu`` for comparison with fitted ladders.

    ``monodromy``: exact Floquet exponents; ``t0``: adiabatic eigenvalues at
    ``t = 0`` (``gamma = 2 gamma0``); ``mean``: adiabatic eigenvalues at the
    time-averaged rate ``gamma0``.  Real parts are folded into ``(-omega/2, omega/2]``.
    """
    t0 = adiabatic_eigenvalues(p, 0.0)
    tm = adiabatic_eigenvalues(p, np.pi / (2 * p.omega))  # cos = 0, gamma = gamma0
    raw = {
        "monodromy": 1j * floquet_exponents(p),
        "t0": 1j * np.array([t0.nu0, t0.nu_plus, t0.nu_minus]),
        "mean": 1j * np.array([tm.nu0, tm.nu_plus, tm.nu_minus]),
    }
    return {k: _canonical_re(v.real, p.omega) + 1j * v.imag for k, v in raw.items()}


@dataclass
class SensitivityReport:
    m_max: list[int]
    displacement: list[float]
    slope: float
    intercept: float
    r2: float
    epsilon: float
    mode: str

    @property
    def exponential(self) -> bool:
        return self.slope > 0 and self.r2 > 0.9


def _perturbed(HF: FloquetHamiltonian, p: DrivenQubitParams, epsilon: float, mode: str) -> np.ndarray:
    if mode == "rate_shift":
        q = DrivenQubitParams(p.delta, p.g, p.gamma0 + epsilon, p.omega)
        return build_floquet(q, HF.m_max).matrix
    if mode == "corner_coupling":
        H = HF.matrix.copy()
        b = HF.block_dim
        H[HF.size - 2 * b, HF.size - b] += epsilon  # x component, rungs m_max - 1 -> m_max
        return H
    raise ValueError(f"unknown mode {mode!r}")


def sensitivity_probe(p: DrivenQubitParams, m_max_list=(50, 100, 200), epsilon: float = 1e-9,
                      mode: str = "rate_shift", bulk_margin: int = 25) -> SensitivityReport:
    """Spectral displacement under a small perturbation versus truncation size.

    ``d(m_max)`` is the largest distance from a bulk eigenvalue of ``H_F`` to the
    nearest eigenvalue of the perturbed matrix.  ``log d`` is fitted linearly in
    ``m_max``; a positive slope with ``R^2 > 0.9`` flags exponential sensitivity.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if len(m_max_list) < 3:
        raise ValueError("need at least three truncation sizes")
    ds = []
    for mm in m_max_list:
        HF = build_floquet(p, mm)
        spec = floquet_spectrum(HF)
        bulk = ~spec.edge_mask(min(bulk_margin, mm // 2))
        pert = np.linalg.eigvals(_perturbed(HF, p, epsilon, mode))
        ev = spec.eigenvalues[bulk]
        ds.append(float(np.max(np.min(np.abs(ev[:, None] - pert[None, :]), axis=1))))
    x = np.asarray(m_max_list, dtype=float)
    y = np.log(np.maximum(ds, np.finfo(float).tiny))
    s, a = np.polyfit(x, y, 1)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - a - s * x) ** 2) / ss if ss > 0 else 0.0
    return SensitivityReport(list(m_max_list), ds, float(s), float(a), float(r2), epsilon, mode)


def ipr_vs_spectrum(spec: FloquetSpectrum, bulk_margin: int = 25) -> list[tuple[float, float, int]]:
    """``(Re eps, IPR, ladder id)`` for every non-edge state."""
    labels = spec.ladder_id
    if labels is None:
        labels = np.where(spec.edge_mask(bulk_margin), EDGE, SCATTERED)
    keep = labels != EDGE
    return [(float(e.real), float(i), int(l))
            for e, i, l in zip(spec.eigenvalues[keep], spec.ipr[keep], labels[keep])]


def gamma_sweep(p: DrivenQubitParams, gammas, m_max: int = 200, bulk_margin: int = 25) -> list[dict]:
    """Scattered fraction and ladder count for each ``gamma0`` in ``gammas``."""
    out = []
    for g0 in gammas:
        q = DrivenQubitParams(p.delta, p.g, float(g0), p.omega)
        rep = ladder_fit(floquet_spectrum(build_floquet(q, m_max)), bulk_margin=bulk_margin)
        out.append({"gamma0": float(g0), "scattered_fraction": rep.scattered_fraction,
                    "n_ladders": rep.n_ladders, "bulk": rep.bulk_count})
    return out
