"""Lie closure of qubit superoperators and the Wei-Norman product ansatz.

Qubit superoperators are 4x4 matrices and are expanded over the sixteen Pauli
strings ``s_a kron s_b``, which are orthonormal under ``<A, B> = Tr(A^dag B) / 4``.
All rank decisions use a fixed threshold with re-orthogonalised Gram-Schmidt.

Wei-Norman convention used here: the propagator is written as

    S(t) = exp(f0(t)) * prod_j exp(-i F_j(t) H_j)

with ``H_j`` the closure basis in order.  Writing ``G(t)`` for the coordinates
of ``i Lsup(t)`` and ``xi(F)`` for the matrix whose column ``j`` holds the
coordinates of ``P_{j-1} H_j P_{j-1}^{-1}``, ``P_{j-1} = prod_{k<j} exp(-i F_k H_k)``,
the coefficients obey ``G = xi(F) dF/dt``.  ``f0`` carries a central identity
component, which commutes with everything and never enters ``xi``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ClosureOverflow, DimensionMismatch, StepUnderflow, XiSingular
from .linalg import matrix_exp, ode_integrate
from .superop import ModelSpec, RateLaw, build_liouvillian, dissipator_superop, hamiltonian_superop

__all__ = [
    "PAULI_LABELS",
    "pauli_string",
    "SuperOpElement",
    "decompose",
    "commutator",
    "LieClosure",
    "closure",
    "structure_constants",
    "jacobi_residual",
    "closure_residual",
    "wei_norman_xi",
    "WeiNormanResult",
    "wei_norman_propagate",
    "pauli_terms",
    "model_pieces",
    "small_model",
    "small_model_generators",
    "EPProbePoint",
    "ep_scan",
    "ep_existence_probe",
]

_P1 = {
    "I": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = tuple(a + b for a in "Ixyz" for b in "Ixyz")
_STRINGS = np.array([np.kron(_P1[l[0]], _P1[l[1]]) for l in PAULI_LABELS])
# Row k is conj(vec(P_k)) / 4 so that coeffs = _ANALYSIS @ A.ravel().
_ANALYSIS = _STRINGS.conj().reshape(16, 16) / 4.0

TOL = 1e-10


def pauli_string(label: str) -> np.ndarray:
    """``s_a kron s_b`` for a two-letter label such as ``"zI"`` or ``"yy"``."""
    return _STRINGS[PAULI_LABELS.index(label)].copy()


@dataclass(frozen=True)
class SuperOpElement:
    coeffs: np.ndarray
    label: str | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (16,):
            raise DimensionMismatch("coefficient vector must have length 16")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def matrix(self) -> np.ndarray:
        return np.tensordot(self.coeffs, _STRINGS, axes=1)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def terms(self, tol: float = 1e-12) -> dict[str, complex]:
        return {l: complex(c) for l, c in zip(PAULI_LABELS, self.coeffs) if abs(c) > tol}

    def __repr__(self):
        name = f"{self.label}: " if self.label else ""
        body = " + ".join(f"({c.real:.4g}{c.imag:+.4g}j){l}" for l, c in self.terms().items()) or "0"
        return f"SuperOpElement({name}{body})"


def decompose(A, label: str | None = None) -> SuperOpElement:
    """Expand a 4x4 matrix over the Pauli strings."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (4, 4):
        raise DimensionMismatch(f"expected a 4x4 superoperator, got {A.shape}")
    c = _ANALYSIS @ A.ravel()
    el = SuperOpElement(c, label)
    err = np.abs(el.matrix - A).max()
    if err > 1e-13 * max(1.0, np.abs(A).max()):
        raise ArithmeticError(f"Pauli reconstruction error {err:.2e}")
    return el


def commutator(a: SuperOpElement, b: SuperOpElement) -> SuperOpElement:
    A, B = a.matrix, b.matrix
    return decompose(A @ B - B @ A)


@dataclass
class LieClosure:
    basis: list[SuperOpElement]
    generations: int
    n_generators: int
    structure: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """Rows are the (orthonormal) basis coefficient vectors."""
        return np.array([b.coeffs for b in self.basis])

    @property
    def structure_constants(self) -> np.ndarray:
        if self.structure is None:
            self.structure = structure_constants(self)
        return self.structure

    def coordinates(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of ``X`` (matrix or element) in the basis and the out-of-span remainder."""
        c = X.coeffs if isinstance(X, SuperOpElement) else decompose(X).coeffs
        B = self.coefficient_matrix
        coords = B.conj() @ c
        return coords, c - B.T @ coords


def _orthogonal_part(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # Classical Gram-Schmidt applied twice ("twice is enough").
    for _ in range(2):
        for b in basis:
            v = v - np.vdot(b, v) * b
    return v


def closure(generators: Sequence[SuperOpElement], max_dim: int = 16, tol: float = TOL) -> LieClosure:
    """Smallest commutator-closed span containing ``generators``.

    Generators are orthonormalised first (in the given order) and every
    commutator direction that is new by more than ``tol`` is appended; a pass
    over all pairs that adds nothing ends the iteration.

    Raises:
        ValueError: a generator is zero or linearly dependent on its predecessors.
        ClosureOverflow: the span would grow beyond ``max_dim``.
    """
    if len(generators) == 0:
        raise ValueError("at least one generator is required")
    vecs: list[np.ndarray] = []
    labels: list[str | None] = []
    for g in generators:
        w = _orthogonal_part(g.coeffs, vecs)
        n = np.linalg.norm(w)
        if n <= tol * max(1.0, g.norm):
            raise ValueError(f"generator {g.label or len(vecs)} is linearly dependent on the previous ones")
        vecs.append(w / n)
        labels.append(g.label)
        if len(vecs) > max_dim:
            raise ClosureOverflow(f"{len(vecs)} generators exceed max_dim = {max_dim}")
    mats = [np.tensordot(v, _STRINGS, axes=1) for v in vecs]
    n_gen = len(vecs)
    generations = 0
    checked = 0  # pairs (i, j) with j < checked are done
    while True:
        added = False
        n_now = len(vecs)
        for j in range(checked, n_now):
            for i in range(j):
                C = mats[i] @ mats[j] - mats[j] @ mats[i]
                c = _ANALYSIS @ C.ravel()
                w = _orthogonal_part(c, vecs)
                nw = np.linalg.norm(w)
                if nw > tol * max(1.0, np.linalg.norm(c)) and nw > tol:
                    if len(vecs) + 1 > max_dim:
                        raise ClosureOverflow(f"closure dimension exceeds max_dim = {max_dim}")
                    w = w / nw
                    vecs.append(w)
                    mats.append(np.tensordot(w, _STRINGS, axes=1))
                    labels.append(None)
                    added = True
        checked = n_now
        if not added:
            break
        generations += 1
    basis = [SuperOpElement(v, l) for v, l in zip(vecs, labels)]
    return LieClosure(basis=basis, generations=generations, n_generators=n_gen)


def structure_constants(c: LieClosure) -> np.ndarray:
    """``s[i, j, k] = <H_k, [H_i, H_j]>`` so that ``[H_i, H_j] = sum_k s[i, j, k] H_k``."""
    mats = np.array([b.matrix for b in c.basis])
    comm = np.einsum("iab,jbc->ijac", mats, mats)
    comm = comm - comm.transpose(1, 0, 2, 3)
    coeffs = comm.reshape(c.dim, c.dim, 16) @ _ANALYSIS.T
    return coeffs @ c.coefficient_matrix.conj().T


def jacobi_residual(c: LieClosure) -> float:
    """Largest entry of ``[[H_i, H_j], H_l] + cyclic`` in structure-constant form."""
    s = c.structure_constants
    t1 = np.einsum("ijm,mlk->ijlk", s, s)
    total = t1 + t1.transpose(1, 2, 0, 3) + t1.transpose(2, 0, 1, 3)
    return float(np.abs(total).max()) if total.size else 0.0


def closure_residual(c: LieClosure) -> float:
    """Largest out-of-span component of any pairwise commutator."""
    worst = 0.0
    for a, b in itertools.combinations(c.basis, 2):
        _, rem = c.coordinates(commutator(a, b))
        worst = max(worst, float(np.linalg.norm(rem)))
    return worst


def wei_norman_xi(F, closure: LieClosure) -> np.ndarray:
    """Frame matrix: column ``j`` = coordinates of ``P_{j-1} H_j P_{j-1}^{-1}``."""
    F = np.asarray(F, dtype=complex)
    if F.shape != (closure.dim,):
        raise DimensionMismatch(f"F must have length {closure.dim}")
    if not np.all(np.isfinite(F)):
        raise ValueError("F must be finite")
    B = closure.coefficient_matrix
    mats = [b.matrix for b in closure.basis]
    xi = np.empty((closure.dim, closure.dim), complex)
    P = np.eye(4, dtype=complex)
    Pinv = np.eye(4, dtype=complex)
    for j, Hj in enumerate(mats):
        X = P @ Hj @ Pinv
        xi[:, j] = B.conj() @ (_ANALYSIS @ X.ravel())
        if F[j] != 0:
            P = P @ matrix_exp(-1j * F[j] * Hj)
            Pinv = matrix_exp(1j * F[j] * Hj) @ Pinv
    return xi


def _ordered_product(F, f0, mats) -> np.ndarray:
    S = np.exp(f0) * np.eye(4, dtype=complex)
    for Fj, Hj in zip(F, mats):
        S = S @ matrix_exp(-1j * Fj * Hj)
    return S


@dataclass
class WeiNormanResult:
    t: np.ndarray
    F: np.ndarray  # (n_t, dim)
    f0: np.ndarray  # central (identity) exponent
    S: np.ndarray  # (n_t, 4, 4) reconstructed propagators
    max_condition: float


def wei_norman_propagate(
    model: ModelSpec | Callable[[float], np.ndarray],
    closure: LieClosure,
    t_grid,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    cond_max: float = 1e10,
) -> WeiNormanResult:
    """Solve the Wei-Norman equations and rebuild ``S(t) = exp(f0) prod exp(-i F_j H_j)``.

    ``model`` is a qubit :class:`ModelSpec` or any callable ``t -> Lsup(t)``.

    Raises:
        ValueError: ``Lsup(t0)`` is not in ``span(closure) + identity``.
        XiSingular: ``cond(xi) > cond_max`` along the way; carries the time.
    """
    if isinstance(model, ModelSpec):
        if model.dim != 2:
            raise DimensionMismatch("Wei-Norman propagation is implemented for qubit models")
        lsup = lambda t: build_liouvillian(model, t)  # noqa: E731
    else:
        lsup = model
    t_grid = np.asarray(t_grid, dtype=float)
    B = closure.coefficient_matrix
    dim = closure.dim
    ident = PAULI_LABELS.index("II")
    in_span = np.linalg.norm(_orthogonal_part(np.eye(16)[ident].astype(complex), list(B))) <= TOL

    def split(t):
        c = _ANALYSIS @ (1j * lsup(t)).ravel()
        coords = B.conj() @ c
        rem = c - B.T @ coords
        g0 = 0.0 if in_span else rem[ident]
        rem[ident] -= g0
        if np.linalg.norm(rem) > TOL * max(1.0, np.linalg.norm(c)):
            raise ValueError(f"Liouvillian at t = {t:.6g} leaves span(closure) by {np.linalg.norm(rem):.2e}")
        return coords, g0

    split(t_grid[0])
    worst = [1.0]

    def rhs(t, y):
        F = y[:dim]
        G, g0 = split(t)
        xi = wei_norman_xi(F, closure)
        s = np.linalg.svd(xi, compute_uv=False)
        cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
        if cond > cond_max:
            raise XiSingular(t, cond)
        worst[0] = max(worst[0], cond)
        dF = np.linalg.solve(xi, G)
        # S = exp(f0) ...; i Lsup carries i * (identity part): f0' = -i g0.
        return np.concatenate([dF, [-1j * g0]])

    y0 = np.zeros(dim + 1, complex)
    try:
        traj = ode_integrate(rhs, y0, (t_grid[0], t_grid[-1]), rtol=rtol, atol=atol, dense_grid=t_grid)
    except StepUnderflow as exc:
        raise XiSingular(exc.t, np.inf) from exc
    mats = [b.matrix for b in closure.basis]
    F = traj.y[:, :dim]
    f0 = traj.y[:, dim]
    S = np.array([_ordered_product(Fi, f0i, mats) for Fi, f0i in zip(F, f0)])
    return WeiNormanResult(t=t_grid, F=F, f0=f0, S=S, max_condition=worst[0])


def pauli_terms(A, include_identity: bool = False, tol: float = 1e-12) -> list[SuperOpElement]:
    """Individual Pauli strings present in ``A`` (as unit elements)."""
    el = decompose(A)
    out = []
    for k, l in enumerate(PAULI_LABELS):
        if abs(el.coeffs[k]) > tol * max(1.0, el.norm) and (include_identity or l != "II"):
            out.append(SuperOpElement(np.eye(16)[k], l))
    return out


def model_pieces(model: ModelSpec) -> list[SuperOpElement]:
    """Hamiltonian part and unit-rate dissipators of a qubit model."""
    if model.dim != 2:
        raise DimensionMismatch("qubit models only")
    out = [decompose(hamiltonian_superop(model.H), "H")]
    for k, c in enumerate(model.channels):
        out.append(decompose(dissipator_superop(c.L), f"D{k}"))
    return [e for e in out if e.norm > 0]


SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


def small_model(Omega: float, gamma_up: float, gamma_down: float, gamma_z: float) -> ModelSpec:
    """``H = -Omega/2 sz`` with pumping, decay and dephasing at constant rates."""
    return ModelSpec.build(
        -0.5 * Omega * _P1["z"],
        [
            (SIGMA_PLUS, RateLaw.constant(gamma_up)),
            (SIGMA_MINUS, RateLaw.constant(gamma_down)),
            (_P1["z"], RateLaw.constant(gamma_z)),
        ],
    )


def small_model_generators() -> list[SuperOpElement]:
    """``H3``, ``D_up``, ``D_down``, ``D_33``: the commutator of ``sz`` and the three dissipators."""
    return [
        decompose(hamiltonian_superop(_P1["z"]), "H3"),
        decompose(dissipator_superop(SIGMA_PLUS), "D_up"),
        decompose(dissipator_superop(SIGMA_MINUS), "D_down"),
        decompose(dissipator_superop(_P1["z"]), "D_33"),
    ]


@dataclass
class EPProbePoint:
    params: dict
    has_ep: bool
    min_gap: float
    max_condition: float
    t_ep: float | None
    closure_dim: int


def _bloch_matrix_fn(model: ModelSpec):
    from .dynamics import bloch_generator

    gen = bloch_generator(model)
    return gen.matrix


def _discriminant(M: np.ndarray) -> float:
    # Cubic characteristic polynomial x^3 + b x^2 + c x + d.
    b = -np.trace(M)
    c = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0] + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0] \
        + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    d = -np.linalg.det(M)
    return float(18 * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * c ** 3 - 27 * d * d)


def _gap_and_condition(M: np.ndarray) -> tuple[float, float]:
    vals, V = np.linalg.eig(M)
    gaps = [abs(vals[i] - vals[j]) for i in range(len(vals)) for j in range(i)]
    V = V / np.linalg.norm(V, axis=0)
    s = np.linalg.svd(V, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    return float(min(gaps)), cond


def ep_scan(model: ModelSpec, n_scan: int = 2001, gap_tol: float = 1e-6, cond_tol: float = 1e6):
    """Scan one drive period for an exceptional point of the qubit Bloch matrix.

    Candidates are sign changes and local minima of the discriminant of the
    characteristic cubic, polished by Brent's method; a candidate counts as an
    EP when the eigenvalue gap is below ``gap_tol`` and the eigenvector matrix
    condition exceeds ``cond_tol``.  Returns ``(has_ep, min_gap, max_cond, t_ep)``.
    """
    from scipy.optimize import brentq, minimize_scalar

    if model.dim != 2:
        raise DimensionMismatch("qubit models only")
    Mf = _bloch_matrix_fn(model)
    T = model.period()
    ts = np.array([0.0]) if T is None else np.linspace(0.0, T, n_scan)
    disc = np.array([_discriminant(Mf(t)) for t in ts])
    cands = list(ts[np.abs(disc) == 0])
    for i in range(ts.size - 1):
        if disc[i] * disc[i + 1] < 0:
            f = lambda s: _discriminant(Mf(s))  # noqa: E731
            cands.append(brentq(f, ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    absd = np.abs(disc)
    for i in range(1, ts.size - 1):
        if absd[i] <= absd[i - 1] and absd[i] <= absd[i + 1]:
            r = minimize_scalar(lambda s: abs(_discriminant(Mf(s))), bracket=None,
                                bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": 1e-13})
            cands.append(float(r.x))
    if T is not None:
        cands += [0.0, T / 2]
    rows = [(*_gap_and_condition(Mf(t)), float(t)) for t in sorted(cands)]
    if not rows:
        rows = [(*_gap_and_condition(Mf(t)), float(t)) for t in ts[:: max(1, ts.size // 50)]]
    eps = [t for gap, cond, t in rows if gap < gap_tol and cond > cond_tol]
    return bool(eps), min(r[0] for r in rows), max(r[1] for r in rows), (eps[0] if eps else None)


def ep_existence_probe(
    family: Callable[..., ModelSpec],
    grid: Sequence[dict],
    generators: Callable[[ModelSpec], list[SuperOpElement]] | None = None,
    n_scan: int = 2001,
) -> list[EPProbePoint]:
    """EP flag and closure dimension for each parameter point of a model family.

    ``generators`` maps a model to the elements whose closure is reported
    (default: the Pauli strings present in its Liouvillian at ``t = 0``).
    """
    if generators is None:
        generators = lambda m: pauli_terms(build_liouvillian(m, 0.0))  # noqa: E731
    out = []
    for params in grid:
        model = family(**params)
        has_ep, gap, cond, t_ep = ep_scan(model, n_scan=n_scan)
        dim = closure(generators(model)).dim
        out.append(EPProbePoint(dict(params), has_ep, gap, cond, t_ep, dim))
    return out
