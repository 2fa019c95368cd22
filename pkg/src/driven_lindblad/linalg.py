"""Dense complex linear algebra and time integration.

Everything downstream (Liouvillians, Bloch matrices, Floquet blocks) is a plain
``numpy.ndarray`` of dtype ``complex128``; :func:`as_matrix` is the single
entry point that enforces shape and finiteness.  Eigen-decompositions, solves
and exponentials are delegated to LAPACK through SciPy; the adaptive
Dormand-Prince integrator is implemented here so that step control, dense
output and failure modes stay under our control.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NonConvergence, NonFinite, NonSquare, Singular, StepUnderflow

__all__ = [
    "as_matrix",
    "EigenDecomposition",
    "eig_general",
    "solve_linear",
    "matrix_exp",
    "Trajectory",
    "ode_integrate",
]

EPS = np.finfo(float).eps


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array.

    Raises:
        NonSquare: if ``square`` is requested and the shape is not square.
        NonFinite: if any entry is NaN or infinite.
    """
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise NonSquare(f"{name} must be 2-D, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{name} has non-finite entries")
    return m


@dataclass
class EigenDecomposition:
    """Eigenvalues plus unit-norm right (and optionally left) eigenvectors.

    ``left_vectors`` columns ``w_i`` satisfy ``w_i^H A = values[i] w_i^H``.
    ``residual`` is ``max_i |A v_i - values[i] v_i| / |A|_F``.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray | None
    residual: float

    @cached_property
    def vector_condition(self) -> float:
        """2-norm condition number of the eigenvector matrix.

        Blows up as eigenvectors coalesce, i.e. close to an exceptional point.
        """
        s = sla.svdvals(self.right_vectors)
        return float(np.inf) if s[-1] == 0.0 else float(s[0] / s[-1])


def _unit_columns(v: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(v, axis=0)
    norms[norms == 0.0] = 1.0
    return v / norms


def eig_general(a, want_left: bool = False, tol: float = 1e-10) -> EigenDecomposition:
    """Full eigen-decomposition of a general (non-Hermitian) complex matrix."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = as_matrix(a, square=True)
    if a.shape[0] == 0:
        raise NonSquare("matrix dimension must be >= 1")
    try:
        if want_left:
            w, vl, vr = sla.eig(a, left=True, right=True, check_finite=False)
        else:
            w, vr = sla.eig(a, check_finite=False)
            vl = None
    except sla.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    vr = _unit_columns(vr)
    if vl is not None:
        vl = _unit_columns(vl)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        residual = 0.0
    else:
        residual = float(np.max(np.linalg.norm(a @ vr - vr * w, axis=0)) / scale)
    if residual > tol:
        raise NonConvergence(f"eigen residual {residual:.3e} exceeds tol {tol:.1e}")
    return EigenDecomposition(values=w, right_vectors=vr, left_vectors=vl, residual=residual)


def solve_linear(a, b, tol: float = 1e-12, rcond: float = 1e-14) -> np.ndarray:
    """Solve ``a x = b``; rank deficiency below ``rcond`` raises :class:`Singular`."""
    a = as_matrix(a, square=True)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise NonSquare(f"right-hand side has length {b.shape[0]}, matrix is {a.shape}")
    if not np.all(np.isfinite(b)):
        raise NonFinite("right-hand side has non-finite entries")
    s = sla.svdvals(a)
    if s[0] == 0.0 or s[-1] <= rcond * s[0]:
        raise Singular(f"matrix is rank deficient (sigma_min/sigma_max = {s[-1] / max(s[0], EPS):.3e})")
    x = sla.solve(a, b, check_finite=False)
    res = np.linalg.norm(a @ x - b)
    if res > max(tol * np.linalg.norm(a) * np.linalg.norm(x), tol * np.linalg.norm(b)):
        raise Singular(f"solve residual {res:.3e} too large; matrix is numerically singular")
    return x


def matrix_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade core."""
    a = as_matrix(a, square=True)
    out = sla.expm(a)
    if not np.all(np.isfinite(out)):
        raise NonFinite("matrix exponential overflowed")
    return out


# Dormand-Prince 5(4) tableau with FSAL and the 4th-order continuous extension.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class Trajectory:
    """Solution samples ``y[i] = y(t[i])`` on the requested output grid."""

    t: np.ndarray
    y: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    stats: dict = field(default_factory=dict)

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.t, self.y))

    def __len__(self) -> int:
        return len(self.t)


def _checked(f, t, y):
    v = np.asarray(f(t, y))
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"vector field returned non-finite values at t = {t:.6g}")
    return v


def _initial_step(f, t0, y0, f0, direction_span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(y0.size)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = _checked(f, t0 + h0, y0 + h0 * f0)
    d2 = np.linalg.norm((f1 - f0) / scale) / np.sqrt(y0.size) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def ode_integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: Sequence[float],
    rtol: float = 1e-9,
    atol: float = 1e-12,
    dense_grid: Sequence[float] | None = None,
    max_step: float = np.inf,
    first_step: float | None = None,
) -> Trajectory:
    """Integrate ``dy/dt = f(t, y)`` with adaptive Dormand-Prince 5(4) steps.

    A step is accepted when the embedded error estimate satisfies
    ``|err|_2 <= max(rtol * |y|_2, atol)``.  Values at ``dense_grid`` (default:
    the two end points) come from the 4th-order continuous extension.

    Raises:
        StepUnderflow: the controller asked for a step below the float floor
            at the current time (typical stiffness signal).
        NonFinite: the vector field produced NaN/inf.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float).ravel()
    grid = np.array([t0, t1] if dense_grid is None else dense_grid, dtype=float)
    if grid.size and (grid[0] < t0 - 1e-12 * max(1.0, abs(t0)) or grid[-1] > t1 + 1e-12 * max(1.0, abs(t1))):
        raise ValueError("dense_grid must lie inside t_span")
    if np.any(np.diff(grid) < 0):
        raise ValueError("dense_grid must be ascending")

    f0 = _checked(f, t0, y)
    if not np.iscomplexobj(y) and np.iscomplexobj(f0):
        y = y.astype(complex)
    out = np.empty((grid.size, y.size), dtype=y.dtype)
    gi = 0
    while gi < grid.size and grid[gi] <= t0:
        out[gi] = y
        gi += 1

    h = first_step if first_step is not None else _initial_step(f, t0, y, f0, t1 - t0, rtol, atol)
    h = min(h, max_step)
    K = np.empty((7, y.size), dtype=y.dtype)
    K[0] = f0
    t = t0
    n_steps = n_rejected = 0
    while t < t1:
        floor = 10 * EPS * max(1.0, abs(t))
        if h < floor:
            raise StepUnderflow(t, h)
        last = t + h >= t1 - floor
        if last:
            h = t1 - t
        for s in range(1, 6):
            K[s] = _checked(f, t + _C[s] * h, y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_B[:6] @ K[:6])
        t_new = t1 if last else t + h
        K[6] = _checked(f, t_new, y_new)
        err = h * np.linalg.norm(_E @ K)
        tol = max(rtol * max(np.linalg.norm(y), np.linalg.norm(y_new)), atol)
        ratio = err / tol
        if ratio <= 1.0:
            n_steps += 1
            if gi < grid.size and grid[gi] <= t_new:
                Q = K.T @ _P
                while gi < grid.size and grid[gi] <= t_new:
                    x = (grid[gi] - t) / h
                    out[gi] = y + h * (Q @ np.array([x, x * x, x ** 3, x ** 4]))
                    gi += 1
            t, y = t_new, y_new
            K[0] = K[6]
            factor = 10.0 if ratio == 0.0 else min(10.0, 0.9 * ratio ** -0.2)
        else:
            n_rejected += 1
            factor = max(0.2, 0.9 * ratio ** -0.2)
        h = min(h * factor, max_step)
    while gi < grid.size:
        out[gi] = y
        gi += 1
    return Trajectory(t=grid, y=out, n_steps=n_steps, n_rejected=n_rejected)
