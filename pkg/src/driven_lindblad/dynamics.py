"""Time evolution of Bloch vectors and vectorised density matrices, plus observables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bloch import _projection, to_bloch
from .errors import DimensionMismatch, MissingChannel, ValidationError
from .linalg import ode_integrate
from .qubit import DrivenQubitParams, adiabatic_state, locate_eps, model_spec
from .superop import ModelSpec, devectorize, dissipator_superop, hamiltonian_superop, vectorize

__all__ = [
    "TimeSeries",
    "LinearGenerator",
    "liouvillian_generator",
    "bloch_generator",
    "evolve_bloch",
    "evolve_superop",
    "trace_distance",
    "adiabaticity_diagnostic",
    "inversion_series",
    "DropEvent",
    "detect_drops",
    "log_linear_fit",
]


@dataclass
class TimeSeries:
    times: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    markers: dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be 1-D")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly ascending")
        for name, v in self.channels.items():
            v = np.asarray(v)
            if v.shape[0] != self.times.size:
                raise ValueError(f"channel {name!r} has length {v.shape[0]}, expected {self.times.size}")
            self.channels[name] = v

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise MissingChannel(name) from None

    def __len__(self) -> int:
        return self.times.size

    def columns(self) -> list[str]:
        return ["t", *self.channels]


@dataclass(frozen=True)
class LinearGenerator:
    """``A(t) = A0 + sum_k rate_k(t) A_k`` with matching inhomogeneous parts."""

    A0: np.ndarray
    parts: tuple
    rates: tuple
    b0: np.ndarray | None = None
    b_parts: tuple = ()

    def matrix(self, t: float) -> np.ndarray:
        out = self.A0.copy()
        for r, A in zip(self.rates, self.parts):
            out = out + r(t) * A
        return out

    def offset(self, t: float):
        if self.b0 is None:
            return None
        out = self.b0.copy()
        for r, b in zip(self.rates, self.b_parts):
            out = out + r(t) * b
        return out


def liouvillian_generator(model: ModelSpec) -> LinearGenerator:
    """Liouvillian split into its Hamiltonian part and unit-rate dissipators."""
    return LinearGenerator(
        A0=hamiltonian_superop(model.H),
        parts=tuple(dissipator_superop(c.L) for c in model.channels),
        rates=tuple(c.rate for c in model.channels),
    )


def bloch_generator(model: ModelSpec) -> LinearGenerator:
    """Bloch Liouvillian ``(M(t), b(t))`` assembled from per-channel projections."""
    D = model.dim
    M0, b0 = _projection(D, hamiltonian_superop(model.H))
    Ms, bs = [], []
    for c in model.channels:
        M, b = _projection(D, dissipator_superop(c.L))
        Ms.append(M.real)
        bs.append(b.real)
    return LinearGenerator(
        A0=M0.real, parts=tuple(Ms), rates=tuple(c.rate for c in model.channels), b0=b0.real, b_parts=tuple(bs)
    )


def _as_model(model) -> ModelSpec:
    if isinstance(model, DrivenQubitParams):
        return model_spec(model)
    return model


def evolve_bloch(model, R0, t_grid, rtol: float = 1e-9, atol: float = 1e-12) -> TimeSeries:
    """Integrate ``dR/dt = M(t) R + b(t)`` and sample on ``t_grid``.

    ``model`` is a :class:`ModelSpec` or :class:`DrivenQubitParams`.  For qubits the
    channels are ``rx, ry, rz, bloch_norm, purity``; otherwise ``r1..rn`` plus the
    norm.  Qubit-model runs carry the exceptional-point times as ``markers``.
    """
    spec = _as_model(model)
    gen = bloch_generator(spec)
    R0 = np.asarray(R0, dtype=float)
    n = spec.dim ** 2 - 1
    if R0.shape != (n,):
        raise DimensionMismatch(f"R0 must have length {n}")
    if spec.dim == 2 and np.linalg.norm(R0) > 1 + 1e-12:
        raise ValidationError("R0", "|R0| must be <= 1")
    t_grid = np.asarray(t_grid, dtype=float)

    def rhs(t, R):
        return gen.matrix(t) @ R + gen.offset(t)

    if t_grid.size == 1:
        Y = R0[None, :]
    else:
        Y = ode_integrate(rhs, R0, (t_grid[0], t_grid[-1]), rtol=rtol, atol=atol, dense_grid=t_grid).y
    norm = np.linalg.norm(Y, axis=1)
    if spec.dim == 2:
        ch = {"rx": Y[:, 0], "ry": Y[:, 1], "rz": Y[:, 2]}
    else:
        ch = {f"r{i + 1}": Y[:, i] for i in range(n)}
    ch["bloch_norm"] = norm
    if spec.dim == 2:
        ch["purity"] = (1.0 + norm ** 2) / 2.0
    ts = TimeSeries(t_grid, ch)
    if isinstance(model, DrivenQubitParams):
        ts.markers["ep_times"] = locate_eps(model, int(np.ceil(t_grid[-1] / model.period)))
    return ts


def evolve_superop(model, rho0, t_grid, rtol: float = 1e-9, atol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``d vec(rho)/dt = Lsup(t) vec(rho)``; returns ``(rhos, bloch_vectors)``."""
    spec = _as_model(model)
    gen = liouvillian_generator(spec)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (spec.dim, spec.dim):
        raise DimensionMismatch(f"rho0 must be {spec.dim}x{spec.dim}")
    t_grid = np.asarray(t_grid, dtype=float)
    v0 = vectorize(rho0)
    if t_grid.size == 1:
        V = v0[None, :]
    else:
        V = ode_integrate(lambda t, v: gen.matrix(t) @ v, v0, (t_grid[0], t_grid[-1]),
                          rtol=rtol, atol=atol, dense_grid=t_grid).y
    rhos = np.array([devectorize(v) for v in V])
    return rhos, np.array([to_bloch(r) for r in rhos])


def trace_distance(rho1, rho2) -> float:
    """``(1/2) sum |eig(rho1 - rho2)|``."""
    a = np.asarray(rho1, dtype=complex)
    b = np.asarray(rho2, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} are not matching square matrices")
    d = a - b
    d = (d + d.conj().T) / 2
    return float(0.5 * np.abs(np.linalg.eigvalsh(d)).sum())


def adiabaticity_diagnostic(p: DrivenQubitParams, branch: str, t_grid, rtol: float = 1e-9,
                            atol: float = 1e-12) -> TimeSeries:
    """Trace distance between the evolved state and the adiabatic reference.

    Both start from the branch eigenvector at ``t = 0``.  Once the reference turns
    complex (after an exceptional point) its real part is used and the sample is
    flagged in the ``complex_flag`` channel.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    ad = adiabatic_state(p, branch, t_grid)
    R0 = ad.R[0].real
    ts = evolve_bloch(p, R0, t_grid, rtol=rtol, atol=atol)
    R = np.column_stack([ts["rx"], ts["ry"], ts["rz"]])
    dist = np.clip(np.linalg.norm(R - ad.R.real, axis=1) / 2.0, 0.0, 1.0)
    ts.channels["adiabatic_norm"] = np.linalg.norm(ad.R.real, axis=1)
    ts.channels["trace_distance"] = dist
    ts.channels["complex_flag"] = ad.complex_flag.astype(int)
    return ts


def inversion_series(ts: TimeSeries) -> TimeSeries:
    """Population inversion ``<sz>(t) = rz(t)``."""
    return TimeSeries(ts.times, {"inversion": np.asarray(ts["rz"], dtype=float).copy()})


@dataclass(frozen=True)
class DropEvent:
    start: float
    end: float
    peak: float  # time of the steepest descent inside the window
    rate: float  # d|R|/dt at the peak

    def distance_to(self, t: float) -> float:
        if self.start <= t <= self.end:
            return 0.0
        return min(abs(t - self.start), abs(t - self.end))


def detect_drops(t, y, factor: float = 5.0) -> list[DropEvent]:
    """Windows where ``dy/dt`` falls below ``factor`` times its (negative) median.

    Each maximal run of consecutive flagged samples is one event.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 3:
        return []
    dy = np.gradient(y, t)
    med = np.median(dy)
    if med >= 0:
        return []
    mask = dy < factor * med
    events = []
    i = 0
    while i < t.size:
        if mask[i]:
            j = i
            while j + 1 < t.size and mask[j + 1]:
                j += 1
            k = i + int(np.argmin(dy[i:j + 1]))
            events.append(DropEvent(float(t[i]), float(t[j]), float(t[k]), float(dy[k])))
            i = j + 1
        else:
            i += 1
    return events


def log_linear_fit(t, y) -> tuple[float, float, float]:
    """Least-squares fit ``log y = a + s t``; returns ``(s, a, R^2)``."""
    t = np.asarray(t, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    s, a = np.polyfit(t, ly, 1)
    resid = ly - (a + s * t)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(s), float(a), float(r2)
