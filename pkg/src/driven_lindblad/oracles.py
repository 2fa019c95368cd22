"""Cross-representation and CPTP checks shared by the test-suite and ``oracle-check``."""

from __future__ import annotations

import itertools

import numpy as np

from .bloch import build_bloch_liouvillian, extend, from_bloch, similarity_check, to_bloch
from .dynamics import evolve_bloch, evolve_superop
from .presets import preset_params
from .qubit import DrivenQubitParams, adiabatic_eigenvalues, bloch_matrix, model_spec
from .superop import ModelSpec, RateLaw, build_liouvillian, check_trace_preserving, damping_basis, steady_state

__all__ = [
    "random_hermitian",
    "random_qubit_model",
    "random_qubit_state",
    "random_params",
    "spectrum_distance",
    "representation_errors",
    "cptp_errors",
    "adiabatic_oracle_error",
    "run_oracle_suite",
]


def random_hermitian(rng: np.random.Generator, D: int, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    return scale * (A + A.conj().T) / 2


def random_qubit_model(rng: np.random.Generator, n_channels: int | None = None) -> ModelSpec:
    """Random Hamiltonian and one to three jump operators with constant or cosine rates."""
    n = int(rng.integers(1, 4)) if n_channels is None else n_channels
    chans = []
    for _ in range(n):
        L = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        g0 = float(rng.uniform(0.05, 1.0))
        rate = RateLaw.cosine(g0, float(rng.uniform(0.2, 3.0))) if rng.random() < 0.5 else RateLaw.constant(g0)
        chans.append((0.5 * L, rate))
    # One common frequency keeps the model periodic.
    omegas = [r.omega for _, r in chans if r.kind == "cosine"]
    if omegas:
        chans = [(L, RateLaw.cosine(r.gamma0, omegas[0]) if r.kind == "cosine" else r) for L, r in chans]
    return ModelSpec.build(random_hermitian(rng, 2), chans)


def random_qubit_state(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    v *= rng.uniform(0, 1) / np.linalg.norm(v)
    return from_bloch(v)


def random_params(rng: np.random.Generator) -> DrivenQubitParams:
    return DrivenQubitParams(
        delta=float(rng.uniform(-2, 2)), g=float(rng.uniform(-2, 2)),
        gamma0=float(rng.uniform(0, 5)), omega=float(rng.uniform(0.01, 2)),
    )


def spectrum_distance(a, b) -> float:
    """Best-matching max distance between two small spectra (all permutations)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(min(np.max(np.abs(a - b[list(p)])) for p in itertools.permutations(range(b.size))))


def representation_errors(model: ModelSpec, rho0, t_end: float = 2.0, n: int = 21, rtol: float = 1e-11,
                          atol: float = 1e-13) -> dict[str, float]:
    """Superop vs Bloch trajectories, extended-Bloch vs Liouvillian spectra, V similarity."""
    t = np.linspace(0.0, t_end, n)
    _, R_sup = evolve_superop(model, rho0, t, rtol=rtol, atol=atol)
    ts = evolve_bloch(model, to_bloch(rho0), t, rtol=rtol, atol=atol)
    R_bl = np.column_stack([ts["rx"], ts["ry"], ts["rz"]])
    spec = 0.0
    sim = 0.0
    for s in (0.0, 0.37 * t_end):
        Lm = build_liouvillian(model, s)
        spec = max(spec, spectrum_distance(np.linalg.eigvals(extend(build_bloch_liouvillian(model, s))),
                                           np.linalg.eigvals(Lm)))
        sim = max(sim, similarity_check(model, s))
    return {"trajectory": float(np.abs(R_sup - R_bl).max()), "spectrum": spec, "similarity": sim}


def cptp_errors(model: ModelSpec, rho0, t_end: float = 2.0, n: int = 21) -> dict[str, float]:
    """Trace drift, most negative eigenvalue, conjugation mismatch, non-steady trace."""
    t = np.linspace(0.0, t_end, n)
    rhos, _ = evolve_superop(model, rho0, t)
    traces = np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0).max()
    min_eig = min(float(np.linalg.eigvalsh((r + r.conj().T) / 2).min()) for r in rhos)
    basis = damping_basis(build_liouvillian(model, 0.0))
    return {
        "trace": float(max(traces, check_trace_preserving(build_liouvillian(model, 0.0)))),
        "min_eigenvalue": min_eig,
        "conjugation": basis.conjugation_mismatch,
        "nonsteady_trace": basis.max_trace_nonsteady,
    }


def adiabatic_oracle_error(p: DrivenQubitParams, t: float) -> dict[str, float]:
    trip = adiabatic_eigenvalues(p, t)
    closed = np.array([trip.nu0, trip.nu_plus, trip.nu_minus])
    num = np.linalg.eigvals(bloch_matrix(p, t))
    gm = p.gamma0 * (1 + np.cos(p.omega * t))
    return {
        "eig": spectrum_distance(closed, num) / max(1.0, np.abs(num).max()),
        "sum": abs(trip.nu_plus + trip.nu_minus + gm),
        "product": abs(trip.nu_plus * trip.nu_minus - (p.g ** 2 + p.delta ** 2)) / max(1.0, p.g ** 2 + p.delta ** 2),
    }


def _check(name, value, limit, sense="<=") -> dict:
    passed = value <= limit if sense == "<=" else value >= limit
    return {"name": name, "value": float(value), "limit": float(limit), "passed": bool(passed)}


def run_oracle_suite(seed: int = 0, n_random: int = 20) -> list[dict]:
    """Randomised cross-representation suite; returns one record per check."""
    rng = np.random.default_rng(seed)
    rep = {"trajectory": 0.0, "spectrum": 0.0, "similarity": 0.0}
    cp = {"trace": 0.0, "min_eigenvalue": np.inf, "conjugation": 0.0, "nonsteady_trace": 0.0}
    for _ in range(n_random):
        model = random_qubit_model(rng)
        rho0 = random_qubit_state(rng)
        for k, v in representation_errors(model, rho0).items():
            rep[k] = max(rep[k], v)
        for k, v in cptp_errors(model, rho0).items():
            cp[k] = min(cp[k], v) if k == "min_eigenvalue" else max(cp[k], v)
    ad = {"eig": 0.0, "sum": 0.0, "product": 0.0}
    for _ in range(10 * n_random):
        p = random_params(rng)
        for k, v in adiabatic_oracle_error(p, float(rng.uniform(0, 2 * p.period))).items():
            ad[k] = max(ad[k], v)
    steady = 0.0
    for name in ("fig1", "fig3a", "fig3b"):
        m = model_spec(preset_params(name))
        steady = max(steady, float(np.linalg.norm(to_bloch(steady_state(m, 0.0)))))
    return [
        _check("bloch_vs_superop_trajectory", rep["trajectory"], 1e-8),
        _check("extended_bloch_spectrum", rep["spectrum"], 1e-9),
        _check("similarity_V", rep["similarity"], 1e-10),
        _check("trace_preservation", cp["trace"], 1e-9),
        _check("min_eigenvalue", cp["min_eigenvalue"], -1e-7, ">="),
        _check("conjugate_pairs", cp["conjugation"], 1e-9),
        _check("nonsteady_traceless", cp["nonsteady_trace"], 1e-8),
        _check("adiabatic_eigenvalues", ad["eig"], 1e-10),
        _check("adiabatic_sum", ad["sum"], 1e-12),
        _check("adiabatic_product", ad["product"], 1e-12),
        _check("preset_steady_state_mixed", steady, 1e-9),
    ]
