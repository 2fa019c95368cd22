"""Named parameter sets for the figures (one preset per figure panel)."""

from __future__ import annotations

from .qubit import DrivenQubitParams

__all__ = ["PRESETS", "preset_params"]

_FIG1 = dict(delta=0.05, g=0.0, gamma0=10.0, omega=0.05)

# command: default command; params: DrivenQubitParams fields; numeric: overrides.
PRESETS: dict[str, dict] = {
    "fig1": {"command": "adiabatic", "params": dict(_FIG1), "numeric": {"periods": 1, "dt": 0.05}},
    # Slow branch from t = 0 over 30 periods: long enough for |R| < 1e-3.
    "fig2": {"command": "evolve", "params": dict(_FIG1),
             "numeric": {"periods": 30, "dt": 0.125, "branch": "+"}},
    "fig3a": {"command": "floquet", "params": dict(delta=0.05, g=0.0, gamma0=0.1, omega=0.05), "numeric": {}},
    "fig3b": {"command": "floquet", "params": dict(delta=0.05, g=0.0, gamma0=5.0, omega=0.05), "numeric": {}},
    "fig4a": {"command": "ipr", "params": dict(delta=0.05, g=0.0, gamma0=0.1, omega=0.05), "numeric": {}},
    "fig4b": {"command": "ipr", "params": dict(delta=0.05, g=0.0, gamma0=5.0, omega=0.05), "numeric": {}},
}


def preset_params(name: str) -> DrivenQubitParams:
    return DrivenQubitParams(**PRESETS[name]["params"])
