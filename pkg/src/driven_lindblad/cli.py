"""Command-line front end.

Usage::

    driven-lindblad COMMAND [--config PATH] [--preset NAME] [--out DIR]
                    [--format csv,json,svg] [--seed N] [--m-max N] [--rtol X]

Config files are INI-style (``key = value`` under ``[run]``, ``[params]``,
``[numeric]`` and ``[io]``); lines before the first header belong to ``[run]``.
Command-line flags override file values, which override the preset, which
overrides the built-in defaults.  Outputs land in ``--out``, else
``$DRIVEN_LINDBLAD_OUT``, else ``./out``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DrivenLindbladError, ParseError, ValidationError
from .presets import PRESETS
from .qubit import DrivenQubitParams

__all__ = [
    "COMMANDS",
    "RunConfig",
    "parse_config",
    "run",
    "emit_csv",
    "emit_json",
    "emit_svg",
    "main",
]

COMMANDS = ("evolve", "adiabatic", "ep", "floquet", "ipr", "algebra", "sensitivity", "oracle-check")
FORMATS = ("csv", "json", "svg")
ENV_OUT = "DRIVEN_LINDBLAD_OUT"

NUMERIC_DEFAULTS = {
    "rtol": 1e-9,
    "atol": 1e-12,
    "dt": 0.05,
    "m_max": 200,
    "edge_margin": 25,
    "tol": 1e-10,
    "periods": 1,
    "branch": "+",
    "epsilon": 1e-9,
    "mode": "rate_shift",
    "m_max_list": "50,100,200",
    "gammas": "0.1,0.5,1,2,5",
    "n_random": 20,
}
_INT_KEYS = {"m_max", "edge_margin", "periods", "n_random"}
_STR_KEYS = {"branch", "mode", "m_max_list", "gammas"}
_KEYS = {
    "run": {"command", "preset"},
    "params": {"delta", "g", "gamma0", "omega"},
    "numeric": set(NUMERIC_DEFAULTS),
    "io": {"out", "formats", "seed"},
}

# Exit codes.
OK, FAILED_CHECK, COMPUTE_ERROR, CONFIG_ERROR = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    params: DrivenQubitParams
    numeric: dict
    out: Path
    formats: tuple[str, ...] = FORMATS
    seed: int = 0
    preset: str | None = None
    source: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "command": self.command,
            "preset": self.preset,
            "params": asdict(self.params),
            "numeric": dict(self.numeric),
            "io": {"out": str(self.out), "formats": list(self.formats), "seed": self.seed},
        }


def _line_of(text: str, section: str, key: str) -> int | None:
    cur = "run"
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            cur = m.group(1).strip()
        elif cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return None


def _read_file(path: str | os.PathLike) -> dict[str, dict[str, tuple[str, int | None]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}") from exc
    # Leading keys without a header belong to [run]; the offset keeps line numbers honest.
    body = text
    offset = 0
    first = next((l.strip() for l in text.splitlines() if l.strip() and not l.strip().startswith(("#", ";"))), "")
    if not first.startswith("["):
        body = "[run]\n" + text
        offset = 1
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        cp.read_string(body)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - offset if exc.errors else None
        raise ParseError("malformed line", line=lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ParseError(str(exc).split(":")[-1].strip(), line=(exc.lineno or offset) - offset) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    out: dict[str, dict] = {}
    for sec in cp.sections():
        if sec not in _KEYS:
            raise ParseError(f"unknown section [{sec}]", line=_section_line(text, sec))
        for key, val in cp.items(sec):
            line = _line_of(text, sec, key)
            if key not in _KEYS[sec]:
                raise ParseError(f"unknown key {key!r} in [{sec}]", line=line, field=key)
            out.setdefault(sec, {})[key] = (val.strip(), line)
    return out


def _section_line(text: str, sec: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{sec}]":
            return i
    return None


def _number(val, key: str, line=None, kind=float):
    try:
        x = kind(val)
    except (TypeError, ValueError):
        raise ParseError(f"expected {'an integer' if kind is int else 'a number'}, got {val!r}",
                         line=line, field=key) from None
    if kind is float and not math.isfinite(x):
        raise ValidationError(key, "must be finite")
    return x


def _float_list(val: str, key: str) -> list[float]:
    try:
        return [float(x) for x in str(val).split(",") if x.strip()]
    except ValueError:
        raise ParseError(f"expected a comma-separated list of numbers, got {val!r}", field=key) from None


def parse_config(path: str | os.PathLike | None = None, flags: dict | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from an optional file plus flag overrides.

    ``flags`` may hold ``command, preset, out, formats, seed, m_max, rtol`` (``None``
    entries are ignored).

    Raises:
        ParseError: unreadable file, malformed line, unknown section/key, bad number.
        ValidationError: a value violates its constraint.
    """
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    raw = _read_file(path) if path is not None else {}
    get = lambda sec, key: raw.get(sec, {}).get(key, (None, None))  # noqa: E731

    preset = flags.get("preset") or get("run", "preset")[0]
    if preset is not None and preset not in PRESETS:
        raise ValidationError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    base = PRESETS[preset or "fig1"]

    command = flags.get("command") or get("run", "command")[0] or (base["command"] if preset else None)
    if command is None:
        raise ValidationError("command", "no command given")
    if command not in COMMANDS:
        raise ValidationError("command", f"unknown command {command!r}; choose from {list(COMMANDS)}")

    pvals = dict(base["params"])
    for key in _KEYS["params"]:
        val, line = get("params", key)
        if val is not None:
            pvals[key] = _number(val, key, line)
    params = DrivenQubitParams(**pvals)

    numeric = dict(NUMERIC_DEFAULTS)
    numeric.update(base.get("numeric", {}))
    for key in NUMERIC_DEFAULTS:
        val, line = get("numeric", key)
        if val is None:
            continue
        if key in _STR_KEYS:
            numeric[key] = val
        else:
            numeric[key] = _number(val, key, line, int if key in _INT_KEYS else float)
    if "m_max" in flags:
        numeric["m_max"] = _number(flags["m_max"], "m_max", kind=int)
    if "rtol" in flags:
        numeric["rtol"] = _number(flags["rtol"], "rtol")
    for key, v in numeric.items():
        if key not in _STR_KEYS and not v > 0:
            raise ValidationError(key, "must be positive")
    if numeric["branch"] not in ("0", "+", "-"):
        raise ValidationError("branch", "must be one of 0, +, -")
    if numeric["mode"] not in ("rate_shift", "corner_coupling"):
        raise ValidationError("mode", "must be rate_shift or corner_coupling")
    if numeric["edge_margin"] >= numeric["m_max"]:
        raise ValidationError("edge_margin", "must be smaller than m_max")
    _float_list(numeric["m_max_list"], "m_max_list")
    _float_list(numeric["gammas"], "gammas")

    out = flags.get("out") or get("io", "out")[0] or os.environ.get(ENV_OUT) or "out"
    fmt = flags.get("formats") or get("io", "formats")[0] or ",".join(FORMATS)
    formats = tuple(f.strip() for f in str(fmt).split(",") if f.strip())
    bad = [f for f in formats if f not in FORMATS]
    if bad or not formats:
        raise ValidationError("formats", f"must be a non-empty subset of {list(FORMATS)}")
    seed_raw = flags.get("seed", get("io", "seed")[0])
    seed = 0 if seed_raw is None else _number(seed_raw, "seed", get("io", "seed")[1], int)
    if seed < 0:
        raise ValidationError("seed", "must be >= 0")
    return RunConfig(command, params, numeric, Path(out), formats, seed, preset,
                     source={"config": str(path) if path else None})


# ---------------------------------------------------------------- emitters

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_csv(path: Path, columns: dict[str, "np.ndarray | list"]) -> Path:
    """Comma-separated, header row, shortest round-trip floats, LF endings."""
    if not columns:
        raise ValueError("dataset is empty")
    names = list(columns)
    n = len(columns[names[0]])
    if any(len(columns[k]) != n for k in names):
        raise ValueError("columns differ in length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    cols = [columns[k] for k in names]
    for i in range(n):
        w.writerow([_fmt(c[i]) for c in cols])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, Path):
        return str(x)
    return x


def emit_json(path: Path, obj: dict) -> Path:
    if not obj:
        raise ValueError("dataset is empty")
    path.write_text(json.dumps(_jsonable(obj), indent=1, allow_nan=False) + "\n", encoding="utf-8", newline="")
    return path


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def emit_svg(path: Path, series: list[dict], xlabel: str, ylabel: str, title: str = "",
             vlines: list[float] | None = None, logy: bool = False) -> Path:
    """Self-contained SVG plot.

    Each series is ``{"x": ..., "y": ..., "kind": "line"|"scatter", "label": str}``.
    """
    series = [s for s in series if len(s["x"])]
    if not series:
        raise ValueError("dataset is empty")
    W, H, L, R, T, B = 640, 420, 70, 20, 30, 50
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], float) for s in series])
    if logy:
        ys = np.log10(np.maximum(ys, 1e-300))
    fin = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[fin].min()), float(xs[fin].max())
    y0, y1 = float(ys[fin].min()), float(ys[fin].max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    sx = lambda x: L + (x - x0) / (x1 - x0) * (W - L - R)  # noqa: E731
    sy = lambda y: H - B - (y - y0) / (y1 - y0) * (H - T - B)  # noqa: E731
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<rect x="{L}" y="{T}" width="{W - L - R}" height="{H - T - B}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{H - B}" x2="{sx(t):.2f}" y2="{H - B + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{H - B + 16}" text-anchor="middle">{t:.6g}</text>')
    for t in _ticks(y0, y1):
        lab = f"1e{t:.3g}" if logy else f"{t:.6g}"
        out.append(f'<line x1="{L - 4}" y1="{sy(t):.2f}" x2="{L}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{H - 12}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{(T + H - B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(T + H - B) / 2:.1f})">{_esc(ylabel)}</text>')
    for v in vlines or []:
        if x0 <= v <= x1:
            out.append(f'<line x1="{sx(v):.2f}" y1="{T}" x2="{sx(v):.2f}" y2="{H - B}" '
                       'stroke="#888" stroke-dasharray="4 3"/>')
    for k, s in enumerate(series):
        c = colors[k % len(colors)]
        x = np.asarray(s["x"], float)
        y = np.asarray(s["y"], float)
        if logy:
            y = np.log10(np.maximum(y, 1e-300))
        ok = np.isfinite(x) & np.isfinite(y)
        if s.get("kind", "line") == "line":
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.2"/>')
        else:
            out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="1.6" fill="{c}"/>'
                       for a, b in zip(x[ok], y[ok]))
        out.append(f'<text x="{W - R - 6}" y="{T + 14 + 14 * k}" text-anchor="end" fill="{c}">'
                   f'{_esc(s.get("label", ""))}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8", newline="")
    return path


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------- commands

def _time_grid(cfg: RunConfig) -> np.ndarray:
    T = cfg.params.period * cfg.numeric["periods"]
    n = int(round(T / cfg.numeric["dt"]))
    return np.linspace(0.0, T, n + 1)


def _cmd_evolve(cfg: RunConfig) -> dict:
    import warnings

    from .dynamics import adiabaticity_diagnostic, detect_drops, inversion_series
    from .errors import BranchCrossing

    t = _time_grid(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchCrossing)
        ts = adiabaticity_diagnostic(cfg.params, cfg.numeric["branch"], t,
                                     rtol=cfg.numeric["rtol"], atol=cfg.numeric["atol"])
    cols = {"t": ts.times, **{k: ts[k] for k in ("rx", "ry", "rz", "bloch_norm", "purity",
                                                     "trace_distance", "adiabatic_norm", "complex_flag")}}
    cols["inversion"] = inversion_series(ts)["inversion"]
    eps = ts.markers.get("ep_times", [])
    drops = detect_drops(ts.times, ts["bloch_norm"])
    summary = {
        "ep_times": eps,
        "final_bloch_norm": float(ts["bloch_norm"][-1]),
        "drops": [{"start": d.start, "end": d.end, "peak": d.peak, "rate": d.rate} for d in drops],
    }
    plot = dict(series=[{"x": ts.times, "y": ts["bloch_norm"], "label": "|R|"},
                        {"x": ts.times, "y": ts["trace_distance"], "label": "trace distance"}],
                xlabel="t", ylabel="value", title="Bloch amplitude and distance to adiabatic state", vlines=eps)
    return {"csv": cols, "json": summary, "svg": plot}


def _cmd_adiabatic(cfg: RunConfig) -> dict:
    from .qubit import adiabatic_eigenvalues, gamma_of_t, locate_eps

    t = _time_grid(cfg)
    trip = [adiabatic_eigenvalues(cfg.params, s) for s in t]
    cols = {"t": t, "gamma": gamma_of_t(cfg.params, t)}
    for name, attr in (("nu0", "nu0"), ("nu_plus", "nu_plus"), ("nu_minus", "nu_minus")):
        v = np.array([getattr(x, attr) for x in trip])
        cols[f"{name}_re"] = v.real
        cols[f"{name}_im"] = v.imag
    eps = locate_eps(cfg.params, cfg.numeric["periods"] - 1)
    plot = dict(series=[{"x": t, "y": cols["nu_plus_re"], "label": "Re nu+"},
                        {"x": t, "y": cols["nu_minus_re"], "label": "Re nu-"},
                        {"x": t, "y": cols["nu_plus_im"], "label": "Im nu+"},
                        {"x": t, "y": cols["nu_minus_im"], "label": "Im nu-"}],
                xlabel="t", ylabel="adiabatic eigenvalue", title="Adiabatic eigenvalues", vlines=eps)
    return {"csv": cols, "json": {"ep_times": eps}, "svg": plot}


def _cmd_ep(cfg: RunConfig) -> dict:
    from .qubit import adiabatic_eigenvalues, locate_eps

    eps = locate_eps(cfg.params, cfg.numeric["periods"] - 1)
    gaps = [abs(adiabatic_eigenvalues(cfg.params, t).nu_plus - adiabatic_eigenvalues(cfg.params, t).nu_minus)
            for t in eps]
    period = [int(t // cfg.params.period) for t in eps]
    cols = {"index": list(range(len(eps))), "t": eps, "period": period, "gap": gaps}
    out = {"json": {"ep_times": eps, "gaps": gaps}}
    if eps:
        out["csv"] = cols
        from .qubit import gamma_of_t

        tt = _time_grid(cfg)
        out["svg"] = dict(series=[{"x": tt, "y": gamma_of_t(cfg.params, tt), "label": "gamma(t)"}],
                          xlabel="t", ylabel="gamma", title="Exceptional points", vlines=eps)
    else:
        out["csv"] = {"index": [], "t": [], "period": [], "gap": []}
    return out


def _floquet_common(cfg: RunConfig):
    from .floquet import build_floquet, floquet_spectrum, ladder_candidates, ladder_fit

    spec = floquet_spectrum(build_floquet(cfg.params, cfg.numeric["m_max"]))
    rep = ladder_fit(spec, bulk_margin=cfg.numeric["edge_margin"])
    return spec, rep, ladder_candidates(cfg.params)


def _label(l: int) -> str | int:
    from .floquet import EDGE, SCATTERED

    return {SCATTERED: "scattered", EDGE: "edge_artifact"}.get(int(l), int(l))


def _cmd_floquet(cfg: RunConfig) -> dict:
    spec, rep, cands = _floquet_common(cfg)
    ev = spec.eigenvalues
    order = np.lexsort((ev.imag, ev.real))
    ev = ev[order]
    labels = rep.labels[order]
    data = {
        "schema": 1,
        "m_max": spec.m_max,
        "omega": spec.omega,
        "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
        "ipr": spec.ipr[order],
        "center_of_mass": spec.center_of_mass[order],
        "ladder_id": [_label(l) for l in labels],
        "ladders": [{"offset": [l.offset.real, l.offset.imag], "count": l.count,
                     "multiplicity": l.multiplicity, "residual": l.residual} for l in rep.ladders],
        "n_ladders": rep.n_ladders,
        "bulk_count": rep.bulk_count,
        "scattered_fraction": rep.scattered_fraction,
        "candidates": {k: [[float(z.real), float(z.imag)] for z in v] for k, v in cands.items()},
        "eigen_residual": spec.residual,
    }
    cols = {"re": ev.real, "im": ev.imag, "ipr": spec.ipr[order], "center_of_mass": spec.center_of_mass[order],
            "ladder_id": [_label(l) for l in labels]}
    series = []
    for name, mask in (("ladder", labels >= 0), ("scattered", labels == -1), ("edge artifact", labels == -2)):
        series.append({"x": ev.real[mask], "y": ev.imag[mask], "kind": "scatter", "label": name})
    plot = dict(series=series, xlabel="Re eps", ylabel="Im eps", title="Floquet spectrum")
    return {"csv": cols, "json": data, "svg": plot}


def _cmd_ipr(cfg: RunConfig) -> dict:
    from .floquet import ipr_vs_spectrum

    spec, rep, _ = _floquet_common(cfg)
    rows = sorted(ipr_vs_spectrum(spec, cfg.numeric["edge_margin"]))
    cols = {"re": [r[0] for r in rows], "ipr": [r[1] for r in rows], "ladder_id": [_label(r[2]) for r in rows]}
    lad = [r for r in rows if r[2] >= 0]
    sca = [r for r in rows if r[2] < 0]
    data = {"schema": 1, "count": len(rows), "ipr_max_allowed": spec.size,
            "median_ipr_ladder": float(np.median([r[1] for r in lad])) if lad else None,
            "median_ipr_scattered": float(np.median([r[1] for r in sca])) if sca else None,
            "median_ipr_bulk": float(np.median(cols["ipr"])) if rows else None}
    plot = dict(series=[{"x": [r[0] for r in lad], "y": [r[1] for r in lad], "kind": "scatter", "label": "ladder"},
                        {"x": [r[0] for r in sca], "y": [r[1] for r in sca], "kind": "scatter",
                         "label": "scattered"}],
                xlabel="Re eps", ylabel="IPR", title="IPR versus Re eps")
    return {"csv": cols, "json": data, "svg": plot}


def _cmd_algebra(cfg: RunConfig) -> dict:
    from .liealgebra import (PAULI_LABELS, SuperOpElement, closure, closure_residual, ep_existence_probe,
                             jacobi_residual, model_pieces, pauli_terms, small_model, small_model_generators)
    from .qubit import model_spec
    from .superop import build_liouvillian

    unit = lambda l: SuperOpElement(np.eye(16)[PAULI_LABELS.index(l)], l)  # noqa: E731
    model = model_spec(cfg.params)
    sets = {
        "five_generators": [unit(l) for l in ("zI", "Iz", "yy", "yI", "Iy")],
        "model_pauli_terms": pauli_terms(build_liouvillian(model, 0.0)),
        "model_pieces": model_pieces(model),
        "small_model": small_model_generators(),
    }
    rows = []
    for name, gens in sets.items():
        c = closure(gens)
        rows.append({"set": name, "n_generators": len(gens), "dim": c.dim, "generations": c.generations,
                     "jacobi_residual": jacobi_residual(c), "closure_residual": closure_residual(c)})
    probe = ep_existence_probe(lambda **k: model_spec(DrivenQubitParams(**k)), [asdict(cfg.params)])
    probe += ep_existence_probe(small_model, [dict(Omega=1.0, gamma_up=0.2, gamma_down=0.5, gamma_z=0.1)],
                                generators=lambda m: small_model_generators())
    cols = {k: [r[k] for r in rows] for k in rows[0]}
    data = {"closures": rows, "ep_probe": [asdict(p) for p in probe]}
    plot = dict(series=[{"x": list(range(len(rows))), "y": [r["dim"] for r in rows], "kind": "scatter",
                         "label": ", ".join(r["set"] for r in rows)}],
                xlabel="generator set", ylabel="closure dimension", title="Lie closure dimensions")
    return {"csv": cols, "json": data, "svg": plot}


def _cmd_sensitivity(cfg: RunConfig) -> dict:
    from .floquet import sensitivity_probe

    mm = [int(x) for x in _float_list(cfg.numeric["m_max_list"], "m_max_list")]
    rep = sensitivity_probe(cfg.params, mm, cfg.numeric["epsilon"], cfg.numeric["mode"],
                            bulk_margin=cfg.numeric["edge_margin"])
    cols = {"m_max": rep.m_max, "displacement": rep.displacement}
    data = {"slope": rep.slope, "intercept": rep.intercept, "r2": rep.r2, "exponential": rep.exponential,
            "epsilon": rep.epsilon, "mode": rep.mode, "m_max": rep.m_max, "displacement": rep.displacement}
    plot = dict(series=[{"x": rep.m_max, "y": rep.displacement, "kind": "line", "label": "d(m_max)"}],
                xlabel="m_max", ylabel="displacement", title="Spectral sensitivity", logy=True)
    return {"csv": cols, "json": data, "svg": plot}


def _cmd_oracle_check(cfg: RunConfig) -> dict:
    from .oracles import run_oracle_suite

    results = run_oracle_suite(seed=cfg.seed, n_random=cfg.numeric["n_random"])
    cols = {"check": [r["name"] for r in results], "value": [r["value"] for r in results],
            "limit": [r["limit"] for r in results], "passed": [r["passed"] for r in results]}
    return {"csv": cols, "json": {"checks": results, "all_passed": all(r["passed"] for r in results)},
            "svg": None, "status": OK if all(r["passed"] for r in results) else FAILED_CHECK}


_DISPATCH = {
    "evolve": _cmd_evolve,
    "adiabatic": _cmd_adiabatic,
    "ep": _cmd_ep,
    "floquet": _cmd_floquet,
    "ipr": _cmd_ipr,
    "algebra": _cmd_algebra,
    "sensitivity": _cmd_sensitivity,
    "oracle-check": _cmd_oracle_check,
}


def _stem(cfg: RunConfig) -> str:
    return f"{cfg.preset}_{cfg.command}" if cfg.preset else cfg.command


def _write_error(cfg_out: Path | None, exc: BaseException) -> dict:
    err = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("t", "h", "condition", "line", "field", "constraint"):
        if hasattr(exc, attr) and getattr(exc, attr) is not None:
            err[attr] = _jsonable(getattr(exc, attr))
    if cfg_out is not None:
        try:
            cfg_out.mkdir(parents=True, exist_ok=True)
            (cfg_out / "error.json").write_text(json.dumps(err, indent=1) + "\n", encoding="utf-8")
        except OSError:
            pass
    return err


def run(cfg: RunConfig) -> int:
    """Execute one command, write its artifacts and a manifest; returns the exit code."""
    start = time.perf_counter()
    np.random.seed(cfg.seed)
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        result = _DISPATCH[cfg.command](cfg)
    except DrivenLindbladError as exc:
        print(json.dumps(_write_error(cfg.out, exc)), file=sys.stderr)
        return COMPUTE_ERROR
    except (ArithmeticError, ValueError) as exc:
        print(json.dumps(_write_error(cfg.out, exc)), file=sys.stderr)
        return COMPUTE_ERROR
    stem = _stem(cfg)
    files = []
    try:
        if "csv" in cfg.formats and result.get("csv"):
            files.append(emit_csv(cfg.out / f"{stem}.csv", result["csv"]).name)
        if "json" in cfg.formats and result.get("json"):
            files.append(emit_json(cfg.out / f"{stem}.json", result["json"]).name)
        if "svg" in cfg.formats and result.get("svg"):
            files.append(emit_svg(cfg.out / f"{stem}.svg", **result["svg"]).name)
        manifest = {
            "config": cfg.echo(),
            "code_version": __version__,
            "numpy": np.__version__,
            "wall_time_s": time.perf_counter() - start,
            "workers": 1,
            "files": files,
        }
        emit_json(cfg.out / f"{stem}.manifest.json", manifest)
    except OSError as exc:
        print(json.dumps(_write_error(None, exc)), file=sys.stderr)
        return COMPUTE_ERROR
    status = result.get("status", OK)
    for f in files:
        print(cfg.out / f)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="driven-lindblad", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--config")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--out")
    ap.add_argument("--format", dest="formats")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--m-max", dest="m_max", type=int)
    ap.add_argument("--rtol", type=float)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        cfg = parse_config(args.config, flags)
    except (ParseError, ValidationError) as exc:
        print(json.dumps(_write_error(None, exc)), file=sys.stderr)
        return CONFIG_ERROR
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
