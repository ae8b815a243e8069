"""Command-line interface.

Every subcommand evaluates one quantity over a grid of ``g``, ``d``, ``T``
(and ``eta``) values and writes a plot-ready table::

    trapchsh spectrum --g -1.5 --d 0:6:0.05 --count 4
    trapchsh entropy --g 1 --d 0,1,2,4
    trapchsh negativity --g 10 --d 0 --T 0:2:0.1 --part relative
    trapchsh chsh --g 10 --d 0:0.2:0.01 --T 0
    trapchsh witness --g 10 --d 0 --eta 0.85:1:0.01

Ranges are scalars, comma lists or inclusive ``start:stop:step``.  Options may
also come from a JSON file given with ``--config``; command-line flags win.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import constants

from . import __version__
from .density import ground_state, reduced_density_kernel, schmidt_spectrum, von_neumann_entropy
from .losschannel import LossChannel, _lower_threshold, lossy_chsh, lossy_relative_grid, optimize_witness
from .nonlocality import DEFAULT_PHASE, J_MAX, optimize_chsh, threshold_crossing
from .numerics import parallel_map
from .spectrum import MAX_COUNT, ROOT_TOL, Resonance, SpectrumCache, SpectrumTable, TrapConfig, find_resonances, relative_spectrum, use_cache
from .wigner import (
    GRID_STEP,
    com_wigner_grid,
    default_com_axes,
    default_relative_axes,
    lab_wigner,
    negativity_volume,
    relative_wigner_grid,
    thermal_weights,
)

__all__ = [
    "UsageError",
    "RunConfig",
    "ResultEnvelope",
    "parse_range",
    "parse_config",
    "physical_g",
    "run",
    "main",
    "COLUMNS",
]

SUBCOMMANDS = ("spectrum", "entropy", "wigner", "negativity", "chsh", "witness", "sweep")
CONFINEMENT_C = 1.4603

COLUMNS = {
    "spectrum": ["kind", "g", "d", "level", "nu", "energy", "gap"],
    "entropy": ["g", "d", "entropy", "lambda1", "lambda2", "lambda3", "trace"],
    "wigner": ["g", "d", "T", "eta", "q", "p", "W"],
    "negativity": ["g", "d", "T", "part", "negativity", "stderr"],
    "chsh": ["g", "d", "T", "j_star", "B", "violated"],
    "witness": ["g", "d", "T", "eta", "chsh_B", "chsh_j", "witness", "witness_j", "branch", "violated"],
    "sweep": ["g", "d", "T", "entropy", "negativity_relative", "chsh_B", "chsh_j", "violated"],
}


class UsageError(ValueError):
    """Invalid command line or configuration file."""


class ComputationError(RuntimeError):
    """Every point of the run failed."""


# ---------------------------------------------------------------------------
# Configuration


def parse_range(spec) -> list[float]:
    """Parse a scalar, comma list or inclusive ``start:stop:step`` range.

    Lists of numbers (from a JSON config) are accepted as they are.

    >>> parse_range("0:0.2:0.1")
    [0.0, 0.1, 0.2]
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        out = []
        for item in spec:
            out.extend(parse_range(item))
        if not out:
            raise UsageError("empty value list")
        return out
    if not isinstance(spec, str) or not spec.strip():
        raise UsageError(f"cannot parse range {spec!r}")
    text = spec.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"range {text!r} must be start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if not step > 0:
                raise UsageError(f"range step must be positive in {text!r}")
            if stop < start:
                raise UsageError(f"range {text!r} is empty")
            n = int(math.floor((stop - start) / step + 1e-9))
            return [float(round(start + k * step, 12)) for k in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()] or _raise(f"empty list {text!r}")
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse range {text!r}: {exc}") from None


def _raise(msg):
    raise UsageError(msg)


@dataclass
class RunConfig:
    """Fully resolved run settings (echoed in the output header)."""

    subcommand: str
    g: list = field(default_factory=lambda: [10.0])
    d: list = field(default_factory=lambda: [0.0])
    T: list = field(default_factory=lambda: [0.0])
    eta: list = field(default_factory=lambda: [1.0])
    part: str = "relative"
    count: int = 6
    spacing: float | None = None
    j_max: float = J_MAX
    phase: float = DEFAULT_PHASE
    samples: int = 1_000_000
    seed: int = 0
    threads: int = 1
    out: str | None = None
    format: str = "csv"
    timings: bool = False
    a3d: float | None = None
    a_perp: float | None = None
    mass: float | None = None
    omega: float | None = None

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        for name in ("g", "d", "T", "eta"):
            vals = getattr(self, name)
            if not vals:
                raise UsageError(f"--{name} is empty")
            if not all(math.isfinite(v) for v in vals):
                raise UsageError(f"--{name} values must be finite")
        if any(t < 0 for t in self.T):
            raise UsageError("--T must be non-negative")
        if any(not (0.0 < e <= 1.0) for e in self.eta):
            raise UsageError("--eta values must lie in (0, 1]")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if not 1 <= self.count <= MAX_COUNT:
            raise UsageError(f"--count must lie in [1, {MAX_COUNT}]")
        if self.threads < 1:
            raise UsageError("--threads must be positive")
        if self.samples < 1000:
            raise UsageError("--samples must be at least 1000")
        if self.spacing is not None and not self.spacing > 0:
            raise UsageError("--spacing must be positive")
        if not self.j_max > 0:
            raise UsageError("--j-max must be positive")
        allowed = {"wigner": ("relative", "com"), "negativity": ("relative", "com", "total")}
        if self.subcommand in allowed and self.part not in allowed[self.subcommand]:
            raise UsageError(f"--part must be one of {allowed[self.subcommand]} for {self.subcommand}")
        if self.subcommand == "entropy" and any(t != 0 for t in self.T):
            raise UsageError("entropy is defined for the ground state only (T = 0)")
        return self


_SCALAR_TYPES = {
    "part": str,
    "count": int,
    "spacing": float,
    "j_max": float,
    "phase": float,
    "samples": int,
    "seed": int,
    "threads": int,
    "out": str,
    "format": str,
    "timings": bool,
    "a3d": float,
    "a_perp": float,
    "mass": float,
    "omega": float,
}
_RANGE_KEYS = ("g", "d", "T", "eta")
_HELP = {
    "spectrum": "relative-motion levels",
    "entropy": "ground-state entanglement entropy and Schmidt weights",
    "wigner": "relative Wigner function on a phase-space grid",
    "negativity": "Wigner negativity volume",
    "chsh": "optimised phase-space CHSH value",
    "witness": "lossy CHSH value and loss-robust witness",
    "sweep": "entropy, negativity and CHSH over a parameter grid",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trapchsh", description="Two atoms in displaced traps: spectra, entanglement and phase-space nonlocality.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    sub.required = True
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", help="JSON file with option values (flags override it)")
        for key in _RANGE_KEYS:
            p.add_argument(f"--{key}", default=None, help="scalar, comma list or start:stop:step")
        p.add_argument("--part", default=None, help="relative | com | total")
        p.add_argument("--count", type=int, default=None, help="number of relative levels (spectrum)")
        p.add_argument("--spacing", type=float, default=None, help="grid step override")
        p.add_argument("--j-max", dest="j_max", type=float, default=None, help="upper end of the displacement search")
        p.add_argument("--phase", type=float, default=None, help="displacement phase in radians (default pi/2)")
        p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples")
        p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
        p.add_argument("--threads", type=int, default=None, help="worker processes")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", default=None, help="csv | json")
        p.add_argument("--timings", action="store_const", const=True, default=None, help="record wall-clock timings")
        p.add_argument("--a3d", type=float, default=None, help="3-D scattering length [m]")
        p.add_argument("--a-perp", dest="a_perp", type=float, default=None, help="transverse oscillator length [m]")
        p.add_argument("--mass", type=float, default=None, help="atomic mass [kg]")
        p.add_argument("--omega", type=float, default=None, help="axial trap angular frequency [1/s]")
    return parser


def _coerce(key, value):
    if key in _RANGE_KEYS:
        return parse_range(value)
    typ = _SCALAR_TYPES[key]
    if value is None:
        return None
    if typ is bool:
        if not isinstance(value, bool):
            raise UsageError(f"config key {key!r} must be true or false")
        return value
    try:
        if typ is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return typ(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r} has invalid value {value!r}") from None


def parse_config(argv: Sequence[str] | None = None, config_file: str | None = None) -> RunConfig:
    """Resolve defaults, then the JSON config file, then command-line flags.

    Raises
    ------
    UsageError
        On unknown config keys or invalid values.
    SystemExit
        From :mod:`argparse` on malformed command lines (exit code 2).
    """
    args = _build_parser().parse_args(list(argv) if argv is not None else None)
    values: dict = {}
    path = args.config or config_file
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file {path!r}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in data.items():
            k = key.replace("-", "_")
            if k not in _RANGE_KEYS and k not in _SCALAR_TYPES:
                raise UsageError(f"unknown config key {key!r}")
            values[k] = _coerce(k, value)
    for key in (*_RANGE_KEYS, *_SCALAR_TYPES):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _coerce(key, v)

    phys = [values.get(k) for k in ("a3d", "a_perp", "mass", "omega")]
    if any(v is not None for v in phys):
        if not all(v is not None for v in phys):
            raise UsageError("physical units need all of --a3d, --a-perp, --mass and --omega")
        if "g" in values:
            raise UsageError("give either --g or the physical parameters, not both")
        try:
            values["g"] = [physical_g(*phys)]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    cfg = RunConfig(subcommand=args.subcommand, **values)
    return cfg.validate()


def physical_g(a3d: float, a_perp: float, mass: float, omega: float) -> float:
    """Scaled contact strength from trap and scattering parameters (SI units).

    ``a_1D = -a_perp^2 / (2 a3d) (1 - C a3d / a_perp)`` and
    ``g_1D = -2 hbar^2 / (m_r a_1D)`` with ``m_r = m/2``; the scaled strength
    is ``g_1D / (hbar omega a)`` with ``a = sqrt(hbar / (m omega))``.

    Raises
    ------
    ValueError
        For non-positive ``a_perp``, ``mass`` or ``omega``, or at the
        confinement-induced resonance ``a3d = a_perp / C``.
    """
    if not (a_perp > 0 and mass > 0 and omega > 0):
        raise ValueError("a_perp, mass and omega must be positive")
    if a3d == 0.0:
        return 0.0
    factor = 1.0 - CONFINEMENT_C * a3d / a_perp
    critical = a_perp / CONFINEMENT_C
    if abs(factor) < 1e-12:
        raise ValueError(f"confinement-induced resonance: a3d = a_perp / C = {critical!r} m makes g diverge")
    hbar = constants.hbar
    a1d = -(a_perp**2) / (2.0 * a3d) * factor
    g1d = -2.0 * hbar**2 / ((mass / 2.0) * a1d)
    a_ho = math.sqrt(hbar / (mass * omega))
    return g1d / (hbar * omega * a_ho)


# ---------------------------------------------------------------------------
# Per-point workers (top level so that they pickle)


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _captured(fn, *args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        t0 = time.perf_counter()
        rows = fn(*args)
        elapsed = time.perf_counter() - t0
    msgs = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    return rows, msgs, elapsed


def _spectrum_rows(g, d, count):
    recs = relative_spectrum(TrapConfig(g, d), count)
    # gap: spacing to the next level (nan for the highest one).
    nxt = [r.nu for r in recs[1:]] + [math.nan]
    return [
        {"kind": r.family, "g": g, "d": d, "level": r.index, "nu": r.nu, "energy": r.energy, "gap": n - r.nu}
        for r, n in zip(recs, nxt)
    ]


def _entropy_rows(g, d, spacing):
    k = reduced_density_kernel(ground_state(TrapConfig(g, d)), spacing=spacing or None)
    lam = schmidt_spectrum(k).lambdas
    top = list(lam[:3]) + [math.nan] * max(0, 3 - lam.size)
    return [{"g": g, "d": d, "entropy": von_neumann_entropy(lam), "lambda1": float(top[0]), "lambda2": float(top[1]), "lambda3": float(top[2]), "trace": float(lam.sum())}]


def _wigner_rows(g, d, T, eta, part, spacing):
    ens = thermal_weights(TrapConfig(g, d), T)
    src = lab_wigner(ens)
    step = spacing or GRID_STEP
    if part == "com":
        X, P = default_com_axes(max(src.com_weights()))
        if spacing:
            X = step * np.arange(-round(X[-1] / step), round(X[-1] / step) + 1)
            P = step * np.arange(-round(P[-1] / step), round(P[-1] / step) + 1)
        cw = src.com_weights()
        if eta < 1.0:
            from .losschannel import _binomial_matrix

            n_max = max(cw)
            B = _binomial_matrix(n_max, eta)
            cw = {k: float(sum(w * B[n, k] for n, w in cw.items())) for k in range(n_max + 1)}
        grid = com_wigner_grid(cw, X, P)
    else:
        rw = src.rel_weights()
        r_ax, p_ax = default_relative_axes(src.cfg, max(src.rel_states[s].nu for s in rw))
        if spacing:
            r_ax = step * np.arange(-round(r_ax[-1] / step), round(r_ax[-1] / step) + 1)
            p_ax = step * np.arange(-round(p_ax[-1] / step), round(p_ax[-1] / step) + 1)
        if eta < 1.0:
            grids = [(w, lossy_relative_grid(src.rel_states[s], eta, r_ax, p_ax)) for s, w in rw.items()]
            vals = sum(w * gr.values for w, gr in grids)
            r_ax = grids[0][1].q_axis
        else:
            vals = relative_wigner_grid([src.rel_states[s] for s in rw], list(rw.values()), r_ax, p_ax).values
        from .wigner import PhaseSpaceGrid2D

        grid = PhaseSpaceGrid2D(r_ax, p_ax, vals)
    rows = []
    for i, q in enumerate(grid.q_axis):
        for j, p in enumerate(grid.p_axis):
            rows.append({"g": g, "d": d, "T": T, "eta": eta, "q": float(q), "p": float(p), "W": float(grid.values[i, j])})
    return rows


def _negativity_rows(g, d, T, part, samples, seed):
    src = lab_wigner(thermal_weights(TrapConfig(g, d), T))
    if part == "total":
        mode = "total-T0" if src.is_pure else "total-montecarlo"
        label = mode
    else:
        mode = label = part
    val, err = negativity_volume(src, mode, samples=samples, seed=seed, return_error=True)
    return [{"g": g, "d": d, "T": T, "part": label, "negativity": val, "stderr": err}]


def _chsh_rows(g, d, T, j_max, phase):
    r = optimize_chsh(lab_wigner(thermal_weights(TrapConfig(g, d), T)), j_max, phase=phase)
    return [{"g": g, "d": d, "T": T, "j_star": r.j_star, "B": r.b_value, "violated": r.violated}]


def _witness_rows(g, d, T, eta, j_max, phase):
    src = lab_wigner(thermal_weights(TrapConfig(g, d), T))
    c = lossy_chsh(src, eta, phase=phase, j_max=j_max)
    w = optimize_witness(src, LossChannel(eta), j_max, phase=phase)
    return [{"g": g, "d": d, "T": T, "eta": eta, "chsh_B": c.b_value, "chsh_j": c.j_star, "witness": w.value, "witness_j": w.j_used, "branch": w.branch, "violated": w.violated}]


def _sweep_rows(g, d, T, j_max, phase, spacing):
    cfg = TrapConfig(g, d)
    ent = _entropy_rows(g, d, spacing)[0]["entropy"] if T == 0 else math.nan
    src = lab_wigner(thermal_weights(cfg, T))
    nv = negativity_volume(src, "relative")
    r = optimize_chsh(src, j_max, phase=phase)
    return [{"g": g, "d": d, "T": T, "entropy": ent, "negativity_relative": nv, "chsh_B": r.b_value, "chsh_j": r.j_star, "violated": r.violated}]


_WORKERS = {
    "spectrum": _spectrum_rows,
    "entropy": _entropy_rows,
    "wigner": _wigner_rows,
    "negativity": _negativity_rows,
    "chsh": _chsh_rows,
    "witness": _witness_rows,
    "sweep": _sweep_rows,
}


def _task(item):
    name, args = item
    return _captured(_WORKERS[name], *args)


def _tasks(cfg: RunConfig) -> list[tuple]:
    s = cfg.subcommand
    out = []
    if s == "spectrum":
        out = [(g, d, cfg.count) for g in cfg.g for d in cfg.d]
    elif s == "entropy":
        out = [(g, d, cfg.spacing) for g in cfg.g for d in cfg.d]
    elif s == "wigner":
        out = [(g, d, T, e, cfg.part, cfg.spacing) for g in cfg.g for d in cfg.d for T in cfg.T for e in cfg.eta]
    elif s == "negativity":
        pts = [(g, d, T) for g in cfg.g for d in cfg.d for T in cfg.T]
        out = [(g, d, T, cfg.part, cfg.samples, _point_seed(cfg.seed, i)) for i, (g, d, T) in enumerate(pts)]
    elif s == "chsh":
        out = [(g, d, T, cfg.j_max, cfg.phase) for g in cfg.g for d in cfg.d for T in cfg.T]
    elif s == "witness":
        out = [(g, d, T, e, cfg.j_max, cfg.phase) for g in cfg.g for d in cfg.d for T in cfg.T for e in cfg.eta]
    elif s == "sweep":
        out = [(g, d, T, cfg.j_max, cfg.phase, cfg.spacing) for g in cfg.g for d in cfg.d for T in cfg.T]
    return out


# ---------------------------------------------------------------------------
# Running and output


@dataclass
class ResultEnvelope:
    """Header (echoed configuration), named rows and diagnostics."""

    header: dict
    columns: list
    rows: list
    diagnostics: dict


def _tolerances() -> dict:
    return {"root_tol": ROOT_TOL, "chsh_tol": 1e-6, "thermal_eps": 1e-8, "density_clip": 1e-8}


def _post_process(cfg: RunConfig, rows: list, diag: dict):
    s = cfg.subcommand
    if s == "spectrum" and len(cfg.d) >= 3:
        ds = sorted(set(cfg.d))
        for g in cfg.g:
            table_rows = [r for r in rows if r["g"] == g and r["kind"] != "resonance"]
            nus = np.full((len(ds), cfg.count), np.nan)
            for r in table_rows:
                nus[ds.index(r["d"]), r["level"]] = r["nu"]
            res: list[Resonance] = find_resonances(SpectrumTable("d", np.asarray(ds), nus, g=g))
            for rz in res:
                rows.append({"kind": "resonance", "g": g, "d": rz.location, "level": rz.levels[0], "nu": math.nan, "energy": math.nan, "gap": rz.min_gap})
    if s == "entropy":
        maxima = {}
        for g in cfg.g:
            if g < 0:
                pts = sorted((r["d"], r["entropy"]) for r in rows if r["g"] == g)
                maxima[repr(g)] = [pts[i][0] for i in range(1, len(pts) - 1) if pts[i][1] > pts[i - 1][1] and pts[i][1] >= pts[i + 1][1]]
        if maxima:
            diag["entropy_local_maxima"] = maxima
    if s in ("chsh", "sweep"):
        d_c, T_c = {}, {}
        for g in cfg.g:
            for T in cfg.T:
                if len(cfg.d) >= 2:
                    pts = sorted((r["d"], abs(r["B"] if s == "chsh" else r["chsh_B"])) for r in rows if r["g"] == g and r["T"] == T)
                    d_c[f"g={g!r},T={T!r}"] = threshold_crossing([p[0] for p in pts], [p[1] for p in pts])
            for d in cfg.d:
                if len(cfg.T) >= 2:
                    viol = [r["T"] for r in rows if r["g"] == g and r["d"] == d and r["violated"]]
                    T_c[f"g={g!r},d={d!r}"] = max(viol) if viol else math.nan
        if d_c:
            diag["d_threshold"] = d_c
        if T_c:
            diag["largest_violating_T"] = T_c
    if s == "witness" and len(cfg.eta) >= 2:
        th = {}
        for g in cfg.g:
            for d in cfg.d:
                for T in cfg.T:
                    sel = [r for r in rows if r["g"] == g and r["d"] == d and r["T"] == T]
                    etas = np.array([r["eta"] for r in sel])
                    th[f"g={g!r},d={d!r},T={T!r}"] = {
                        "chsh": _lower_threshold(etas, np.abs([r["chsh_B"] for r in sel])),
                        "witness": _lower_threshold(etas, np.array([r["witness"] for r in sel])),
                    }
        diag["eta_threshold"] = th
    if s == "negativity":
        mc = [r["stderr"] for r in rows if r["stderr"] > 0]
        if mc:
            diag["max_montecarlo_stderr"] = max(mc)


def run(cfg: RunConfig) -> ResultEnvelope:
    """Evaluate all points of ``cfg``; failures are reported per point."""
    cfg.validate()
    cache_dir = os.environ.get("TRAPCHSH_CACHE_DIR")
    cache = SpectrumCache(cache_dir) if cache_dir else SpectrumCache()
    prev = use_cache(cache)
    t0 = time.perf_counter()
    try:
        tasks = _tasks(cfg)
        results = parallel_map(_task, [(cfg.subcommand, t) for t in tasks], cfg.threads, return_exceptions=True)
    finally:
        use_cache(prev)
        cache.save()
    rows, errors, warns, timings = [], {}, [], []
    for args, res in zip(tasks, results):
        if isinstance(res, Exception):
            errors[repr(tuple(args[:4]))] = f"{type(res).__name__}: {res}"
            continue
        r, w, dt = res
        rows.extend(r)
        warns.extend(w)
        timings.append(dt)
    if tasks and not rows:
        raise ComputationError("every point failed: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))
    diag: dict = {"warnings": sorted(set(warns)), "errors": errors}
    _post_process(cfg, rows, diag)
    if cfg.timings:
        diag["timings"] = {"total_seconds": time.perf_counter() - t0, "max_point_seconds": max(timings, default=0.0)}
    header = {"artifact_version": __version__, "config": asdict(cfg), "tolerances": _tolerances(), "columns": COLUMNS[cfg.subcommand]}
    return ResultEnvelope(header, COLUMNS[cfg.subcommand], rows, diag)


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return v


def format_envelope(env: ResultEnvelope, fmt: str) -> str:
    """Serialise to CSV (``#`` header lines, then the table) or JSON."""
    if fmt == "json":
        obj = {"header": _jsonable(env.header), "rows": [_jsonable({c: r[c] for c in env.columns}) for r in env.rows], "diagnostics": _jsonable(env.diagnostics)}
        return json.dumps(obj, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key, value in env.header.items():
        buf.write(f"# {key}={json.dumps(_jsonable(value), sort_keys=True)}\n")
    buf.write(f"# diagnostics={json.dumps(_jsonable(env.diagnostics), sort_keys=True)}\n")
    buf.write(",".join(env.columns) + "\n")
    for r in env.rows:
        buf.write(",".join(_cell(r[c]) for c in env.columns) + "\n")
    return buf.getvalue()


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code (0, 2 usage, 3 failure)."""
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"trapchsh: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        env = run(cfg)
    except ComputationError as exc:
        print(f"trapchsh: {exc}", file=sys.stderr)
        return 3
    text = format_envelope(env, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
