"""Relative-motion spectrum of two atoms in displaced harmonic traps.

In scaled units (energies in ``hbar*omega``, lengths in the oscillator length)
the relative coordinate ``r = x1 - x2`` obeys

.. math:: -\\psi'' + \\frac{(r-d)^2}{4}\\psi + (\\text{contact term at } r=0)
          = (\\nu + \\tfrac12)\\psi ,

whose solutions on either side of the contact point are parabolic cylinder
functions.  Matching them at ``r = 0`` gives the transcendental condition
implemented in :func:`eigen_condition`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .numerics import Interval, bracket_roots, parallel_map, refine_root
from .specfun import pcf_arrays

__all__ = [
    "TrapConfig",
    "EigenvalueRecord",
    "SpectrumTable",
    "Resonance",
    "SolverWindowError",
    "eigen_condition",
    "node_condition",
    "relative_spectrum",
    "spectrum_sweep",
    "find_resonances",
    "SpectrumCache",
    "use_cache",
    "NU_FLOOR",
    "ROOT_TOL",
]

#: Lowest order scanned for roots (deepest bound state resolved).
NU_FLOOR = -10.0
#: Absolute tolerance on refined roots.
ROOT_TOL = 1e-11
#: Largest level count and separation for which the scan stays inside the
#: validated box of the parabolic cylinder functions.
MAX_COUNT = 28
D_MAX = 20.0
#: Bracketing grid step in nu.
SCAN_STEP = 0.02
#: Roots closer than this are treated as the same level.
DEDUP_TOL = 1e-8
_GRID_OFFSET = 0.00731


class SolverWindowError(RuntimeError):
    """Raised when fewer roots than requested exist below the scan ceiling."""


@dataclass(frozen=True)
class TrapConfig:
    """Contact strength ``g`` and trap separation ``d`` (scaled units)."""

    g: float
    d: float

    def __post_init__(self):
        g, d = float(self.g), float(self.d)
        if not (math.isfinite(g) and math.isfinite(d)):
            raise ValueError(f"TrapConfig needs finite g and d, got g={g}, d={d}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class EigenvalueRecord:
    """One relative-motion level: ``energy = nu + 1/2`` in units of ``hbar*omega``."""

    index: int
    nu: float
    energy: float
    family: str  # "interacting" or "node"


@dataclass(frozen=True)
class SpectrumTable:
    """Relative energies along a parameter axis.

    ``nus[i, k]`` is the ``k``-th level (ascending) at ``axis[i]``.
    """

    axis_name: str
    axis: np.ndarray
    nus: np.ndarray
    g: float | None = None
    d: float | None = None
    errors: dict = field(default_factory=dict)

    @property
    def levels(self) -> np.ndarray:
        """Energies ``nu + 1/2``."""
        return self.nus + 0.5


@dataclass(frozen=True)
class Resonance:
    """Avoided crossing between two adjacent levels."""

    location: float
    levels: tuple[int, int]
    min_gap: float


class SpectrumCache:
    """Memo of :func:`relative_spectrum` results keyed by ``(g, d, count, tol)``.

    Optionally persisted as JSON in ``directory``.  The file records a format
    version and the root tolerance; a file written with a different version
    or tolerance is ignored and replaced on the next :meth:`save`.
    """

    VERSION = 1

    def __init__(self, directory=None, tol: float = ROOT_TOL):
        import os

        self.tol = float(tol)
        self.entries: dict = {}
        self.hits = 0
        self.path = None
        if directory:
            os.makedirs(directory, exist_ok=True)
            self.path = os.path.join(directory, f"spectrum-cache-v{self.VERSION}.json")
            self._load()

    def _load(self):
        import json
        import os

        if not os.path.exists(self.path):
            return
        try:
            with open(self.path) as fh:
                data = json.load(fh)
        except (OSError, ValueError):
            return
        if data.get("version") != self.VERSION or data.get("tol") != self.tol:
            return
        for g, d, count, levels in data.get("entries", []):
            self.entries[(float(g), float(d), int(count), self.tol)] = tuple((float(v), str(f)) for v, f in levels)

    def save(self):
        import json

        if self.path is None:
            return
        rows = [[k[0], k[1], k[2], [list(x) for x in v]] for k, v in sorted(self.entries.items()) if k[3] == self.tol]
        with open(self.path, "w") as fh:
            json.dump({"version": self.VERSION, "tol": self.tol, "entries": rows}, fh)

    def get(self, key):
        out = self.entries.get(key)
        if out is not None:
            self.hits += 1
        return out

    def put(self, key, levels):
        self.entries[key] = tuple(levels)


_CACHE: SpectrumCache | None = None


def use_cache(cache: SpectrumCache | None) -> SpectrumCache | None:
    """Install ``cache`` for :func:`relative_spectrum`; returns the previous one."""
    global _CACHE
    prev, _CACHE = _CACHE, cache
    return prev


# ---------------------------------------------------------------------------
# Conditions


def _pcf_at(nu, d):
    dp, dp1 = pcf_arrays(nu, d, check=False)
    dm, dm1 = pcf_arrays(nu, -d, check=False)
    return dp, dp1, dm, dm1


def eigen_condition(nu, cfg: TrapConfig):
    """Matching residual for the interacting family.

    .. math:: \\tfrac12\\nu\\,[D_{\\nu-1}(-d)D_\\nu(d) + D_{\\nu-1}(d)D_\\nu(-d)]
              - g\\,D_\\nu(-d)D_\\nu(d)

    Accepts scalar or array ``nu``.
    """
    nu_arr = np.asarray(nu, dtype=float)
    dp, dp1, dm, dm1 = _pcf_at(nu_arr, cfg.d)
    res = 0.5 * nu_arr * (dm1 * dp + dp1 * dm) - cfg.g * dm * dp
    return float(res) if res.ndim == 0 else res


def _condition_scale(nu, cfg):
    nu = np.asarray(nu, dtype=float)
    dp, dp1, dm, dm1 = _pcf_at(nu, cfg.d)
    return 0.5 * np.abs(nu) * (np.abs(dm1 * dp) + np.abs(dp1 * dm)) + abs(cfg.g) * np.abs(dm * dp)


def node_condition(nu, cfg: TrapConfig):
    """Residual for states with a node at the contact point.

    Such a state needs ``D_nu(d) = D_nu(-d) = 0`` (the wavefunction vanishes
    at ``r = 0`` from both sides) after which the derivative matching fixes
    the ratio of the two amplitudes.  The residual returned is
    ``hypot(D_nu(d), D_nu(-d))``, which is non-negative and zero exactly on
    the node family.  At ``d = 0`` it reduces to ``sqrt(2) |D_nu(0)|``, with
    zeros at the odd integers.
    """
    nu_arr = np.asarray(nu, dtype=float)
    dp, _, dm, _ = _pcf_at(nu_arr, cfg.d)
    res = np.hypot(dp, dm)
    return float(res) if res.ndim == 0 else res


def _vanishes_at_contact(cfg, nu, tol=1e-9):
    """``D_nu(d)`` and ``D_nu(-d)`` both vanish relative to their own slopes.

    The slope is the natural scale: a nontrivial solution cannot have value
    and slope vanish together, while ``D_{nu-1}(-d)`` grows like
    ``exp(d^2/4)`` and would flag every trap-like state at large ``d``.
    """
    dp, dp1, dm, dm1 = (float(v) for v in _pcf_at(nu, cfg.d))
    d = cfg.d
    slope_p = -0.5 * d * dp + nu * dp1
    slope_m = 0.5 * d * dm + nu * dm1
    return abs(dp) <= tol * abs(slope_p) and abs(dm) <= tol * abs(slope_m)


def _log_scale(nu):
    # Smooth positive normaliser taming the factorial growth of D_nu.
    return np.exp(-gammaln(np.abs(nu) + 1.0))


def _scan_function(cfg: TrapConfig):
    """Sign-carrying function whose roots are the non-node levels."""
    if cfg.d == 0.0:
        g = cfg.g

        def reduced(nu):
            nu = np.asarray(nu, dtype=float)
            d0, d1 = pcf_arrays(nu, 0.0, check=False)
            return (nu * d1 - g * d0) * _log_scale(nu)

        return reduced

    def scaled(nu):
        nu = np.asarray(nu, dtype=float)
        return eigen_condition(nu, cfg) * _log_scale(nu) ** 2

    return scaled


# ---------------------------------------------------------------------------
# Root search


def _hidden_pairs(f, xs, fx, depth=2):
    """Sign changes hidden inside one grid cell (close root pairs).

    Looks at interior local minima of |f| with no neighbouring sign change
    and rescans the two adjacent cells on a 50x finer grid.
    """
    out = []
    if depth == 0 or xs.size < 3:
        return out
    a = np.abs(fx)
    s = np.sign(fx)
    for i in range(1, xs.size - 1):
        if not (a[i] <= a[i - 1] and a[i] <= a[i + 1]):
            continue
        if s[i - 1] != s[i] or s[i] != s[i + 1]:
            continue
        fine = np.linspace(xs[i - 1], xs[i + 1], 101)
        ff = f(fine)
        sign = np.sign(ff)
        idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        if idx.size:
            out.extend(Interval(fine[j], fine[j + 1]) for j in idx)
        else:
            out.extend(_hidden_pairs(f, fine, ff, depth - 1))
    return out


def _find_brackets(f, lo, hi, step=SCAN_STEP):
    # Offset keeps exact integer roots (g = 0) off the grid nodes.
    lo = lo - _GRID_OFFSET
    n = int(round((hi - lo) / step)) + 1
    xs = np.linspace(lo, hi, n)
    fx = f(xs)
    brackets = bracket_roots(f, Interval(lo, hi), n, vectorized=True)
    brackets += _hidden_pairs(f, xs, fx)
    return sorted(brackets, key=lambda iv: iv.lo)


def _refine(f, bracket, tol):
    return refine_root(lambda x: float(f(np.array([x]))[0]), bracket, tol) + 0.0


def _dedupe(values, tol=DEDUP_TOL):
    out = []
    for v, fam in sorted(values):
        if out and abs(v - out[-1][0]) < tol:
            if fam == "node":
                out[-1] = (v, fam)
            continue
        out.append((v, fam))
    return out


def relative_spectrum(cfg: TrapConfig, count: int, *, tol: float = ROOT_TOL) -> list[EigenvalueRecord]:
    """Lowest ``count`` relative-motion levels, sorted by energy.

    Interacting-family roots come from :func:`eigen_condition`; at ``d = 0``
    the node family (odd integers, insensitive to ``g``) is merged in.

    Raises
    ------
    SolverWindowError
        When the scan window ``[NU_FLOOR, count + 12]`` holds fewer roots,
        or when strong attraction puts the bound state below ``NU_FLOOR``.
    ValueError
        For ``count`` outside ``[1, MAX_COUNT]`` or ``|d| > D_MAX``.
    """
    count = int(count)
    if not 1 <= count <= MAX_COUNT:
        raise ValueError(f"count must lie in [1, {MAX_COUNT}]")
    if abs(cfg.d) > D_MAX:
        raise ValueError(f"|d| = {abs(cfg.d)} exceeds {D_MAX}, outside the validated special-function range")
    key = (cfg.g, cfg.d, count, float(tol))
    if _CACHE is not None:
        hit = _CACHE.get(key)
        if hit is not None:
            return [EigenvalueRecord(i, v, v + 0.5, fam) for i, (v, fam) in enumerate(hit)]
    ceiling = count + 12.0
    f = _scan_function(cfg)
    nodes = []
    if cfg.d == 0.0:
        nodes = [(float(k), "node") for k in range(1, int(ceiling) + 1, 2)]
    found = []
    merged = []
    # Refine brackets in ascending order, stopping once `count` levels are
    # certain (every remaining bracket lies above the count-th level).
    for br in _find_brackets(f, NU_FLOOR, ceiling):
        if len(merged) >= count and br.lo > merged[count - 1][0]:
            break
        root = _refine(f, br, tol)
        found.append((root, "node" if _vanishes_at_contact(cfg, root) else "interacting"))
        merged = _dedupe(found + [n for n in nodes if n[0] <= found[-1][0] + 1.0])
    merged = _dedupe(found + nodes)
    if cfg.g < 0 and cfg.g**2 + 0.5 > -NU_FLOOR and (not merged or merged[0][0] >= 0.0):
        # The contact bound state sits near nu = -g^2 - 1/2, below the scan floor.
        raise SolverWindowError(
            f"bound state for g={cfg.g} lies below the scan floor nu={NU_FLOOR}"
        )
    if len(merged) < count:
        raise SolverWindowError(
            f"only {len(merged)} levels below nu={ceiling} for g={cfg.g}, d={cfg.d}; "
            f"{count} requested"
        )
    if _CACHE is not None:
        _CACHE.put(key, merged[:count])
    return [
        EigenvalueRecord(index=i, nu=v, energy=v + 0.5, family=fam)
        for i, (v, fam) in enumerate(merged[:count])
    ]


def _continue_levels(cfg, prev, count, tol):
    """Track ``prev`` levels to ``cfg`` using narrow windows; None on failure."""
    f = _scan_function(cfg)
    out = []
    for k, p in enumerate(prev):
        below = prev[k - 1] if k > 0 else p - 1.0
        above = prev[k + 1] if k + 1 < len(prev) else p + 1.0
        half = min(0.25, 0.5 * (p - below), 0.5 * (above - p))
        if half <= 4 * tol:
            return None
        xs = np.linspace(p - half, p + half, 26)
        fx = f(xs)
        sign = np.sign(fx)
        idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        if idx.size != 1:
            return None
        br = Interval(xs[idx[0]], xs[idx[0] + 1])
        out.append(refine_root(lambda x: float(f(np.array([x]))[0]), br, tol))
    if any(b - a < DEDUP_TOL for a, b in zip(out[:-1], out[1:])):
        return None
    return out


def _spectrum_point(args):
    g, d, count, tol = args
    return [r.nu for r in relative_spectrum(TrapConfig(g, d), count, tol=tol)]


def spectrum_sweep(
    g: float,
    d_values: Sequence[float],
    count: int,
    *,
    mode: str = "scan",
    threads: int = 1,
    tol: float = ROOT_TOL,
) -> SpectrumTable:
    """Lowest ``count`` levels for each separation in ``d_values``.

    Parameters
    ----------
    mode : {"scan", "continuation"}
        ``"scan"`` solves each point independently (parallelisable over
        ``threads`` worker processes).  ``"continuation"`` tracks the levels
        of the previous point through narrow windows, falling back to a full
        scan whenever tracking is ambiguous (including at ``d = 0`` where the
        node family appears).
    """
    d_arr = np.asarray(list(d_values), dtype=float)
    if d_arr.size == 0:
        raise ValueError("d_values must be non-empty")
    if mode not in ("scan", "continuation"):
        raise ValueError(f"unknown mode {mode!r}")
    nus = np.full((d_arr.size, count), np.nan)
    errors = {}
    if mode == "scan":
        results = parallel_map(
            _spectrum_point, [(g, float(d), count, tol) for d in d_arr], threads, return_exceptions=True
        )
        for i, res in enumerate(results):
            if isinstance(res, Exception):
                errors[float(d_arr[i])] = repr(res)
            else:
                nus[i] = res
    else:
        prev = None
        for i, d in enumerate(d_arr):
            cfg = TrapConfig(g, float(d))
            row = None
            if prev is not None and d != 0.0:
                row = _continue_levels(cfg, prev, count, tol)
            try:
                if row is None:
                    row = _spectrum_point((g, float(d), count, tol))
            except SolverWindowError as exc:
                errors[float(d)] = repr(exc)
                prev = None
                continue
            nus[i] = row
            prev = None if d == 0.0 else list(row)
    return SpectrumTable("d", d_arr, nus, g=float(g), errors=errors)


def find_resonances(table: SpectrumTable, gap_threshold: float = 0.3) -> list[Resonance]:
    """Avoided crossings: interior local minima of adjacent-level gaps.

    The location is refined by the vertex of the parabola through the
    minimum and its two neighbours.
    """
    x = np.asarray(table.axis, dtype=float)
    if x.size < 3:
        raise ValueError("need at least three axis points")
    lev = np.asarray(table.levels)
    out = []
    for k in range(lev.shape[1] - 1):
        gap = lev[:, k + 1] - lev[:, k]
        for i in range(1, x.size - 1):
            g0, g1, g2 = gap[i - 1], gap[i], gap[i + 1]
            if not np.all(np.isfinite([g0, g1, g2])):
                continue
            if not (g1 < g0 and g1 <= g2 and g1 < gap_threshold):
                continue
            x0, x1, x2 = x[i - 1], x[i], x[i + 1]
            coeff = np.polyfit([x0, x1, x2], [g0, g1, g2], 2)
            if coeff[0] > 0:
                loc = -coeff[1] / (2 * coeff[0])
                loc = min(max(loc, x0), x2)
                val = float(np.polyval(coeff, loc))
            else:
                loc, val = x1, g1
            out.append(Resonance(float(loc), (k, k + 1), float(min(val, g1))))
    return sorted(out, key=lambda r: (r.location, r.levels))
