"""Normalised relative-motion and centre-of-mass eigenfunctions.

The relative wavefunction is piecewise parabolic-cylinder:

.. math:: \\psi(r) = N_l D_\\nu(d - r)\\ (r < 0), \\qquad
          \\psi(r) = N_r D_\\nu(r - d)\\ (r \\ge 0),

continuous at the contact point ``r = 0`` where its slope jumps.  The centre
of mass ``X = (x1 + x2)/2`` sees the operator ``-(1/4) d^2/dX^2 + X^2``,
whose eigenfunctions are Hermite functions of ``sqrt(2) X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq

from .numerics import composite_gauss_legendre
from .spectrum import EigenvalueRecord, TrapConfig, _vanishes_at_contact, eigen_condition, relative_spectrum
from .specfun import pcf_arrays

__all__ = [
    "MatchingError",
    "RelativeEigenstate",
    "ComEigenstate",
    "build_relative_state",
    "relative_states",
    "eval_relative",
    "eval_com",
    "hermite_functions",
    "is_node_point",
]


_SPLINE_STEP = 0.004
# Largest change of the normalised wavefunction allowed when nu moves by its
# own rounding uncertainty.
COND_TOL = 1e-7


class MatchingError(ValueError):
    """The requested order does not satisfy the matching conditions."""


def _dpcf(nu, x):
    """D_nu(x) and its x-derivative."""
    d0, d1 = pcf_arrays(nu, x, check=False)
    return d0, -0.5 * np.asarray(x) * d0 + nu * d1


@dataclass(frozen=True)
class RelativeEigenstate:
    """Normalised relative-motion eigenfunction.

    Attributes
    ----------
    cfg : TrapConfig
    nu : float
        Order; the relative energy is ``nu + 1/2``.
    n_left, n_right : float
        Amplitudes multiplying ``D_nu(d - r)`` and ``D_nu(r - d)``.
    family : str
        ``"interacting"`` or ``"node"``.
    support : tuple of float
        Interval outside which ``|psi|`` is negligible (below ~1e-12).
    """

    cfg: TrapConfig
    nu: float
    n_left: float
    n_right: float
    family: str
    support: tuple[float, float]
    _norm_rule: object = field(default=None, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __call__(self, r):
        return eval_relative(self, r)

    def fast(self, r):
        """Spline interpolant of the wavefunction (relative error ~1e-10).

        Separate quintic splines on each side of the contact point keep the
        kink exact.  Outside :attr:`support` the value is zero.
        """
        splines = self._cache.get("splines")
        if splines is None:
            splines = self._build_splines()
            self._cache["splines"] = splines
        r = np.asarray(r, dtype=float)
        lo, hi = self.support
        out = np.zeros(r.shape)
        left = (r < 0) & (r >= lo)
        right = (r >= 0) & (r <= hi)
        if np.any(left):
            out[left] = splines[0](r[left])
        if np.any(right):
            out[right] = splines[1](r[right])
        return out

    def _build_splines(self):
        lo, hi = self.support
        out = []
        for a, b in ((lo, 0.0), (0.0, hi)):
            n = int(math.ceil((b - a) / _SPLINE_STEP)) + 1
            xs = np.linspace(a, b, n)
            ys = eval_relative(self, xs)
            if a == 0.0:
                ys[0] = self.n_right * float(pcf_arrays(self.nu, -self.cfg.d, check=False)[0])
            if b == 0.0:
                ys[-1] = self.n_left * float(pcf_arrays(self.nu, self.cfg.d, check=False)[0])
            out.append(make_interp_spline(xs, ys, k=5))
        return out

    def derivative(self, r):
        """``d psi / d r``; one-sided limits are used at ``r = 0`` (right side)."""
        r = np.asarray(r, dtype=float)
        d = self.cfg.d
        left = r < 0
        xi = np.where(left, d - r, r - d)
        _, dv = _dpcf(self.nu, xi)
        out = np.where(left, -self.n_left * dv, self.n_right * dv)
        return float(out) if out.ndim == 0 else out

    @property
    def energy(self) -> float:
        return self.nu + 0.5

    @property
    def value_at_contact(self) -> float:
        return float(eval_relative(self, 0.0))

    @property
    def slope_jump(self) -> float:
        """``psi'(0+) - psi'(0-)``, fixed by the contact interaction."""
        d = self.cfg.d
        _, dv_m = _dpcf(self.nu, -d)
        _, dv_p = _dpcf(self.nu, d)
        return float(self.n_right * dv_m + self.n_left * dv_p)


def eval_relative(state: RelativeEigenstate, r):
    """Evaluate the relative wavefunction at ``r`` (scalar or array)."""
    r = np.asarray(r, dtype=float)
    d = state.cfg.d
    left = r < 0
    xi = np.where(left, d - r, r - d)
    d0, _ = pcf_arrays(state.nu, xi, check=False)
    out = np.where(left, state.n_left * d0, state.n_right * d0)
    return float(out) if out.ndim == 0 else out


def _polish(cfg: TrapConfig, nu: float) -> tuple[float, float]:
    """Refine an interacting root to full relative precision.

    At large ``d`` the wavefunction depends on ``nu`` through a factor of
    order ``exp(d^2/4)``, so an absolute root tolerance is not enough.
    Returns the root and the residual attributable to rounding of ``nu``
    (zero when no sign change brackets it).
    """
    w = 1e-9 * max(1.0, abs(nu))
    f = lambda v: eigen_condition(v, cfg)
    fa, fb = f(nu - w), f(nu + w)
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        return nu, 0.0
    root = float(brentq(f, nu - w, nu + w, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400))
    slope = abs(fb - fa) / (2 * w)
    return root, 16.0 * slope * max(np.spacing(abs(root)), 4 * np.finfo(float).eps * abs(root))


def _normalised_amplitudes(cfg, nu, family, rule, lo, hi):
    """Amplitudes ``(n_left, n_right)`` with unit norm and the phase convention."""
    d = cfg.d
    if family == "node":
        # psi(0) = 0 on both sides; slope continuity fixes the amplitude ratio.
        _, dv_p = _dpcf(nu, d)
        _, dv_m = _dpcf(nu, -d)
        n_left, n_right = float(dv_m), -float(dv_p)
    else:
        # Continuity at r = 0: n_left D(d) = n_right D(-d).
        n_left = float(pcf_arrays(nu, -d, check=False)[0])
        n_right = float(pcf_arrays(nu, d, check=False)[0])
    proto = RelativeEigenstate(cfg, nu, n_left, n_right, family, (lo, hi))
    vals = eval_relative(proto, rule.nodes)
    norm = math.sqrt(float(np.dot(rule.weights, vals * vals)))
    n_left /= norm
    n_right /= norm
    # Phase: positive at r = d (or positive slope there if psi(d) vanishes).
    probe = RelativeEigenstate(cfg, nu, n_left, n_right, family, (lo, hi))
    at_d = eval_relative(probe, d)
    ref = at_d if abs(at_d) > 1e-10 else probe.derivative(d + (1e-12 if d == 0 else 0.0))
    if ref < 0:
        n_left, n_right = -n_left, -n_right
    return n_left, n_right


def is_node_point(cfg: TrapConfig, nu: float, tol: float = 1e-9) -> bool:
    """True when ``D_nu(d)`` and ``D_nu(-d)`` both vanish (node at the contact)."""
    return _vanishes_at_contact(cfg, nu, tol)


def _support(cfg: TrapConfig, nu: float) -> tuple[float, float]:
    turning = 2.0 * math.sqrt(max(nu, 0.0) + 0.5)
    half = max(8.0, turning + 6.0)
    lo = min(cfg.d - half, -8.0)
    hi = max(cfg.d + half, 8.0)
    return lo, hi


def build_relative_state(
    cfg: TrapConfig, nu: float, family: str | None = None, *, tol: float = 1e-7
) -> RelativeEigenstate:
    """Construct the normalised eigenfunction for a known eigenvalue ``nu``.

    Parameters
    ----------
    cfg : TrapConfig
    nu : float
        A root of :func:`~trapchsh.spectrum.eigen_condition` (or an odd
        integer at ``d = 0`` for the node family).
    family : {"interacting", "node"}, optional
        Inferred when omitted: node family iff ``D_nu(d)`` and ``D_nu(-d)``
        both vanish (odd integers at ``d = 0``).
    tol : float
        Relative residual allowed in the matching check.

    Raises
    ------
    MatchingError
        If ``nu`` is not an eigenvalue for ``cfg``, or if the eigenfunction
        cannot be resolved in double precision (large ``d`` for excited
        levels, where ``psi`` moves by more than ``COND_TOL`` when ``nu``
        shifts by a few rounding units).

    Notes
    -----
    Interacting roots are polished to full relative precision first, which
    keeps the ground state accurate out to the largest supported ``d``.
    """
    nu = float(nu)
    d = cfg.d
    dp, dp1 = pcf_arrays(nu, d, check=False)
    dm, dm1 = pcf_arrays(nu, -d, check=False)
    dp, dp1, dm, dm1 = float(dp), float(dp1), float(dm), float(dm1)
    if family is None:
        family = "node" if is_node_point(cfg, nu) else "interacting"
    if family == "node":
        if not is_node_point(cfg, nu):
            raise MatchingError(f"no node-family state at nu={nu}, d={d}")
    elif family == "interacting":
        nu, rounding = _polish(cfg, nu)
        dp, dp1 = (float(v) for v in pcf_arrays(nu, d, check=False))
        dm, dm1 = (float(v) for v in pcf_arrays(nu, -d, check=False))
        res = eigen_condition(nu, cfg)
        mag = abs(dm) + abs(dp) + abs(dm1) + abs(dp1)
        scale = (0.5 * max(abs(nu), 1.0) + abs(cfg.g)) * mag * mag
        if not abs(res) <= max(tol * scale, rounding):
            raise MatchingError(
                f"nu={nu} does not satisfy the matching condition for g={cfg.g}, d={d} "
                f"(residual {res:.3e}, scale {scale:.3e})"
            )
    else:
        raise ValueError(f"unknown family {family!r}")

    lo, hi = _support(cfg, nu)
    rule = composite_gauss_legendre([lo, 0.0, hi], 16, max_panel=0.5)
    n_left, n_right = _normalised_amplitudes(cfg, nu, family, rule, lo, hi)
    if family == "interacting":
        # Move nu by a few units of its rounding error and see how far psi moves.
        dnu = 4.0 * max(np.spacing(abs(nu)), 4 * np.finfo(float).eps * abs(nu))
        alt = _normalised_amplitudes(cfg, nu + dnu, family, rule, lo, hi)
        v0 = eval_relative(RelativeEigenstate(cfg, nu, n_left, n_right, family, (lo, hi)), rule.nodes)
        v1 = eval_relative(RelativeEigenstate(cfg, nu + dnu, *alt, family, (lo, hi)), rule.nodes)
        drift = float(np.max(np.abs(v1 - v0)) / np.max(np.abs(v0)))
        if not drift <= COND_TOL:
            raise MatchingError(
                f"eigenfunction at nu={nu}, g={cfg.g}, d={d} is ill-conditioned: a shift of nu by "
                f"{dnu:.1e} changes psi by {drift:.1e}"
            )
    return RelativeEigenstate(cfg, nu, n_left, n_right, family, (lo, hi), rule)


def relative_states(cfg: TrapConfig, count: int) -> list[RelativeEigenstate]:
    """The lowest ``count`` relative eigenstates for ``cfg``."""
    records: list[EigenvalueRecord] = relative_spectrum(cfg, count)
    return [build_relative_state(cfg, rec.nu, rec.family) for rec in records]


# ---------------------------------------------------------------------------
# Centre of mass


def hermite_functions(n_max: int, q) -> np.ndarray:
    """Normalised Hermite functions ``h_0 .. h_{n_max}`` at ``q``.

    Uses the stable three-term recurrence for the normalised functions.
    Returns an array of shape ``(n_max + 1,) + q.shape``.
    """
    q = np.asarray(q, dtype=float)
    out = np.empty((n_max + 1,) + q.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * q * q)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * q * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * q * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def eval_com(n: int, X):
    """Centre-of-mass eigenfunction ``phi_n(X)`` of ``-(1/4) d^2/dX^2 + X^2``.

    ``phi_0(X) = (2/pi)^{1/4} exp(-X^2)``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    X = np.asarray(X, dtype=float)
    out = 2.0**0.25 * hermite_functions(n, math.sqrt(2.0) * X)[n]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ComEigenstate:
    """Centre-of-mass oscillator eigenstate with quantum number ``n``."""

    n: int

    def __post_init__(self):
        if int(self.n) < 0:
            raise ValueError("n must be non-negative")

    def __call__(self, X):
        return eval_com(self.n, X)

    @property
    def energy(self) -> float:
        return self.n + 0.5
