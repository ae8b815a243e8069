"""Real-order special functions: gamma, Kummer's M and parabolic cylinder D.

All routines work on real arguments.  Internally the series branches run in
``numpy.longdouble`` (80-bit extended precision on x86-64), which gives the
head-room needed to absorb the cancellation between the two Kummer series
that make up :math:`D_\\nu(x)`.

Three evaluation regimes are used for :math:`D_\\nu(x)`:

* ``nu < -1`` (any ``x``): the integral representation

  .. math:: D_\\mu(x) = \\frac{e^{-x^2/4}}{\\Gamma(-\\mu)}
            \\int_0^\\infty t^{-\\mu-1} e^{-xt - t^2/2}\\, dt ,

  evaluated with the trapezoid rule after the substitution ``t = exp(s)``.
  The integrand is positive, so there is no cancellation.
* ``nu >= -1`` and ``x >= X_SWITCH``: two seeds with negative order from the
  integral above, followed by the upward recurrence
  ``D_{m+1} = x D_m - m D_{m-1}`` (stable for positive ``x``).
* ``nu >= -1`` and ``x < X_SWITCH``: the Kummer-series decomposition in
  extended precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PcfPair",
    "ReducedAccuracyWarning",
    "gamma_fn",
    "rgamma",
    "kummer_m",
    "pcf_d",
    "pcf_pair",
    "pcf_arrays",
    "X_SWITCH",
]

_LD = np.longdouble
_PI = _LD("3.14159265358979323846264338327950288")
_SQRT_PI = _LD("1.77245385090551602729816748334114518")
_SQRT2 = _LD("1.41421356237309504880168872420969808")
_HALF_LN_2PI = _LD("0.918938533204672741780329736405617640")
_EPS_LD = float(np.finfo(_LD).eps)

# Bernoulli numbers B_{2k} / (2k (2k-1)) for the Stirling series.
_STIRLING = [
    _LD(1) / _LD(12),
    _LD(-1) / _LD(360),
    _LD(1) / _LD(1260),
    _LD(-1) / _LD(1680),
    _LD(1) / _LD(1188),
    _LD(-691) / _LD(360360),
    _LD(1) / _LD(156),
    _LD(-3617) / _LD(122400),
]

#: Crossover between the Kummer series and the integral/recurrence branch.
X_SWITCH = 2.5

#: Validated accuracy box for :func:`pcf_d`.
NU_BOX = (-10.0, 40.0)
X_BOX = (-25.0, 25.0)


class ReducedAccuracyWarning(UserWarning):
    """Emitted when a special function is evaluated outside its validated box."""


@dataclass(frozen=True)
class PcfPair:
    """Values of :math:`D_\\nu(x)` and :math:`D_{\\nu-1}(x)` at a shared point."""

    d_nu: float
    d_nu_minus_1: float


# ---------------------------------------------------------------------------
# Gamma function


def _sinpi(z):
    n = np.round(z)
    f = z - n
    sign = np.where(np.mod(n, 2) == 0, _LD(1), _LD(-1))
    return sign * np.sin(_PI * f)


def _rgamma_pos(z):
    """Reciprocal gamma for ``z >= 0.5`` (longdouble arrays)."""
    z = np.asarray(z, dtype=_LD)
    prod = np.ones_like(z)
    w = z.copy()
    for _ in range(25):
        small = w < 20
        if not np.any(small):
            break
        prod = np.where(small, prod * w, prod)
        w = np.where(small, w + 1, w)
    inv = _LD(1) / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    term = inv
    for c in _STIRLING:
        series = series + c * term
        term = term * inv2
    lng = (w - _LD(0.5)) * np.log(w) - w + _HALF_LN_2PI + series
    return prod * np.exp(-lng)


def _rgamma_ld(z):
    """Reciprocal gamma in extended precision; entire, so no poles."""
    z = np.asarray(z, dtype=_LD)
    out = np.empty_like(z)
    hi = z >= 0.5
    if np.any(hi):
        out[hi] = _rgamma_pos(z[hi])
    lo = ~hi
    if np.any(lo):
        zl = z[lo]
        # 1/Gamma(z) = sin(pi z) Gamma(1-z) / pi
        out[lo] = _sinpi(zl) / (_PI * _rgamma_pos(1 - zl))
    return out


def rgamma(x):
    """Reciprocal gamma function ``1/Gamma(x)``, zero at the poles of Gamma.

    Parameters
    ----------
    x : float or array_like

    Returns
    -------
    float or ndarray
    """
    arr = np.asarray(x, dtype=float)
    res = _rgamma_ld(np.atleast_1d(arr)).astype(float)
    return res.reshape(arr.shape) if arr.ndim else float(res[0])


def gamma_fn(x: float) -> float:
    """Euler gamma function for real ``x``.

    Raises
    ------
    ValueError
        If ``x`` is zero or a negative integer.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"gamma_fn needs a finite argument, got {x!r}")
    if x <= 0 and x == np.floor(x):
        raise ValueError(f"gamma_fn has a pole at {x!r}")
    return float(_LD(1) / _rgamma_ld(np.array([x]))[0])


# ---------------------------------------------------------------------------
# Kummer M


def _kummer_series(a, b, z, max_terms=4000):
    """Plain power series of M(a, b, z) with broadcasting (longdouble)."""
    a, b, z = np.broadcast_arrays(
        np.asarray(a, dtype=_LD), np.asarray(b, dtype=_LD), np.asarray(z, dtype=_LD)
    )
    term = np.ones(a.shape, dtype=_LD)
    total = np.ones(a.shape, dtype=_LD)
    peak = np.ones(a.shape, dtype=_LD)
    done = np.zeros(a.shape, dtype=bool)
    tiny = _LD(1e-22)
    for k in range(max_terms):
        term = term * (a + k) / (b + k) * z / (k + 1)
        total = total + term
        mag = np.abs(term)
        peak = np.maximum(peak, mag)
        # Stop once past the largest term and the tail is negligible.
        done = done | ((mag <= tiny * peak) & ((k + 1) > np.abs(z)))
        done = done | (term == 0)
        if np.all(done):
            break
    else:  # pragma: no cover - parameter box keeps this unreachable
        raise RuntimeError("Kummer series did not converge")
    return total


def kummer_m(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric function :math:`M(a, b, z) = {}_1F_1(a; b; z)`.

    Negative ``z`` goes through Kummer's transformation
    :math:`M(a,b,z) = e^{z} M(b-a, b, -z)` so that the series has terms of one
    sign when ``b > a > 0``.

    Raises
    ------
    ValueError
        If ``b`` is zero or a negative integer.
    """
    a, b, z = float(a), float(b), float(z)
    if b <= 0 and b == np.floor(b):
        raise ValueError(f"kummer_m has a parameter pole at b={b!r}")
    if z < 0 and not (a <= 0 and a == np.floor(a)):
        val = np.exp(_LD(z)) * _kummer_series(b - a, b, -z)
    else:
        val = _kummer_series(a, b, z)
    return float(val)


# ---------------------------------------------------------------------------
# Parabolic cylinder function


def _pcf_series(nu, x):
    """Kummer-series form of D_nu(x) in extended precision."""
    nu = np.asarray(nu, dtype=_LD)
    x = np.asarray(x, dtype=_LD)
    z = x * x / 2
    m1 = _kummer_series(-nu / 2, _LD(0.5), z)
    m2 = _kummer_series((1 - nu) / 2, _LD(1.5), z)
    bracket = m1 * _rgamma_ld((1 - nu) / 2) - _SQRT2 * x * m2 * _rgamma_ld(-nu / 2)
    return np.exp2(nu / 2) * _SQRT_PI * np.exp(-x * x / 4) * bracket


def _pcf_integral(mu, x, chunk=4096):
    """D_mu(x) for mu <= -1 from the integral representation.

    With ``t = e^s`` the integrand is ``exp((-mu) s - x e^s - e^{2s}/2)``, a
    smooth bump in ``s`` handled by a trapezoid rule whose step is tied to
    the local width of the bump.
    """
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    mu, x = np.broadcast_arrays(mu, x)
    flat_mu = mu.ravel()
    flat_x = x.ravel()
    out = np.empty(flat_mu.shape, dtype=float)
    for start in range(0, flat_mu.size, chunk):
        sl = slice(start, start + chunk)
        out[sl] = _pcf_integral_flat(flat_mu[sl], flat_x[sl])
    return out.reshape(mu.shape)


def _pcf_integral_flat(mu, x):
    c = -mu  # >= 1
    # Peak of the exponent: u^2 + x u - c = 0 with u = e^s.
    u_star = 2 * c / (x + np.sqrt(x * x + 4 * c))
    s_star = np.log(u_star)
    curv = x * u_star + 2 * u_star * u_star
    width = 1.0 / np.sqrt(curv)
    h = np.minimum(0.1, 0.5 * width)
    # Left tail decays at least like exp(c (s - s*)); right tail is Gaussian or faster.
    s_lo = s_star - np.maximum(46.0 / c, 12 * width)
    s_hi = s_star + np.maximum(12 * width, 1.0)
    n = np.ceil((s_hi - s_lo) / h).astype(int) + 1
    nmax = int(n.max())
    k = np.arange(nmax)
    s = s_lo[:, None] + h[:, None] * k[None, :]
    e = np.exp(s)
    expo = c[:, None] * s - x[:, None] * e - 0.5 * e * e
    peak = (c * s_star - x * u_star - 0.5 * u_star * u_star)[:, None]
    mask = k[None, :] < n[:, None]
    vals = np.where(mask, np.exp(expo - peak), 0.0)
    total = vals.sum(axis=1) * h
    log_d = np.log(total) + peak[:, 0] - x * x / 4
    rg = _rgamma_ld(c.astype(_LD)).astype(float)
    with np.errstate(under="ignore"):
        return np.exp(log_d) * rg


def _pcf_recurrence(nu, x):
    """(D_nu, D_{nu-1}) for nu >= -1, x > 0 via seeds and upward recurrence."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    fl = np.floor(nu)
    frac = nu - fl
    mu0 = frac - 3.0
    mu1 = frac - 2.0
    seeds = _pcf_integral(np.concatenate([mu0, mu1]), np.concatenate([x, x]))
    d_prev = seeds[: nu.size]
    d_cur = seeds[nu.size :]
    steps = (fl + 2).astype(int)
    m = mu1.copy()
    for k in range(int(steps.max()) if steps.size else 0):
        active = k < steps
        d_next = x * d_cur - m * d_prev
        d_prev = np.where(active, d_cur, d_prev)
        d_cur = np.where(active, d_next, d_cur)
        m = np.where(active, m + 1, m)
    return d_cur, d_prev


def _check_box(nu, x):
    if (
        np.any(nu < NU_BOX[0])
        or np.any(nu > NU_BOX[1])
        or np.any(x < X_BOX[0])
        or np.any(x > X_BOX[1])
    ):
        warnings.warn(
            "parabolic cylinder function evaluated outside the validated box "
            f"nu in {NU_BOX}, x in {X_BOX}; accuracy is not guaranteed",
            ReducedAccuracyWarning,
            stacklevel=3,
        )


def pcf_arrays(nu, x, *, check=True):
    """Vectorised :math:`(D_\\nu(x), D_{\\nu-1}(x))` with broadcasting.

    Parameters
    ----------
    nu, x : array_like
        Order and argument; broadcast against each other.
    check : bool
        Emit :class:`ReducedAccuracyWarning` for inputs outside the
        validated box.

    Returns
    -------
    d_nu, d_nu_minus_1 : ndarray
    """
    nu_arr, x_arr = np.broadcast_arrays(
        np.asarray(nu, dtype=float), np.asarray(x, dtype=float)
    )
    shape = nu_arr.shape
    nu_f = nu_arr.ravel().copy()
    x_f = x_arr.ravel().copy()
    if not (np.all(np.isfinite(nu_f)) and np.all(np.isfinite(x_f))):
        raise ValueError("pcf arguments must be finite")
    if check:
        _check_box(nu_f, x_f)
    d0 = np.empty_like(nu_f)
    d1 = np.empty_like(nu_f)

    neg = nu_f < -1
    if np.any(neg):
        d0[neg] = _pcf_integral(nu_f[neg], x_f[neg])
        d1[neg] = _pcf_integral(nu_f[neg] - 1, x_f[neg])

    rec = (~neg) & (x_f >= X_SWITCH)
    if np.any(rec):
        d0[rec], d1[rec] = _pcf_recurrence(nu_f[rec], x_f[rec])

    ser = (~neg) & (x_f < X_SWITCH)
    if np.any(ser):
        nus = nu_f[ser]
        xs = x_f[ser]
        both = _pcf_series(np.concatenate([nus, nus - 1]), np.concatenate([xs, xs]))
        d0[ser] = both[: nus.size].astype(float)
        d1[ser] = both[nus.size :].astype(float)
    return d0.reshape(shape), d1.reshape(shape)


def pcf_pair(nu: float, x: float) -> PcfPair:
    """Return :math:`D_\\nu(x)` and :math:`D_{\\nu-1}(x)` together."""
    d0, d1 = pcf_arrays(float(nu), float(x))
    return PcfPair(float(d0), float(d1))


def pcf_d(nu, x):
    """Parabolic cylinder function :math:`D_\\nu(x)` (Whittaker normalisation).

    Accepts scalars or arrays (broadcast).  Inside the box
    ``nu in [-10, 40]``, ``|x| <= 25`` the relative error is below
    ``1e-9``; elsewhere a :class:`ReducedAccuracyWarning` is emitted.

    Examples
    --------
    >>> round(pcf_d(0.0, 2.0), 12) == round(float(np.exp(-1.0)), 12)
    True
    """
    d0, _ = pcf_arrays(nu, x)
    if np.ndim(d0) == 0:
        return float(d0)
    return d0
