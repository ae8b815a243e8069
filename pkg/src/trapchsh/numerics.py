"""Shared numerical kernels: quadrature rules, root bracketing and refinement,
and bounded scalar maximisation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

__all__ = [
    "Interval",
    "QuadratureRule",
    "trapezoid_rule",
    "gauss_legendre_rule",
    "composite_gauss_legendre",
    "gauss_hermite_rule",
    "integrate",
    "bracket_roots",
    "refine_root",
    "maximize_scalar",
    "parallel_map",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_POLE_BISECTIONS = 4


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]`` with ``lo < hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval bounds must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise ValueError(f"interval needs lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a quadrature rule.

    ``kind`` is one of ``"trapezoid"``, ``"gauss-legendre"`` or
    ``"gauss-hermite"``.  Gauss-Hermite rules here integrate against the
    normal density of the given centre and scale, so their weights sum to one.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if self.kind not in ("trapezoid", "gauss-legendre", "gauss-hermite"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if not np.all(weights > 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size


def trapezoid_rule(domain: Interval, h: float) -> QuadratureRule:
    """Uniform trapezoid rule on ``domain`` with spacing close to ``h``.

    The number of panels is rounded up so that the actual spacing never
    exceeds ``h``.
    """
    if h <= 0:
        raise ValueError("spacing must be positive")
    n = max(1, int(math.ceil(domain.width / h - 1e-9)))
    nodes = np.linspace(domain.lo, domain.hi, n + 1)
    step = domain.width / n
    weights = np.full(n + 1, step)
    weights[0] = weights[-1] = step / 2
    return QuadratureRule(nodes, weights, "trapezoid")


def gauss_legendre_rule(domain: Interval, n: int) -> QuadratureRule:
    """``n``-point Gauss-Legendre rule mapped to ``domain``."""
    x, w = special.roots_legendre(int(n))
    half = domain.width / 2
    mid = (domain.lo + domain.hi) / 2
    return QuadratureRule(mid + half * x, half * w, "gauss-legendre")


def composite_gauss_legendre(
    breakpoints: Sequence[float], n: int, max_panel: float | None = None
) -> QuadratureRule:
    """Gauss-Legendre rule on consecutive panels between ``breakpoints``.

    Non-smooth points of the integrand (kinks) should be listed among the
    breakpoints so that every panel sees a smooth function.  ``max_panel``
    further subdivides long panels.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    if pts.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    x, w = special.roots_legendre(int(n))
    nodes, weights = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        m = 1 if max_panel is None else max(1, int(math.ceil((b - a) / max_panel)))
        edges = np.linspace(a, b, m + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = (hi - lo) / 2
            nodes.append((lo + hi) / 2 + half * x)
            weights.append(half * w)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), "gauss-legendre")


def gauss_hermite_rule(n: int, center: float = 0.0, scale: float = 1.0) -> QuadratureRule:
    """Gauss-Hermite rule for expectations under ``Normal(center, scale**2)``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    x, w = special.roots_hermitenorm(int(n))
    return QuadratureRule(center + scale * x, w / math.sqrt(2 * math.pi), "gauss-hermite")


def integrate(f: Callable, domain: Interval | None, rule: QuadratureRule) -> float:
    """Apply ``rule`` to ``f``: returns ``sum(w_i * f(x_i))``.

    ``f`` is called once with the full node array.  For finite rules the
    nodes must lie in ``domain``; Gauss-Hermite rules ignore it.
    """
    if rule.kind != "gauss-hermite" and domain is not None:
        tol = 1e-12 * max(1.0, abs(domain.lo), abs(domain.hi))
        if rule.nodes[0] < domain.lo - tol or rule.nodes[-1] > domain.hi + tol:
            raise ValueError("quadrature nodes fall outside the integration domain")
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("integrand is not finite on the quadrature nodes")
    return float(np.dot(rule.weights, values))


def _evaluate(f, xs, vectorized):
    if vectorized:
        return np.asarray(f(xs), dtype=float)
    return np.array([f(float(x)) for x in xs], dtype=float)


def bracket_roots(
    f: Callable, domain: Interval, n_grid: int, *, vectorized: bool = False
) -> list[Interval]:
    """Sign-change brackets of ``f`` on a uniform grid of ``n_grid`` points.

    Subintervals with a non-finite endpoint are dropped, as are sign changes
    that behave like a pole: after a few bisections towards the sign change
    the endpoint magnitudes have grown instead of shrunk.
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    xs = np.linspace(domain.lo, domain.hi, int(n_grid))
    fx = _evaluate(f, xs, vectorized)
    finite = np.isfinite(fx)
    sign = np.sign(fx)
    cand = np.nonzero(finite[:-1] & finite[1:] & (sign[:-1] * sign[1:] < 0))[0]
    lo, hi = xs[cand].copy(), xs[cand + 1].copy()
    flo, fhi = fx[cand].copy(), fx[cand + 1].copy()
    start = np.maximum(np.abs(flo), np.abs(fhi))
    keep = np.ones(cand.size, dtype=bool)
    # Bisect a few times: near a root the endpoint values shrink, near a pole they grow.
    for _ in range(_POLE_BISECTIONS if cand.size else 0):
        mid = 0.5 * (lo + hi)
        fm = _evaluate(f, mid, vectorized)
        keep &= np.isfinite(fm)
        left = np.sign(fm) == np.sign(flo)
        lo, flo = np.where(left, mid, lo), np.where(left, fm, flo)
        hi, fhi = np.where(left, hi, mid), np.where(left, fhi, fm)
    keep &= np.maximum(np.abs(flo), np.abs(fhi)) <= start
    out = [Interval(xs[i], xs[i + 1]) for i, k in zip(cand, keep) if k]
    # Roots sitting exactly on a grid node.
    for i in np.nonzero(fx[1:-1] == 0.0)[0] + 1:
        if np.isfinite(fx[i - 1]) and np.isfinite(fx[i + 1]) and sign[i - 1] * sign[i + 1] < 0:
            out.append(Interval(xs[i - 1], xs[i + 1]))
    return sorted(out, key=lambda iv: iv.lo)


def refine_root(f: Callable, bracket: Interval, tol: float = 1e-10) -> float:
    """Locate a root inside a sign-change bracket.

    Uses Brent's method (inverse quadratic and secant steps safeguarded by
    bisection) so convergence is guaranteed.

    Raises
    ------
    ValueError
        If ``f`` does not change sign over the bracket.
    """
    flo, fhi = float(f(bracket.lo)), float(f(bracket.hi))
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        raise ValueError("bracket endpoints must give finite values")
    if flo == 0.0:
        return bracket.lo
    if fhi == 0.0:
        return bracket.hi
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{bracket.lo}, {bracket.hi}]")
    root = optimize.brentq(
        lambda x: float(f(x)), bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps
    )
    return min(max(root, bracket.lo), bracket.hi)


def _golden(f, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    return max(candidates, key=lambda t: t[0])


def maximize_scalar(
    f: Callable, domain: Interval, tol: float = 1e-8, n_grid: int = 64, *, vectorized: bool = False
) -> tuple[float, float]:
    """Global-on-grid maximiser of a continuous scalar function.

    A uniform scan of ``n_grid`` points (at least 64) locates the best grid
    point; golden-section search on its two neighbouring cells then refines
    it.  The returned value is never below the best grid value.

    Returns
    -------
    x_star, f_star : float
    """
    n_grid = max(64, int(n_grid))
    xs = np.linspace(domain.lo, domain.hi, n_grid)
    fx = _evaluate(f, xs, vectorized)
    if not np.any(np.isfinite(fx)):
        raise FloatingPointError("objective is not finite anywhere on the grid")
    fx = np.where(np.isfinite(fx), fx, -np.inf)
    i = int(np.argmax(fx))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, n_grid - 1)]

    def scalar(x):
        val = _evaluate(f, np.array([x]), vectorized)[0] if vectorized else float(f(x))
        return val if math.isfinite(val) else -math.inf

    f_ref, x_ref = _golden(scalar, a, b, tol)
    if f_ref >= fx[i]:
        return float(x_ref), float(f_ref)
    return float(xs[i]), float(fx[i])


def _call_capture(fn, item):
    try:
        return fn(item)
    except Exception as exc:  # noqa: BLE001 - handed back to the caller
        return exc


def parallel_map(fn: Callable, items: Sequence, threads: int = 1, *, return_exceptions: bool = False) -> list:
    """Order-preserving map, optionally over a process pool.

    ``fn`` must be a picklable top-level function when ``threads > 1``.
    With ``return_exceptions`` a failing item yields its exception instead of
    aborting the whole map.
    """
    items = list(items)
    call = (lambda it: _call_capture(fn, it)) if return_exceptions else fn
    if threads <= 1 or len(items) <= 1:
        return [call(it) for it in items]
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    worker = partial(_call_capture, fn) if return_exceptions else fn
    with ProcessPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(worker, items))
