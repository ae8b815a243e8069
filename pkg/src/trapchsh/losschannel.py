"""Beam-splitter loss on each atomic mode, lossy CHSH and the loss-robust witness.

Each trap-centred mode is mixed with a vacuum environment at reflectivity
``eta``: ``x -> sqrt(eta) x + sqrt(1 - eta) x_env`` (same for ``p``).  In
lab variables the output Wigner function is

``W_eta(u) = eta^-2 E_z[ W((u - z) / sqrt(eta)) ]``, ``z ~ N(0, (1 - eta)/2 I_4)``.

Because the channel acts identically on both modes and the vacuum is
invariant under the centre-of-mass/relative map, the channel factorises
into pure loss on each of those two oscillators.  The centre-of-mass part
then acts on Fock states by binomial thinning, and the relative part is a
two-dimensional Gaussian smoothing done here by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import comb, roots_hermitenorm

from .eigenstates import RelativeEigenstate, hermite_functions
from .nonlocality import DEFAULT_PHASE, J_MAX, SCAN_POINTS, ChshResult, _chsh_vec, optimize_chsh, threshold_crossing
from .numerics import Interval, maximize_scalar, parallel_map
from .spectrum import TrapConfig
from .wigner import (
    TwoBodyWigner,
    WignerSource,
    _panel_rule,
    _y_rule,
    com_wigner_grid,
    default_com_axes,
    default_relative_axes,
    relative_wigner_grid,
    thermal_weights,
    lab_wigner,
)

__all__ = [
    "LossChannel",
    "WitnessResult",
    "LossyTwoBodyWigner",
    "DirectLossyWigner",
    "LossTable",
    "lossy_wigner",
    "lossy_relative_points",
    "lossy_relative_grid",
    "direct_lossy_values",
    "lossy_marginal_at_origin",
    "witness_value",
    "optimize_witness",
    "lossy_chsh",
    "loss_sweep",
    "loss_threshold",
    "lossy_normalization",
]

GH_NODES = 32

# Gauss-Hermite sizes for the Mehler u-integral, by kernel width: (max width, nodes).
_GH_U_TIERS = ((1.5, 64), (2.5, 128), (4.5, 256))


@lru_cache(maxsize=None)
def _gh_u_rule(n: int):
    z, w = roots_hermitenorm(n)
    return z, w / w.sum()


@dataclass(frozen=True)
class LossChannel:
    """Equal-reflectivity loss on both modes; ``eta = 1`` is the identity."""

    eta: float

    def __post_init__(self):
        eta = float(self.eta)
        if not (0.0 < eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        object.__setattr__(self, "eta", eta)

    @property
    def is_identity(self) -> bool:
        return self.eta == 1.0


@dataclass(frozen=True)
class WitnessResult:
    """Loss-robust witness value; ``violated`` is ``value > 2``."""

    value: float
    branch: str
    violated: bool
    j_used: float


# ---------------------------------------------------------------------------
# Relative part


def _lossy_profile(state: RelativeEigenstate, eta: float, r: float, panel: float):
    """``y`` nodes and weighted profile for the lossy relative point at ``r``.

    Returns ``(y, G)`` such that ``W = (2/(pi eta)) sum_k G_k cos(2 p y_k / sqrt(eta))``,
    where ``G(y) = w_y exp(-(1-eta) y^2/(2 eta)) int dt N(t; c, s^2) psi(t+y) psi(t-y)``.
    The inner ``t`` rule is split at the kinks ``t = +-y``.
    """
    lo, hi = state.support
    d = state.cfg.d
    se = math.sqrt(eta)
    s = math.sqrt((1.0 - eta) / eta)
    damp = (1.0 - eta) / (2.0 * eta)
    c = (r - d) / se + d
    a0, b0 = c - 9.0 * s, c + 9.0 * s
    Y = min(0.5 * (hi - lo), math.sqrt(40.0 / damp))
    t_panel = min(0.5, s)
    breaks = sorted({0.0, Y, *(v for v in (abs(a0), abs(b0), abs(c)) if 0.0 < v < Y)})
    ys, ws = [], []
    for y0, y1 in zip(breaks[:-1], breaks[1:]):
        n_, w_ = _panel_rule(y0, y1, min(panel, s))
        ys.append(n_)
        ws.append(w_)
    y = np.concatenate(ys)
    wy = np.concatenate(ws)
    G = np.zeros(y.size)
    for k, yk in enumerate(y):
        a, b = max(a0, lo + yk), min(b0, hi - yk)
        if b <= a:
            continue
        cuts = sorted({a, b, *(v for v in (-yk, yk) if a < v < b)})
        tn, tw = [], []
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            n_, w_ = _panel_rule(c0, c1, t_panel)
            tn.append(n_)
            tw.append(w_)
        t = np.concatenate(tn)
        gauss = np.exp(-0.5 * ((t - c) / s) ** 2) / (math.sqrt(2.0 * math.pi) * s)
        G[k] = float(np.dot(np.concatenate(tw) * gauss, state.fast(t + yk) * state.fast(t - yk)))
    return y, G * wy * np.exp(-damp * y * y)


def lossy_relative_points(state: RelativeEigenstate, eta: float, r, p, *, cache: dict | None = None) -> np.ndarray:
    """Relative Wigner function after loss, at true relative coordinates.

    Smoothing acts in the trap-centred coordinate ``r - d``.  Doing the
    momentum convolution analytically leaves

    ``W(r, p) = (2/(pi eta)) int_0^inf dy cos(2 p y/sqrt(eta)) exp(-(1-eta) y^2/(2 eta)) G(y)``,

    ``G(y) = int dt N(t; c, s^2) psi(t+y) psi(t-y)``,

    with ``c = (r - d)/sqrt(eta) + d`` and ``s^2 = (1 - eta)/eta``.  The
    profile ``G`` depends only on ``r`` and is reused for every ``p`` (and,
    through ``cache``, across calls).
    """
    r, p = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(p, dtype=float))
    if eta == 1.0:
        from .wigner import relative_wigner_points

        return relative_wigner_points(state, r, p)
    se = math.sqrt(eta)
    flat_r, flat_p = r.ravel(), p.ravel()
    res = np.zeros(flat_r.size)
    # Group positions equal to 1e-12 so that profiles are shared.
    uniq, inv = np.unique(np.round(flat_r, 12), return_inverse=True)
    for j, rv in enumerate(uniq):
        sel = np.nonzero(inv == j)[0]
        ps = flat_p[sel] / se
        # Panel fine enough for the oscillation; quantised so cached profiles are reused.
        panel = 0.25 / 2.0 ** max(0, math.ceil(math.log2(max(float(np.abs(ps).max()), 1e-300) / 4.0)))
        key = (float(rv), panel)
        prof = cache.get(key) if cache is not None else None
        if prof is None:
            prof = _lossy_profile(state, eta, float(rv), panel)
            if cache is not None:
                cache[key] = prof
        y, G = prof
        res[sel] = (2.0 / (math.pi * eta)) * (np.cos(2.0 * np.outer(ps, y)) @ G)
    return res.reshape(r.shape)


def lossy_relative_grid(state: RelativeEigenstate, eta: float, r_axis=None, p_axis=None):
    """Lossy relative Wigner function on a grid by FFT convolution.

    The rescaled function ``W((r - d)/sqrt(eta) + d, p/sqrt(eta))/eta`` is
    sampled on a lattice containing the contact point and convolved with the
    sampled noise Gaussian.  Returns ``(r_axis, p_axis, values)``.
    """
    from .wigner import PhaseSpaceGrid2D

    if r_axis is None or p_axis is None:
        r_axis, p_axis = default_relative_axes(state.cfg, state.nu)
    h_r = r_axis[1] - r_axis[0]
    h_p = p_axis[1] - p_axis[0]
    se = math.sqrt(eta)
    d = state.cfg.d
    # Scaled lattice: true coordinate t = (r - d)/se + d must hit t = 0 exactly.
    shift = (-d * se + d) - h_r * np.round((-d * se + d) / h_r)
    r_sh = r_axis + shift
    t_axis = (r_sh - d) / se + d
    base = relative_wigner_grid(state, None, t_axis, p_axis / se).values / eta
    if eta == 1.0:
        values = base
    else:
        sr = math.sqrt(1.0 - eta)
        sp = math.sqrt((1.0 - eta) / 4.0)
        kr = h_r * np.arange(-int(8 * sr / h_r) - 1, int(8 * sr / h_r) + 2)
        kp = h_p * np.arange(-int(8 * sp / h_p) - 1, int(8 * sp / h_p) + 2)
        g_r = np.exp(-0.5 * (kr / sr) ** 2) * h_r / (math.sqrt(2 * math.pi) * sr)
        g_p = np.exp(-0.5 * (kp / sp) ** 2) * h_p / (math.sqrt(2 * math.pi) * sp)
        values = fftconvolve(base, np.outer(g_r, g_p), mode="same")
    return PhaseSpaceGrid2D(r_sh, np.asarray(p_axis, dtype=float), values)


# ---------------------------------------------------------------------------
# Lossy sources


def _binomial_matrix(n_max: int, eta: float) -> np.ndarray:
    """``B[n, k] = C(n, k) eta^k (1 - eta)^(n - k)``."""
    n = np.arange(n_max + 1)[:, None]
    k = np.arange(n_max + 1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        B = comb(n, k) * eta**k * (1.0 - eta) ** np.maximum(n - k, 0)
    return np.where(k <= n, B, 0.0)


class LossyTwoBodyWigner(TwoBodyWigner):
    """Factorised lossy source: binomially thinned centre of mass times smoothed relative part."""

    def __init__(self, source: TwoBodyWigner, channel: LossChannel):
        eta = channel.eta
        Wm = source.weight_matrix
        thinned = _binomial_matrix(Wm.shape[0] - 1, eta).T @ Wm
        terms = [(k, s, float(thinned[k, s])) for k in range(thinned.shape[0]) for s in range(thinned.shape[1]) if thinned[k, s] != 0.0]
        super().__init__(source.cfg, terms, source.rel_states, dict(source.meta))
        self.meta["eta"] = source.meta.get("eta", 1.0) * eta
        self.channel = channel
        self.parent = source
        self._profiles = [dict() for _ in self.rel_states]

    def rel_factor(self, s: int, r, p):
        return lossy_relative_points(self.rel_states[s], self.channel.eta, r, p, cache=self._profiles[s])


def direct_lossy_values(source: WignerSource, eta: float, x1, p1, x2, p2, n_nodes: int = GH_NODES) -> np.ndarray:
    """Lossy Wigner function by tensor Gauss-Hermite quadrature in four dimensions.

    Generic but costly (``n_nodes**4`` source evaluations per point); used as
    the reference for the factorised path and for sources without structure.
    """
    pts = np.broadcast_arrays(*(np.atleast_1d(np.asarray(a, dtype=float)) for a in (x1, p1, x2, p2)))
    if eta == 1.0:
        return source(*pts)
    z, w = roots_hermitenorm(n_nodes)
    z = z * math.sqrt((1.0 - eta) / 2.0)
    w = w / w.sum()
    se = math.sqrt(eta)
    out = np.empty(pts[0].shape)
    Z = np.meshgrid(z, z, z, z, indexing="ij")
    Wt = np.einsum("i,j,k,l->ijkl", w, w, w, w)
    for idx in np.ndindex(pts[0].shape):
        u = [float(a[idx]) for a in pts]
        vals = source(*[(u[m] - Z[m]) / se for m in range(4)])
        out[idx] = float(np.sum(Wt * vals)) / eta**2
    return out


class DirectLossyWigner(WignerSource):
    """Lossy wrapper for arbitrary sources (direct 4-D quadrature)."""

    def __init__(self, source: WignerSource, channel: LossChannel, n_nodes: int = GH_NODES):
        self.source = source
        self.channel = channel
        self.n_nodes = n_nodes
        self.meta = dict(getattr(source, "meta", {}))
        self.meta["eta"] = self.meta.get("eta", 1.0) * channel.eta

    def __call__(self, x1, p1, x2, p2):
        shape = np.broadcast(*(np.asarray(a) for a in (x1, p1, x2, p2))).shape
        out = direct_lossy_values(self.source, self.channel.eta, x1, p1, x2, p2, self.n_nodes)
        return out.reshape(shape)


def lossy_wigner(source: WignerSource, ch: LossChannel, *, direct: bool = False) -> WignerSource:
    """Apply the loss channel to a source.

    Two-body sources use the factorised path unless ``direct`` is set;
    anything else goes through direct 4-D Gauss-Hermite quadrature.  The
    identity channel returns ``source`` itself.
    """
    if not isinstance(ch, LossChannel):
        ch = LossChannel(ch)
    if ch.is_identity:
        return source
    if isinstance(source, TwoBodyWigner) and not isinstance(source, LossyTwoBodyWigner) and not direct:
        return LossyTwoBodyWigner(source, ch)
    return DirectLossyWigner(source, ch)


def lossy_normalization(source: TwoBodyWigner, ch: LossChannel, samples: int = 1_000_000, seed: int = 0):
    """Monte Carlo estimate of the 4-D integral of the lossy Wigner function.

    Both factors are tabulated on grids (closed-form thinned centre of mass,
    FFT-smoothed relative part) and grid nodes are drawn from the product of
    the normalised ``|W|`` tables.  Returns ``(estimate, standard_error)``.
    """
    rng = np.random.default_rng(seed)
    lossy = lossy_wigner(source, ch) if not ch.is_identity else source
    Wm = lossy.weight_matrix
    ns = np.nonzero(Wm.any(axis=1))[0]
    ss = np.nonzero(Wm.any(axis=0))[0]
    W_sub = Wm[np.ix_(ns, ss)]
    Xa, Pa = default_com_axes(int(ns.max()))
    A = np.stack([com_wigner_grid({int(n): 1.0}, Xa, Pa).values.ravel() for n in ns])
    grids = [lossy_relative_grid(source.rel_states[s], ch.eta) for s in ss]
    B = np.stack([g.values.ravel() for g in grids])
    cell = (Xa[1] - Xa[0]) * (Pa[1] - Pa[0]) * grids[0].cell
    qa = np.abs(A).T @ W_sub.sum(axis=1)
    qb = np.abs(B).T @ W_sub.sum(axis=0)
    qa, qb = qa / qa.sum(), qb / qb.sum()
    ia = rng.choice(qa.size, size=samples, p=qa)
    ib = rng.choice(qb.size, size=samples, p=qb)
    val = np.einsum("ns,ni,si->i", W_sub, A[:, ia], B[:, ib]) * cell / (qa[ia] * qb[ib])
    return float(val.mean()), float(val.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# Single-mode marginal at the origin


def _com_pair_sum(weights: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``sum_n w_n phi_n(a) phi_n(b)`` for centre-of-mass eigenfunctions."""
    n_max = weights.size - 1
    ha = hermite_functions(n_max, math.sqrt(2.0) * a)
    hb = hermite_functions(n_max, math.sqrt(2.0) * b)
    return math.sqrt(2.0) * np.tensordot(weights, ha * hb, axes=1)


def lossy_marginal_at_origin(source: TwoBodyWigner, ch: LossChannel | float, mode: int = 1) -> float:
    """Single-mode Wigner value at the origin after loss (quadrature convention).

    Uses ``W_eta(0) = (1/pi) Tr[rho_1 tau^N]`` with ``tau = 1 - 2 eta``,
    where ``rho_1`` is the reduced density matrix of the chosen mode and
    ``tau^N`` has the Mehler kernel.  In rotated coordinates
    ``u = (x + x')/sqrt2``, ``v = (x - x')/sqrt2`` the kernel is a Gaussian
    of variance ``(1 - eta)/eta`` in ``u`` and ``eta/(1 - eta)`` in ``v``.
    The returned value is twice the lab-convention value, so the vacuum gives
    ``2/pi``.
    """
    if not isinstance(source, TwoBodyWigner) or isinstance(source, LossyTwoBodyWigner):
        raise TypeError("lossy_marginal_at_origin needs an unlossy TwoBodyWigner source")
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    eta = ch.eta if isinstance(ch, LossChannel) else LossChannel(ch).eta
    sigma = 1.0 if mode == 1 else -1.0
    d_s = sigma * source.cfg.d
    rt2 = math.sqrt(2.0)

    total = 0.0
    for s, st in enumerate(source.rel_states):
        wn = source.weight_matrix[:, s]
        if not wn.any():
            continue
        lo, hi = st.support
        if sigma < 0:
            lo, hi = -hi, -lo
        psi = (lambda t, st=st: st.fast(sigma * t))
        v_max = (hi - lo) / rt2
        v_nodes, v_w = _panel_rule(0.0, v_max, 0.5)
        if eta == 1.0:
            u_nodes, u_w = np.zeros(1), np.array([1.0 / rt2])
            kv = np.ones_like(v_nodes)
        else:
            su = math.sqrt((1.0 - eta) / eta)
            n_gh = next((n for width, n in _GH_U_TIERS if su <= width), 0)
            if n_gh:
                # The u-integrand is entire, so Gauss-Hermite against the
                # kernel's own Gaussian converges fast once the rule resolves it.
                z, wz = _gh_u_rule(n_gh)
                u_nodes = su * z
                u_w = wz * (math.sqrt(2.0 * math.pi) * su / math.sqrt(4.0 * math.pi * eta * (1.0 - eta)))
            else:
                U = min(9.0 * su, 12.0)
                u_nodes, u_w = _panel_rule(-U, U, 0.5)
                u_w = u_w * np.exp(-0.5 * eta * u_nodes**2 / (1.0 - eta)) / math.sqrt(4.0 * math.pi * eta * (1.0 - eta))
            kv = np.exp(-0.5 * (1.0 - eta) * v_nodes**2 / eta)
        # Integrand is even in v; integrate v >= 0 and double.
        acc = 0.0
        for v, wv, kvv in zip(v_nodes, v_w, kv):
            shift = rt2 * v
            a, b = max(lo, lo + shift), min(hi, hi + shift)
            if b <= a:
                continue
            cuts = sorted({a, b, *(c for c in (0.0, shift) if a < c < b)})
            tn, tw = [], []
            for c0, c1 in zip(cuts[:-1], cuts[1:]):
                n_, w_ = _panel_rule(c0, c1, 0.5)
                tn.append(n_)
                tw.append(w_)
            t = np.concatenate(tn)
            wt = np.concatenate(tw) * psi(t) * psi(t - shift)
            x = (u_nodes[:, None] + v) / rt2
            xx = rt2 * u_nodes[:, None]
            ca = 0.5 * (2.0 * x + d_s - t[None, :])
            cb = 0.5 * (xx + d_s - t[None, :])
            rho = _com_pair_sum(wn, ca, cb) @ wt
            acc += wv * kvv * float(np.dot(u_w, rho))
        total += 2.0 * acc
    return 2.0 * total / math.pi


# ---------------------------------------------------------------------------
# Witness


def _witness_from_parts(b_lossy, eta: float, m1: float, m2: float) -> np.ndarray:
    """Witness from ``sum E_eta`` (lossy CHSH combination) and quadrature marginals."""
    if eta > 0.5:
        val = b_lossy / eta**2 + (math.pi * (eta - 1.0) / eta**2) * (m1 + m2) + 2.0 * (1.0 - 1.0 / eta) ** 2
    else:
        # pi^2 * (sum of quadrature W) = 4 * sum E
        val = 4.0 * b_lossy - 2.0 * math.pi * (m1 + m2) + 2.0
    return np.abs(val)


def _branch(eta: float) -> str:
    return "eta-above-half" if eta > 0.5 else "eta-at-most-half"


def _marginals(source: TwoBodyWigner, eta: float):
    if eta == 1.0:
        return 0.0, 0.0
    m1 = lossy_marginal_at_origin(source, eta, 1)
    if source.cfg.d == 0.0:
        return m1, m1
    return m1, lossy_marginal_at_origin(source, eta, 2)


def witness_value(source: TwoBodyWigner, ch: LossChannel | float, J: float, *, phase: float = DEFAULT_PHASE) -> WitnessResult:
    """Loss-robust witness at displacement ``J``.

    At ``eta = 1`` the marginal terms carry zero weight and the value is
    ``|B(J)|`` through the same code path as :func:`~trapchsh.nonlocality.chsh_b`.
    """
    ch = ch if isinstance(ch, LossChannel) else LossChannel(ch)
    lossy = lossy_wigner(source, ch)
    m1, m2 = _marginals(source, ch.eta)
    b = float(_chsh_vec(lossy, J, phase)[0])
    val = float(_witness_from_parts(b, ch.eta, m1, m2))
    return WitnessResult(val, _branch(ch.eta), val > 2.0, float(J))


def optimize_witness(
    source: TwoBodyWigner,
    ch: LossChannel | float,
    j_max: float = J_MAX,
    tol: float = 1e-6,
    *,
    phase: float = DEFAULT_PHASE,
    n_grid: int = SCAN_POINTS,
) -> WitnessResult:
    """Witness maximised over ``J`` in ``[0, j_max]`` (independently of the CHSH optimum)."""
    ch = ch if isinstance(ch, LossChannel) else LossChannel(ch)
    lossy = lossy_wigner(source, ch)
    m1, m2 = _marginals(source, ch.eta)
    f = lambda J: _witness_from_parts(_chsh_vec(lossy, J, phase), ch.eta, m1, m2)  # noqa: E731
    j, _ = maximize_scalar(f, Interval(0.0, j_max), tol, n_grid, vectorized=True)
    val = float(f(np.array([j]))[0])
    return WitnessResult(val, _branch(ch.eta), val > 2.0, float(j))


def lossy_chsh(source: WignerSource, ch: LossChannel | float, *, phase: float = DEFAULT_PHASE, j_max: float = J_MAX) -> ChshResult:
    """Optimised CHSH value of the source after loss."""
    ch = ch if isinstance(ch, LossChannel) else LossChannel(ch)
    return optimize_chsh(lossy_wigner(source, ch), j_max, phase=phase)


@dataclass(frozen=True)
class LossTable:
    """Per-``eta`` optimised lossy CHSH and witness values."""

    cfg: TrapConfig
    temperature: float
    eta: np.ndarray
    chsh: np.ndarray
    chsh_j: np.ndarray
    witness: np.ndarray
    witness_j: np.ndarray
    errors: dict

    def threshold(self, which: str = "witness") -> float:
        """Smallest ``eta`` still above 2, interpolated toward the crossing."""
        vals = np.abs(self.chsh) if which == "chsh" else self.witness
        return _lower_threshold(self.eta, vals)


def _lower_threshold(etas: np.ndarray, vals: np.ndarray) -> float:
    """Smallest violating ``eta``, interpolated toward the next smaller grid value."""
    order = np.argsort(etas)[::-1]
    crossing = threshold_crossing(-etas[order], vals[order])
    return -crossing if math.isfinite(crossing) else math.nan


def _loss_point(args):
    g, d, T, eta, phase = args
    src = lab_wigner(thermal_weights(TrapConfig(g, d), T))
    c = lossy_chsh(src, eta, phase=phase)
    w = optimize_witness(src, eta, phase=phase)
    return c, w


def loss_sweep(
    cfg: TrapConfig,
    T: float,
    eta_values: Sequence[float],
    *,
    phase: float = DEFAULT_PHASE,
    threads: int = 1,
) -> LossTable:
    """Optimised lossy CHSH and witness for each ``eta``."""
    etas = np.asarray(list(eta_values), dtype=float)
    tasks = [(cfg.g, cfg.d, float(T), float(e), phase) for e in etas]
    res = parallel_map(_loss_point, tasks, threads, return_exceptions=True)
    chsh = np.full(etas.size, np.nan)
    cj = np.full(etas.size, np.nan)
    wit = np.full(etas.size, np.nan)
    wj = np.full(etas.size, np.nan)
    errors = {}
    for i, r in enumerate(res):
        if isinstance(r, Exception):
            errors[float(etas[i])] = repr(r)
            continue
        c, w = r
        chsh[i], cj[i], wit[i], wj[i] = c.b_value, c.j_star, w.value, w.j_used
    return LossTable(cfg, float(T), etas, chsh, cj, wit, wj, errors)


def loss_threshold(source: TwoBodyWigner, which: str = "witness", *, lo: float = 0.5, hi: float = 1.0, tol: float = 1e-4, phase: float = DEFAULT_PHASE) -> float:
    """Smallest ``eta`` in ``[lo, hi]`` at which the optimised quantity exceeds 2.

    Bisection on the assumption that violation is monotone in ``eta``;
    returns ``nan`` if even ``hi`` does not violate and ``lo`` if ``lo`` does.
    """
    if which not in ("witness", "chsh"):
        raise ValueError("which must be 'witness' or 'chsh'")

    def violated(eta):
        if which == "chsh":
            return abs(lossy_chsh(source, eta, phase=phase).b_value) > 2.0
        return optimize_witness(source, eta, phase=phase).violated

    if not violated(hi):
        return math.nan
    if violated(lo):
        return lo
    a, b = lo, hi
    while b - a > tol:
        m = 0.5 * (a + b)
        if violated(m):
            b = m
        else:
            a = m
    return 0.5 * (a + b)
