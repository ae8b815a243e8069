"""Two-body ground state, reduced single-particle density and its entropy.

The reduced density ``rho_1(x, x') = int Psi(x, x2) Psi(x', x2) dx2`` is
discretised on a uniform grid (Nystrom method).  Because the relative
wavefunction has a slope discontinuity at ``x1 = x2``, the plain trapezoid
rule is only second-order accurate; the leading Euler-Maclaurin term of the
kink is added back analytically, which restores fourth-order convergence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .eigenstates import ComEigenstate, RelativeEigenstate, relative_states
from .numerics import parallel_map
from .spectrum import TrapConfig

__all__ = [
    "ProductState",
    "KernelMatrix",
    "SchmidtSpectrum",
    "EntropyTable",
    "SupportTruncationWarning",
    "ground_state",
    "reduced_density_kernel",
    "schmidt_spectrum",
    "von_neumann_entropy",
    "ground_state_entropy",
    "entropy_sweep",
    "density_grid",
    "default_spacing",
]

DEFAULT_SPACING = 0.05
CLIP_TOL = 1e-8
MAX_REFINE = 4.0


def default_spacing(cfg: TrapConfig, nu: float | None = None) -> float:
    """Grid step for the ground state of ``cfg``.

    At the contact point the relative state decays at the local rate
    ``k0 = sqrt(d^2/4 - nu - 1/2)``.  The step is ``DEFAULT_SPACING``
    divided by ``1.5 k0``, clipped to the range 1 to 4, so that bound and
    near-resonant states keep the O(h^4) error of a trap-scale state.
    """
    if nu is None:
        nu = relative_states(cfg, 1)[0].nu
    k0 = math.sqrt(max(cfg.d**2 / 4 - nu - 0.5, 0.0))
    return DEFAULT_SPACING / min(MAX_REFINE, max(1.0, 1.5 * k0))


class SupportTruncationWarning(UserWarning):
    """The density grid cuts off a non-negligible part of the state."""


@dataclass(frozen=True)
class ProductState:
    """Two-atom wavefunction ``phi_n((x1 + x2)/2) * psi((x1 - x2))``."""

    com: ComEigenstate
    rel: RelativeEigenstate

    @property
    def cfg(self) -> TrapConfig:
        return self.rel.cfg

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self.com(0.5 * (x1 + x2)) * self.rel(x1 - x2)


def ground_state(cfg: TrapConfig) -> ProductState:
    """Two-atom ground state: centre-of-mass ground state times relative ground state."""
    rel = relative_states(cfg, 1)[0]
    return ProductState(ComEigenstate(0), rel)


@dataclass(frozen=True)
class KernelMatrix:
    """Discretised kernel ``values[i, j] = rho_1(grid[i], grid[j])``."""

    grid: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.dot(self.weights, np.diag(self.values)))


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Descending eigenvalues of the reduced density operator."""

    lambdas: np.ndarray


def density_grid(cfg: TrapConfig, spacing: float = DEFAULT_SPACING, half_width: float | None = None) -> np.ndarray:
    """Symmetric uniform grid containing 0, extent at least ``|d|/2 + 8``."""
    if half_width is None:
        half_width = abs(cfg.d) / 2 + 8.0
    m = int(math.ceil(half_width / spacing - 1e-9))
    return spacing * np.arange(-m, m + 1)


def _product_matrix(state: ProductState, x: np.ndarray, h: float) -> np.ndarray:
    """``A[i, k] = Psi(x_i, x_k)`` using lattice reuse of the 1-D factors."""
    n = x.size
    m0 = int(round(x[0] / h))
    idx = np.arange(n) + m0
    diff = idx[:, None] - idx[None, :]  # r / h
    ssum = idx[:, None] + idx[None, :]  # 2X / h
    r_lat = h * np.arange(diff.min(), diff.max() + 1)
    x_lat = 0.5 * h * np.arange(ssum.min(), ssum.max() + 1)
    psi = state.rel(r_lat)
    phi = state.com(x_lat)
    return phi[ssum - ssum.min()] * psi[diff - diff.min()]


def reduced_density_kernel(
    psi: ProductState | Callable,
    grid: np.ndarray | None = None,
    *,
    spacing: float | None = None,
    half_width: float | None = None,
    trace_out: int = 2,
) -> KernelMatrix:
    """Reduced one-body density matrix on a uniform grid.

    Parameters
    ----------
    psi : ProductState or callable
        Two-argument real wavefunction ``Psi(x1, x2)``.  For a
        :class:`ProductState` the kink correction is applied.
    grid : ndarray, optional
        Uniform grid; built from ``spacing`` and ``half_width`` otherwise.
    spacing : float, optional
        Grid step; :func:`default_spacing` of the state when omitted.
    trace_out : {1, 2}
        Which particle is integrated out.

    Returns
    -------
    KernelMatrix
    """
    if trace_out not in (1, 2):
        raise ValueError("trace_out must be 1 or 2")
    if grid is None:
        if isinstance(psi, ProductState):
            cfg = psi.cfg
            if spacing is None:
                spacing = default_spacing(cfg, psi.rel.nu)
        else:
            cfg = TrapConfig(0.0, 0.0)
            if spacing is None:
                spacing = DEFAULT_SPACING
        grid = density_grid(cfg, spacing, half_width)
    x = np.asarray(grid, dtype=float)
    h = float(x[1] - x[0])
    if not np.allclose(np.diff(x), h, rtol=1e-9, atol=1e-12):
        raise ValueError("grid must be uniform")

    if isinstance(psi, ProductState):
        A = _product_matrix(psi, x, h)
    else:
        A = np.asarray(psi(x[:, None], x[None, :]), dtype=float)
    if trace_out == 1:
        A = A.T  # rows: kept particle, columns: integrated particle

    edge = max(np.abs(A[:, [0, -1]]).max(), np.abs(A[[0, -1], :]).max()) ** 2
    if edge > 1e-8:
        warnings.warn(
            f"density grid truncates the state (edge density {edge:.2e})",
            SupportTruncationWarning,
            stacklevel=2,
        )
    rho = h * (A @ A.T)
    if isinstance(psi, ProductState):
        # Euler-Maclaurin kink term: I = T + h^2/12 * (jump of the integrand slope).
        kappa = psi.rel.slope_jump
        if kappa != 0.0:
            phi_diag = psi.com(x)
            # B[i, j] is Psi with the kept particle at x_j and the integrated one at x_i.
            B = A.T
            corr = (h * h / 12.0) * kappa * (phi_diag[:, None] * B + (phi_diag[:, None] * B).T)
            rho = rho + corr
    rho = 0.5 * (rho + rho.T)
    weights = np.full(x.size, h)
    return KernelMatrix(x, weights, rho)


def schmidt_spectrum(k: KernelMatrix) -> SchmidtSpectrum:
    """Eigenvalues of ``diag(sqrt(w)) rho diag(sqrt(w))``, descending.

    Values in ``(-1e-8, 0)`` are clipped to zero; more negative values
    signal a broken discretisation and raise.
    """
    sw = np.sqrt(k.weights)
    S = sw[:, None] * k.values * sw[None, :]
    lam = np.linalg.eigvalsh(S)[::-1]
    if lam[-1] < -CLIP_TOL:
        raise FloatingPointError(f"reduced density has eigenvalue {lam[-1]:.3e} < 0")
    lam = np.where(lam < 0, 0.0, lam)
    return SchmidtSpectrum(lam)


def von_neumann_entropy(s: SchmidtSpectrum | Sequence[float]) -> float:
    """Base-2 entropy ``-sum lambda log2 lambda`` with ``0 log 0 = 0``."""
    lam = np.asarray(s.lambdas if isinstance(s, SchmidtSpectrum) else s, dtype=float)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)) + 0.0)


def ground_state_entropy(cfg: TrapConfig, *, spacing: float | None = None) -> float:
    """Entanglement entropy of the two-atom ground state."""
    k = reduced_density_kernel(ground_state(cfg), spacing=spacing)
    return von_neumann_entropy(schmidt_spectrum(k))


@dataclass(frozen=True)
class EntropyTable:
    """Entropy ``S[i, j]`` at ``g_values[i]`` and ``d_values[j]``."""

    g_values: np.ndarray
    d_values: np.ndarray
    entropy: np.ndarray
    local_maxima: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


def _entropy_point(args):
    g, d, spacing = args
    return ground_state_entropy(TrapConfig(g, d), spacing=spacing)


def entropy_sweep(
    g_values: Sequence[float],
    d_values: Sequence[float],
    *,
    spacing: float | None = None,
    threads: int = 1,
) -> EntropyTable:
    """Ground-state entropy on a ``(g, d)`` grid.

    For each attractive ``g`` the interior local maxima in ``d`` are recorded
    in ``local_maxima[g]``.
    """
    gs = np.asarray(list(g_values), dtype=float)
    ds = np.asarray(list(d_values), dtype=float)
    tasks = [(float(g), float(d), spacing) for g in gs for d in ds]
    res = parallel_map(_entropy_point, tasks, threads, return_exceptions=True)
    S = np.full((gs.size, ds.size), np.nan)
    errors = {}
    for t, r in zip(tasks, res):
        i = int(np.nonzero(gs == t[0])[0][0])
        j = int(np.nonzero(ds == t[1])[0][0])
        if isinstance(r, Exception):
            errors[(t[0], t[1])] = repr(r)
        else:
            S[i, j] = r
    maxima = {}
    for i, g in enumerate(gs):
        if g < 0:
            row = S[i]
            maxima[float(g)] = [
                float(ds[j])
                for j in range(1, ds.size - 1)
                if row[j] > row[j - 1] and row[j] >= row[j + 1]
            ]
    return EntropyTable(gs, ds, S, maxima, errors)
