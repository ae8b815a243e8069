import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import roots_hermitenorm

from trapchsh.density import ground_state, reduced_density_kernel
from trapchsh.losschannel import (
    LossChannel,
    _binomial_matrix,
    direct_lossy_values,
    lossy_chsh,
    lossy_marginal_at_origin,
    lossy_normalization,
    lossy_relative_grid,
    lossy_relative_points,
    lossy_wigner,
    optimize_witness,
    witness_value,
)
from trapchsh.nonlocality import chsh_b, optimize_chsh
from trapchsh.spectrum import TrapConfig
from trapchsh.wigner import lab_wigner, thermal_weights


def thermal_lab(nbar, x1, p1, x2, p2):
    s = 2 * nbar + 1
    return np.exp(-(x1**2 + p1**2 + x2**2 + p2**2) / s) / (math.pi * s) ** 2


def nbar(T):
    return 1.0 / math.expm1(1.0 / T)


def test_channel_validation():
    with pytest.raises(ValueError):
        LossChannel(0.0)
    with pytest.raises(ValueError):
        LossChannel(1.2)
    assert LossChannel(1).is_identity


def test_identity_returns_source():
    src = lab_wigner(ground_state(TrapConfig(1.0, 0.0)))
    assert lossy_wigner(src, LossChannel(1.0)) is src


@pytest.mark.parametrize("eta", [0.9, 0.5, 0.2])
def test_vacuum_is_fixed_point(eta, rng):
    src = lab_wigner(ground_state(TrapConfig(0.0, 1.0)))
    pts = rng.normal(0, 1, size=(4, 10))
    out = lossy_wigner(src, LossChannel(eta))(*pts)
    assert np.allclose(out, thermal_lab(0.0, *pts), atol=1e-10)


@pytest.mark.parametrize("eta", [0.8, 0.4])
def test_thermal_gaussian_closed_form(eta, rng):
    T = 0.5
    src = lab_wigner(thermal_weights(TrapConfig(0.0, 0.7), T))
    pts = rng.normal(0, 1, size=(4, 10))
    out = lossy_wigner(src, LossChannel(eta))(*pts)
    assert np.allclose(out, thermal_lab(eta * nbar(T), *pts), atol=1e-8)


def test_direct_quadrature_on_gaussian(rng):
    src = lab_wigner(thermal_weights(TrapConfig(0.0, 0.0), 0.4))
    pts = rng.normal(0, 1, size=(4, 3))
    out = direct_lossy_values(src, 0.6, *pts, n_nodes=12)
    assert np.allclose(out, thermal_lab(0.6 * nbar(0.4), *pts), atol=1e-9)


def test_binomial_semigroup():
    a, b = _binomial_matrix(12, 0.7), _binomial_matrix(12, 0.55)
    assert np.allclose(a @ b, _binomial_matrix(12, 0.7 * 0.55), atol=1e-14)
    assert np.allclose(a.sum(axis=1), 1.0)


def _smooth_relative(state, eta1, eta2, r, p, n=24):
    """Apply loss eta2 to the eta1-lossy relative function by 2-D Gauss-Hermite."""
    z, w = roots_hermitenorm(n)
    w = w / w.sum()
    d = state.cfg.d
    zr = z * math.sqrt(1 - eta2)
    zp = z * math.sqrt((1 - eta2) / 4)
    R = ((r - d - zr) / math.sqrt(eta2) + d)[:, None] * np.ones(n)[None, :]
    P = np.ones(n)[:, None] * ((p - zp) / math.sqrt(eta2))[None, :]
    vals = lossy_relative_points(state, eta1, R, P)
    return float(w @ vals @ w) / eta2


@pytest.mark.parametrize("g,d", [(10.0, 0.0), (1.0, 0.5)])
def test_relative_semigroup(g, d):
    state = ground_state(TrapConfig(g, d)).rel
    for r, p in [(0.0, 0.0), (0.4, -0.3), (d - 1.0, 0.8)]:
        direct = lossy_relative_points(state, 0.8 * 0.75, r, p)
        nested = _smooth_relative(state, 0.8, 0.75, r, p)
        assert nested == pytest.approx(float(direct), abs=1e-6)


def test_grid_matches_points():
    state = ground_state(TrapConfig(10.0, 0.3)).rel
    grid = lossy_relative_grid(state, 0.7)
    for i, j in [(200, 160), (215, 150), (180, 190)]:
        pt = lossy_relative_points(state, 0.7, grid.q_axis[i], grid.p_axis[j])
        assert grid.values[i, j] == pytest.approx(float(pt), abs=1e-6)


def test_lossy_normalization():
    src = lab_wigner(ground_state(TrapConfig(10.0, 0.0)))
    est, err = lossy_normalization(src, LossChannel(0.8), samples=200000, seed=1)
    assert abs(est - 1) < 3 * err + 1e-3


@pytest.mark.parametrize("eta", [1.0, 0.6, 0.05])
def test_marginal_vacuum(eta):
    src = lab_wigner(ground_state(TrapConfig(0.0, 2.0)))
    assert lossy_marginal_at_origin(src, eta, 1) == pytest.approx(2 / math.pi, abs=1e-10)


@pytest.mark.parametrize("eta", [1.0, 0.7])
def test_marginal_thermal_closed_form(eta):
    T = 0.6
    src = lab_wigner(thermal_weights(TrapConfig(0.0, 0.0), T))
    ref = 2 / (math.pi * (2 * eta * nbar(T) + 1))
    assert lossy_marginal_at_origin(src, eta, 1) == pytest.approx(ref, abs=1e-8)


def test_marginal_parity_oracle():
    # At eta = 1 the quadrature value is (2/pi) Tr[rho_1 Parity] = (2/pi) int K(x, -x) dx.
    gs = ground_state(TrapConfig(10.0, 0.0))
    k = reduced_density_kernel(gs, spacing=0.025)
    x = k.grid
    rev = k.values[np.arange(x.size), np.arange(x.size)[::-1]]
    ref = (2 / math.pi) * float(np.dot(k.weights, rev))
    assert lossy_marginal_at_origin(lab_wigner(gs), 1.0, 1) == pytest.approx(ref, abs=1e-5)


def test_marginal_lossy_against_phase_space_integral():
    gs = ground_state(TrapConfig(10.0, 0.0))
    src = lab_wigner(gs)
    lossy = lossy_wigner(src, LossChannel(0.6))
    x2 = np.linspace(-7, 7, 141)
    h = x2[1] - x2[0]
    X2, P2 = np.meshgrid(x2, x2, indexing="ij")
    W = lossy(np.zeros_like(X2), np.zeros_like(X2), X2, P2)
    ref = 2 * h * h * W.sum()  # quadrature convention
    assert lossy_marginal_at_origin(src, 0.6, 1) == pytest.approx(ref, abs=1e-5)


def test_witness_equals_chsh_at_unit_eta():
    src = lab_wigner(ground_state(TrapConfig(10.0, 0.0)))
    for J in [0.0, 0.1, 0.7]:
        assert witness_value(src, 1.0, J).value == pytest.approx(abs(chsh_b(src, J)), abs=1e-12)
    assert optimize_witness(src, 1.0).value == pytest.approx(abs(optimize_chsh(src).b_value), abs=1e-9)


def test_witness_branches_and_values():
    src = lab_wigner(ground_state(TrapConfig(10.0, 0.0)))
    hi = optimize_witness(src, 0.95)
    lo = witness_value(src, 0.4, 0.1)
    assert hi.branch == "eta-above-half" and lo.branch == "eta-at-most-half"
    assert hi.violated
    assert not optimize_witness(src, 0.85).violated


def test_lossy_chsh_degrades():
    src = lab_wigner(ground_state(TrapConfig(10.0, 0.0)))
    vals = [lossy_chsh(src, e).b_value for e in (1.0, 0.97, 0.9)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 2


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_property_lossy_parity_bound(eta, x1, p1, x2, p2):
    src = _SRC.setdefault("g10", lab_wigner(ground_state(TrapConfig(10.0, 0.0))))
    val = lossy_wigner(src, LossChannel(eta))(x1, p1, x2, p2)
    assert math.pi**2 * abs(val) <= 1 + 1e-6


_SRC: dict = {}
