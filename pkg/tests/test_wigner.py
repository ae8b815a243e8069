import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from trapchsh.density import ground_state
from trapchsh.eigenstates import ComEigenstate, hermite_functions, relative_states
from trapchsh.spectrum import TrapConfig
from trapchsh.wigner import (
    com_wigner,
    com_wigner_grid,
    default_relative_axes,
    fock_wigner,
    lab_to_modes,
    lab_wigner,
    negativity_volume,
    relative_wigner_grid,
    relative_wigner_points,
    thermal_weights,
    wigner_1d,
)


def vacuum_lab(x1, p1, x2, p2):
    return np.exp(-(x1**2 + p1**2 + x2**2 + p2**2)) / math.pi**2


def quad_wigner(state, r, p):
    """Independent oracle: adaptive quadrature with breakpoints at the kinks."""
    f = lambda y: state(r + y) * state(r - y) * math.cos(2 * p * y)
    pts = sorted({0.0, abs(r)})
    edges = pts + [30.0]
    return (2 / math.pi) * sum(quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(edges[:-1], edges[1:]))


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_fock_wigner_laguerre_oracle(n):
    q = np.arange(-8, 8.0001, 0.05)
    p = np.linspace(-3, 3, 13)
    grid = wigner_1d(lambda x: hermite_functions(n, x)[n], q, p)
    ref = fock_wigner(n, q[:, None], p[None, :])
    assert np.max(np.abs(grid.values - ref)) < 1e-10
    assert fock_wigner(n, 0.0, 0.0) == pytest.approx((-1) ** n / math.pi)


def test_com_wigner_normalised_and_marginal():
    g = com_wigner_grid({2: 1.0})
    assert g.integral() == pytest.approx(1.0, abs=1e-8)
    X = g.q_axis
    marg = g.values.sum(axis=1) * (g.p_axis[1] - g.p_axis[0])
    assert np.allclose(marg, ComEigenstate(2)(X) ** 2, atol=1e-8)


@pytest.mark.parametrize("d", [0.0, 1.3])
def test_relative_vacuum_closed_form(d):
    st_ = relative_states(TrapConfig(0.0, d), 1)[0]
    r, p = default_relative_axes(st_.cfg)
    grid = relative_wigner_grid(st_, None, r, p)
    ref = np.exp(-((r[:, None] - d) ** 2) / 2 - 2 * p[None, :] ** 2) / math.pi
    assert np.max(np.abs(grid.values - ref)) < 1e-8


@pytest.mark.parametrize("g,d", [(10.0, 0.0), (-1.5, 0.0), (1.0, 2.0)])
def test_points_match_quad_oracle(g, d):
    st_ = relative_states(TrapConfig(g, d), 1)[0]
    for r, p in [(0.0, 0.0), (0.3, 0.7), (-1.1, 1.9), (d, 0.2), (2.5, -3.0)]:
        assert relative_wigner_points(st_, r, p) == pytest.approx(quad_wigner(st_, r, p), abs=1e-9)


def test_grid_matches_points_with_kink():
    st_ = relative_states(TrapConfig(10.0, 0.0), 2)[0]
    r, p = default_relative_axes(st_.cfg)
    grid = relative_wigner_grid(st_, None, r, p)
    idx = [(len(r) // 2, len(p) // 2), (len(r) // 2 + 7, len(p) // 2 - 11), (len(r) // 2 - 30, len(p) // 2 + 20)]
    for i, j in idx:
        pt = relative_wigner_points(st_, r[i], p[j])
        assert grid.values[i, j] == pytest.approx(pt, abs=2e-6)


def test_relative_position_marginal():
    st_ = relative_states(TrapConfig(10.0, 0.0), 1)[0]
    r, p = default_relative_axes(st_.cfg)
    grid = relative_wigner_grid(st_, None, r, p)
    wp = np.full(p.size, p[1] - p[0])
    wp[[0, -1]] *= 0.5
    marg = grid.values @ wp
    P = p[-1]
    # Kinks at y = +-r give 1/p^2 momentum tails, so compare with the
    # band-limited marginal (2/pi) int_0 psi(r+y) psi(r-y) sin(2Py)/y dy.
    for x in [0.0, 0.5, 1.0, 2.5]:
        i = int(np.argmin(np.abs(r - x)))
        f = lambda y: st_(r[i] + y) * st_(r[i] - y) * (2 * P if y == 0 else math.sin(2 * P * y) / y)
        edges = sorted({0.0, abs(r[i])}) + [20.0]
        ref = (2 / math.pi) * sum(quad(f, a, b, limit=800, epsabs=1e-12)[0] for a, b in zip(edges[:-1], edges[1:]))
        # Residual is the O(h^4) error of the y-trapezoid on the 0.05 lattice.
        assert marg[i] == pytest.approx(ref, abs=1e-5)
    assert grid.integral() == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("d", [0.0, 0.8, 3.0])
def test_noninteracting_lab_is_vacuum_product(d, rng):
    src = lab_wigner(ground_state(TrapConfig(0.0, d)))
    pts = rng.normal(0, 1.0, size=(4, 10))
    assert np.allclose(src(*pts), vacuum_lab(*pts), atol=1e-8)


def test_lab_to_modes_symplectic():
    J = np.array(
        [np.array(lab_to_modes(*e)) for e in np.eye(4)]
    ).T  # columns: images of x1, p1, x2, p2
    assert np.linalg.det(J) == pytest.approx(1.0)
    X, P, r, p = lab_to_modes(0.0, 0.0, 0.0, 0.0, 2.0)
    assert r == 2.0


def test_quadrature_convention():
    src = lab_wigner(ground_state(TrapConfig(0.0, 0.0)))
    assert src.quadrature(0.0, 0.0) == pytest.approx(4 / math.pi**2)


def test_thermal_weights():
    cfg = TrapConfig(1.0, 0.0)
    ens0 = thermal_weights(cfg, 0.0)
    assert len(ens0.terms) == 1
    ens = thermal_weights(cfg, 0.5)
    w = np.array([t[3] for t in ens.terms])
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert min(w) * ens.partition_value >= 1e-8 * 0.999
    ref = np.exp(-(np.array([t[0] + t[2] for t in ens.terms]) - ens.terms[0][2]) / 0.5)
    assert np.allclose(w, ref / ref.sum())
    with pytest.raises(ValueError):
        thermal_weights(cfg, -1.0)


def test_thermal_deep_bound_state_no_overflow():
    ens = thermal_weights(TrapConfig(-3.0, 0.0), 0.05)
    assert np.isfinite(ens.partition_value)


def test_negativity_values():
    src10 = lab_wigner(thermal_weights(TrapConfig(10.0, 0.0), 0.0))
    assert negativity_volume(src10, "relative") == pytest.approx(0.24716, abs=2e-4)
    assert negativity_volume(src10, "com") == pytest.approx(0.0, abs=1e-8)
    src0 = lab_wigner(thermal_weights(TrapConfig(0.0, 0.5), 0.0))
    assert negativity_volume(src0, "relative") == pytest.approx(0.0, abs=1e-4)


def test_total_negativity_product_rule_and_mc():
    src = lab_wigner(ground_state(TrapConfig(3.0, 0.0)))
    nr = negativity_volume(src, "relative")
    tot = negativity_volume(src, "total-T0")
    assert tot == pytest.approx(nr, abs=1e-10)  # CM vacuum has no negativity
    mc, err = negativity_volume(src, "total-montecarlo", samples=20000, return_error=True)
    assert mc == pytest.approx(tot, abs=1e-8)
    assert err < 1e-8


def test_thermal_montecarlo_seeded():
    src = lab_wigner(thermal_weights(TrapConfig(10.0, 0.0), 0.5))
    a = negativity_volume(src, "total-montecarlo", samples=100000, seed=3, return_error=True)
    b = negativity_volume(src, "total-montecarlo", samples=100000, seed=3, return_error=True)
    assert a == b
    assert 0 <= a[0] < negativity_volume(lab_wigner(thermal_weights(TrapConfig(10.0, 0.0), 0.0)), "relative")
    with pytest.raises(ValueError):
        negativity_volume(src, "total-T0")


@settings(max_examples=30, deadline=None)
@given(
    st.sampled_from([(10.0, 0.0), (1.0, 0.5), (-1.5, 0.0), (3.0, 2.0)]),
    st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
)
def test_property_parity_bound(gd, x1, p1, x2, p2):
    src = _SOURCES.setdefault(gd, lab_wigner(ground_state(TrapConfig(*gd))))
    assert math.pi**2 * abs(src(x1, p1, x2, p2)) <= 1 + 1e-6


_SOURCES: dict = {}
