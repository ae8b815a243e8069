import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from trapchsh.eigenstates import (
    ComEigenstate,
    MatchingError,
    build_relative_state,
    eval_com,
    hermite_functions,
    relative_states,
)
from trapchsh.spectrum import TrapConfig


def overlap(a, b, lo=-25, hi=25):
    f = lambda r: a(r) * b(r)
    return quad(f, lo, 0, limit=200, epsabs=1e-13)[0] + quad(f, 0, hi, limit=200, epsabs=1e-13)[0]


@pytest.mark.parametrize("g,d", [(-1.5, 0.0), (1.0, 0.0), (10.0, 0.0), (1.0, 2.0), (-1.5, 3.4), (3.0, -1.2)])
def test_normalised_and_orthogonal(g, d):
    states = relative_states(TrapConfig(g, d), 3)
    for i, a in enumerate(states):
        for j, b in enumerate(states[: i + 1]):
            assert overlap(a, b) == pytest.approx(float(i == j), abs=1e-9)


@pytest.mark.parametrize("g,d", [(-1.5, 0.0), (10.0, 0.0), (1.0, 2.0), (-0.7, 1.1)])
def test_slope_jump_is_2g(g, d):
    st_ = relative_states(TrapConfig(g, d), 1)[0]
    h = 1e-6
    jump = st_.derivative(h) - st_.derivative(-h)
    assert jump == pytest.approx(2 * g * st_(0.0), rel=1e-5, abs=1e-9)
    assert st_.slope_jump == pytest.approx(2 * g * st_.value_at_contact, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("d", [0.0, 1.5, -3.0])
def test_noninteracting_ground_is_gaussian(d):
    st_ = relative_states(TrapConfig(0.0, d), 1)[0]
    r = np.linspace(-8, 8, 81) + d
    ref = (2 * math.pi) ** -0.25 * np.exp(-((r - d) ** 2) / 4)
    assert np.allclose(st_(r), ref, atol=1e-12)


def test_schrodinger_residual():
    st_ = relative_states(TrapConfig(2.0, 0.8), 2)[1]
    r = np.concatenate([np.linspace(-5, -0.3, 30), np.linspace(0.3, 6, 30)])
    h = 1e-3
    lap = (st_(r + h) - 2 * st_(r) + st_(r - h)) / h**2
    res = -lap + (r - 0.8) ** 2 / 4 * st_(r) - st_.energy * st_(r)
    assert np.max(np.abs(res)) < 1e-5


def test_fast_matches_direct():
    st_ = relative_states(TrapConfig(10.0, 0.3), 3)[2]
    r = np.linspace(-9, 9, 1001)
    assert np.max(np.abs(st_.fast(r) - st_(r))) < 1e-10


def test_node_family_at_d0():
    st_ = build_relative_state(TrapConfig(5.0, 0.0), 1.0)
    assert st_.family == "node"
    assert abs(st_(0.0)) < 1e-14
    assert st_.slope_jump == pytest.approx(0.0, abs=1e-12)


def test_node_family_off_centre():
    # D_2(x) = x^2 - 1 vanishes at x = +-1, so nu = 2 has a contact node at d = 1.
    st_ = build_relative_state(TrapConfig(1.0, 1.0), 2.0)
    assert st_.family == "node"
    assert overlap(st_, st_) == pytest.approx(1.0, abs=1e-10)


def test_non_eigenvalue_rejected():
    with pytest.raises(MatchingError):
        build_relative_state(TrapConfig(1.0, 0.0), 0.3)
    with pytest.raises(MatchingError):
        build_relative_state(TrapConfig(1.0, 0.5), 1.0, "node")


def test_com_functions():
    X = np.linspace(-2, 2, 9)
    assert np.allclose(eval_com(0, X), (2 / math.pi) ** 0.25 * np.exp(-X * X))
    for m in range(4):
        for n in range(4):
            val = quad(lambda x: eval_com(m, x) * eval_com(n, x), -8, 8, epsabs=1e-13)[0]
            assert val == pytest.approx(float(m == n), abs=1e-12)
    assert ComEigenstate(3).energy == 3.5
    with pytest.raises(ValueError):
        ComEigenstate(-1)


def test_hermite_functions_match_closed_form():
    from scipy.special import eval_hermite

    q = np.linspace(-4, 4, 17)
    h = hermite_functions(6, q)
    for n in range(7):
        ref = eval_hermite(n, q) * np.exp(-q * q / 2) / math.sqrt(2**n * math.factorial(n) * math.sqrt(math.pi))
        assert np.allclose(h[n], ref, atol=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2.0, 15.0), st.floats(0.0, 4.0))
def test_property_ground_state_normalised(g, d):
    st_ = relative_states(TrapConfig(g, d), 1)[0]
    assert overlap(st_, st_) == pytest.approx(1.0, abs=1e-9)
    assert st_(d) > 0 or abs(st_(d)) < 1e-10


def test_large_separation_ground_state():
    # The contact sits deep in the tail: the trap ground state with a root
    # near 1.6e-31, resolved only because nu is polished in relative terms.
    cfg = TrapConfig(10.0, 12.0)
    state = relative_states(cfg, 1)[0]
    assert state.family == "interacting"
    assert abs(state.nu) < 1e-29
    r = np.array([6.0, 11.0, 12.0, 14.0])
    gauss = (2 * math.pi) ** -0.25 * np.exp(-((r - 12.0) ** 2) / 4)
    np.testing.assert_allclose(state(r), gauss, rtol=1e-9)
    assert abs(state(0.0)) < 1e-12


def test_excited_state_at_large_separation():
    # Reference root from mpmath at 60 digits.
    state = relative_states(TrapConfig(10.0, 8.0), 2)[1]
    assert state.nu == pytest.approx(1.0000000000017827, rel=1e-15, abs=0)
    assert overlap(state, state, -20, 30) == pytest.approx(1.0, abs=1e-9)


def test_ill_conditioned_excited_state_raises():
    with pytest.raises(MatchingError, match="ill-conditioned"):
        relative_states(TrapConfig(10.0, 12.0), 2)
