import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from trapchsh.density import ground_state
from trapchsh.nonlocality import (
    chsh_b,
    chsh_sweep,
    optimize_chsh,
    parity_correlation,
    thermal_source,
    threshold_crossing,
)
from trapchsh.spectrum import TrapConfig
from trapchsh.wigner import com_wigner, lab_wigner


def b_closed_form(J):
    return 1 + 2 * np.exp(-2 * J) - np.exp(-4 * J)


@pytest.mark.parametrize("d", [0.0, 1.5, 4.0])
@pytest.mark.parametrize("phase", [0.0, math.pi / 2, 0.7])
def test_noninteracting_closed_form(d, phase):
    src = lab_wigner(ground_state(TrapConfig(0.0, d)))
    J = np.linspace(0, 3, 31)
    assert np.allclose(chsh_b(src, J, phase), b_closed_form(J), atol=1e-10)


def test_noninteracting_optimum():
    res = optimize_chsh(lab_wigner(ground_state(TrapConfig(0.0, 0.5))))
    assert res.b_value == pytest.approx(2.0, abs=1e-3)
    assert res.j_star == pytest.approx(0.0, abs=1e-3)
    assert not res.violated


def _oracle_E(state, alpha, beta):
    """pi^2 W_cm W_rel with the relative factor from adaptive quadrature (d = 0)."""
    s = math.sqrt(2)
    x1, p1, x2, p2 = s * alpha.real, s * alpha.imag, s * beta.real, s * beta.imag
    X, P, r, p = 0.5 * (x1 + x2), p1 + p2, x1 - x2, 0.5 * (p1 - p2)
    f = lambda y: state(r + y) * state(r - y) * math.cos(2 * p * y)
    edges = sorted({0.0, abs(r)}) + [30.0]
    wr = (2 / math.pi) * sum(quad(f, a, b, limit=400, epsabs=1e-14)[0] for a, b in zip(edges[:-1], edges[1:]))
    return math.pi**2 * com_wigner(0, X, P) * wr


def test_g10_violation_against_oracle():
    gs = ground_state(TrapConfig(10.0, 0.0))
    src = lab_wigner(gs)
    res = optimize_chsh(src)
    assert res.violated
    assert res.b_value == pytest.approx(2.15679, abs=2e-5)
    assert res.j_star == pytest.approx(0.1006, abs=2e-3)
    a = math.sqrt(res.j_star) * 1j
    ref = (
        _oracle_E(gs.rel, 0j, 0j) + _oracle_E(gs.rel, a, 0j) + _oracle_E(gs.rel, 0j, -a) - _oracle_E(gs.rel, a, -a)
    )
    assert res.b_value == pytest.approx(ref, abs=1e-8)


def test_position_axis_is_weaker():
    src = lab_wigner(ground_state(TrapConfig(10.0, 0.0)))
    b0 = optimize_chsh(src, phase=0.0).b_value
    assert b0 == pytest.approx(2.0158, abs=5e-4)
    assert b0 < optimize_chsh(src).b_value


def test_temperature_reduces_violation():
    cfg = TrapConfig(1.0, 0.0)
    b = [optimize_chsh(thermal_source(cfg, T)).b_value for T in (0.0, 0.1, 0.2)]
    assert b == pytest.approx([2.0523, 2.0272, 1.728], abs=2e-3)
    assert b[0] > b[1] > b[2]


def test_negative_j_rejected():
    src = lab_wigner(ground_state(TrapConfig(1.0, 0.0)))
    with pytest.raises(ValueError):
        chsh_b(src, -0.1)


def test_threshold_crossing():
    assert threshold_crossing([0, 1, 2], [2.2, 2.1, 1.9]) == pytest.approx(1.5)
    assert math.isnan(threshold_crossing([0, 1], [1.0, 1.5]))
    assert threshold_crossing([0, 1], [2.5, 2.1]) == 1.0


def test_sweep_threshold():
    table = chsh_sweep([10.0], [0.0, 0.01, 0.02, 0.03, 0.05], [0.0])
    dc = table.d_c[(10.0, 0.0)]
    assert 0.0 < dc < 0.05
    assert dc == pytest.approx(0.0201, abs=3e-3)
    assert table.b_array().shape == (1, 5, 1)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_property_correlation_bounded(a1, a2, b1, b2):
    src = _SRC.setdefault("g10", lab_wigner(ground_state(TrapConfig(10.0, 0.0))))
    E = parity_correlation(src, complex(a1, a2), complex(b1, b2))
    assert abs(E) <= 1 + 1e-6


_SRC: dict = {}
