import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapchsh.numerics import (
    Interval,
    bracket_roots,
    composite_gauss_legendre,
    gauss_hermite_rule,
    gauss_legendre_rule,
    integrate,
    maximize_scalar,
    parallel_map,
    refine_root,
    trapezoid_rule,
)


def _square(x):
    return x * x


def test_interval_validation():
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        Interval(0.0, math.inf)
    assert 0.5 in Interval(0, 1)


def test_trapezoid_gaussian():
    rule = trapezoid_rule(Interval(-10, 10), 0.1)
    assert integrate(lambda x: np.exp(-x * x), None, rule) == pytest.approx(math.sqrt(math.pi), rel=1e-13)


def test_gauss_legendre_polynomial_exact():
    rule = gauss_legendre_rule(Interval(-1, 2), 8)
    assert integrate(lambda x: x**15, None, rule) == pytest.approx((2**16 - 1) / 16, rel=1e-13)


def test_composite_rule_with_kink():
    rule = composite_gauss_legendre([-3.0, 0.0, 3.0], 16, max_panel=0.5)
    f = lambda x: np.exp(-np.abs(x))
    assert integrate(f, None, rule) == pytest.approx(2 * (1 - math.exp(-3)), rel=1e-14)


def test_gauss_hermite_normal_moments():
    rule = gauss_hermite_rule(20, center=1.0, scale=2.0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert integrate(_square, None, rule) == pytest.approx(1 + 4, rel=1e-12)


def test_bracket_and_refine():
    br = bracket_roots(np.sin, Interval(0.5, 10), 200, vectorized=True)
    roots = [refine_root(np.sin, b) for b in br]
    assert np.allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-10)


def test_bracket_skips_poles():
    br = bracket_roots(np.tan, Interval(0.1, 3.0), 100, vectorized=True)
    assert br == []


def test_refine_requires_sign_change():
    with pytest.raises(ValueError):
        refine_root(_square, Interval(1, 2))


def test_maximize_scalar():
    x, f = maximize_scalar(lambda x: -(x - 0.3) ** 2 + 1, Interval(0, 2), 1e-10)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert f == pytest.approx(1.0, abs=1e-12)


def test_maximize_boundary():
    x, f = maximize_scalar(lambda x: -x, Interval(0, 5), 1e-9)
    assert x == pytest.approx(0.0, abs=1e-8)


def test_parallel_map_order_and_exceptions():
    assert parallel_map(_square, [1, 2, 3], threads=2) == [1, 4, 9]
    out = parallel_map(math.sqrt, [4.0, -1.0], threads=1, return_exceptions=True)
    assert out[0] == 2.0 and isinstance(out[1], ValueError)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 3))
def test_property_maximizer_not_below_grid(c, w):
    f = lambda x: np.cos(w * (x - c))
    dom = Interval(-6, 6)
    x, fx = maximize_scalar(f, dom, 1e-9, 64, vectorized=True)
    assert fx >= np.max(f(np.linspace(-6, 6, 64))) - 1e-15
    assert x in dom
