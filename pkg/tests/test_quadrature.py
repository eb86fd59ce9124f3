import math

import numpy as np
import pytest

from nlslab.quadrature import adaptive, gauss_legendre_panels, gk15, integrate


def test_gk15_is_exact_on_polynomials():
    val, err = gk15(lambda x: 7 * x ** 6 - 3 * x ** 2 + 1, -1.0, 2.0)
    exact = (2 ** 7 - (-1) ** 7) - (2 ** 3 - (-1) ** 3) + 3
    assert abs(val - exact) < 1e-12 * exact


@pytest.mark.parametrize("f, a, b, exact", [
    (np.exp, 0.0, 1.0, math.e - 1),
    (np.sin, 0.0, math.pi, 2.0),
    (lambda x: 1 / (1 + x * x), -1.0, 1.0, math.pi / 2),
])
def test_adaptive_smooth(f, a, b, exact):
    r = adaptive(f, a, b, tol=1e-13)
    assert r.converged
    assert abs(r.value - exact) <= 1e-13 * abs(exact)


def test_infinite_ranges():
    r = integrate(lambda x: np.exp(-x * x), -math.inf, math.inf)
    assert r.value == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    r = integrate(lambda x: 1 / (1 + x * x) ** 1.5, 0.0, math.inf)
    assert r.value == pytest.approx(1.0, rel=1e-12)


def test_breakpoints_handle_kinks():
    r = integrate(lambda x: np.abs(x - 0.3), -1.0, 1.0, breakpoints=[0.3])
    assert r.value == pytest.approx(0.5 * 1.3 ** 2 + 0.5 * 0.7 ** 2, rel=1e-13)


def test_cancelling_integrand_terminates():
    # odd integrand: the answer is zero and the loop must stop at the roundoff floor
    r = integrate(lambda x: x * np.exp(-x * x), -5.0, 5.0, tol=1e-12)
    assert abs(r.value) < 1e-14


def test_gauss_legendre_panels_weights_sum_to_length():
    x, w = gauss_legendre_panels(0.0, 1.7, 0.1)
    assert np.all((x > 0) & (x < 1.7))
    assert w.sum() == pytest.approx(1.7, rel=1e-14)
    assert np.dot(w, x ** 5) == pytest.approx(1.7 ** 6 / 6, rel=1e-13)
