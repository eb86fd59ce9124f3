import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from nlslab.field import AnalyticProfile, Component
from nlslab.functionals import (alpha_weighted_mass, assemble, delta_halfline, delta_line, energy,
                                energy_parts, lambda_virial, line_bound_constant, quadratic_roots,
                                roots_from, tau_crit)
from nlslab.oscillator import OscillatingCoefficient
from nlslab.weights import HalflineWeight, LineWeight

UNIT = OscillatingCoefficient("constant", 1.0, 1.0)


def test_energy_of_soliton_is_zero():
    q = AnalyticProfile(real=[Component("sechpow", 3 ** 0.25, 0.5, power=0.5)])
    e = energy_parts(q, UNIT, 0.0)
    assert abs(e.value) <= 1e-12 * e.gradient
    assert e.gradient == pytest.approx(e.source, rel=1e-12)


def test_energy_halfline_boundary_term():
    p = AnalyticProfile(real=[Component("gaussian")], domain="halfline", mu=2.0)
    g = 4 * math.sqrt(math.pi / 2) / 2
    assert energy(p, UNIT, 0.0, "halfline", 2.0) == pytest.approx(g - 0.5 * 2 ** 4, rel=1e-12)


def test_energy_rejects_wrong_domain():
    p = AnalyticProfile(real=[Component("gaussian")])
    with pytest.raises(ValueError):
        energy(p, UNIT, 0.0, "halfline")


def test_lambda_sign_and_phase():
    # dense trapezoid reference; a purely real datum carries no virial momentum
    w = LineWeight()
    p = AnalyticProfile(real=[Component("gaussian", center=0.3)], imag=[Component("gaussian", 0.5, center=-0.2)])
    lam = lambda_virial(p, w).value
    x = np.linspace(-3, 3, 200001)
    u = p(x)
    ux = p.deriv(x)
    ref = -2 * trapezoid(w.phi(x) * np.imag(u * np.conj(ux)), x)
    assert lam == pytest.approx(ref, rel=1e-7)
    real_only = AnalyticProfile(real=[Component("gaussian")])
    assert lambda_virial(real_only, w).value == 0.0


def test_alpha_small_for_concentrated_data():
    w = LineWeight()
    p = AnalyticProfile(real=[Component("gaussian")], rho=1e-3)
    # Psi = x^2/2 near 0: alpha = (rho^2/2) int y^2 e^{-2y^2} dy
    assert alpha_weighted_mass(p, w).value == pytest.approx(1e-6 / 2 * math.sqrt(math.pi / 2) / 4, rel=1e-10)


def test_bound_and_deltas():
    co = OscillatingCoefficient("cos2", 100.0, 73.55418773631645)
    b = line_bound_constant(co, 3 * math.pi / 400, math.pi / 400)
    assert 0.5 * b == pytest.approx(0.0357011, abs=5e-8)
    n = LineWeight().sup_norms()
    assert delta_line(LineWeight(), co, 3 * math.pi / 400, math.pi / 400) == pytest.approx(
        0.5 * b * (n.phi3 + max(math.sqrt(3), n.phi2 / 2) ** 2))
    assert delta_halfline(HalflineWeight(), mass=2.0) == 3.0
    with pytest.raises(ValueError):
        line_bound_constant(OscillatingCoefficient("constant", 1.0, 0.0), 0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_quadratic_roots_satisfy_polynomial(a, b, c):
    for r in quadratic_roots(a, b, c):
        scale = abs(a) + abs(b * r) + abs(c * r * r)
        assert abs(a + b * r + c * r * r) <= 1e-10 * max(scale, 1.0)


def test_roots_are_stable_for_tiny_alpha():
    tm, tp, t0, disc = roots_from(1e-20, -1.0, 1e6)
    assert tm == pytest.approx(1e-20, rel=1e-12)
    assert tp == pytest.approx(1e-6, rel=1e-10)
    assert t0 == pytest.approx(1e-20)


@pytest.mark.parametrize("alpha, lam, beta, expect", [
    (1.0, -3.0, 2.0, 0.5),          # roots 0.5, 1
    (1.0, 1.0, 2.0, None),
    (1.0, -1.0, 0.0, 1.0),
    (1.0, 0.0, -1.0, 1.0),
    (-1.0, 0.0, -1.0, 0.0),
])
def test_tau_crit(alpha, lam, beta, expect):
    t = tau_crit(alpha, lam, beta)
    if expect is None:
        assert t is None
    else:
        assert t == pytest.approx(expect)
        assert alpha + lam * (t + 1e-9) + beta * (t + 1e-9) ** 2 < 0 or t == 0.0


def test_assemble_is_consistent(coeff, window):
    p = AnalyticProfile(real=[Component("gaussian")], imag=[Component("gaussian", 0.5, 0.5)], mu=0.8, rho=0.3)
    bp = assemble(p, LineWeight(), coeff, *window)
    assert bp.beta == pytest.approx(2 * bp.energy0 + bp.delta)
    assert bp.p(0.0) == pytest.approx(bp.alpha)
    d = bp.to_dict()
    assert "lambda" in d and "lambda_" not in d
    assert '"lambda"' in bp.to_json()
