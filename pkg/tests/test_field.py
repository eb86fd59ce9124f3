import math

import numpy as np
import pytest

from nlslab.field import (AnalyticProfile, Component, SampledField, UnderResolvedError,
                          h1_seminorm_sq, integrate, l2_norm_sq, l6_norm_6, trace_at_zero)

GAUSS = AnalyticProfile(real=[Component("gaussian")])


def test_component_derivatives_match_finite_differences():
    y = np.linspace(-2.7, 3.3, 37)
    for c in (Component("gaussian", 1.3, 0.7, 0.2), Component("algebraic", scale=2.0),
              Component("sechpow", 3 ** 0.25, 0.5, power=0.5), Component("m", scale=0.5)):
        h = 1e-6
        fd = (c(y + h) - c(y - h)) / (2 * h)
        mask = np.min(np.abs(y[:, None] - np.array(c.knots)[None, :]), axis=1) > 1e-3 \
            if c.knots else np.ones_like(y, bool)
        assert np.allclose(c(y, 1)[mask], fd[mask], atol=1e-7)


def test_m_profile_values():
    m = Component("m")
    assert float(m(np.array(0.5))) == pytest.approx(0.5 / math.sqrt(2))
    assert float(m(np.array(1.0))) == pytest.approx(1 / math.sqrt(2))
    assert float(m(np.array(1.0 - 1e-15))) == pytest.approx(1 / math.sqrt(2))
    assert float(m(np.array(-0.3))) == 0.0


def test_scaled_profile_formula():
    p = AnalyticProfile(real=[Component("gaussian")], imag=[Component("algebraic")], mu=1.5, rho=0.3)
    x = np.linspace(-2, 2, 11)
    expect = 1.5 / math.sqrt(0.3) * (np.exp(-(x / 0.3) ** 2) + 1j / np.sqrt(1 + (x / 0.3) ** 2))
    assert np.allclose(p(x), expect, rtol=1e-14)
    q = p.scaled(2.0, 0.5)
    assert q.mu == 3.0 and q.rho == pytest.approx(0.15)


def test_halfline_profile_vanishes_left():
    p = AnalyticProfile(real=[Component("gaussian")], domain="halfline")
    assert trace_at_zero(p) == pytest.approx(1.0)


@pytest.mark.parametrize("rho", [1.0, 1e-3, 1e-10])
def test_norms_of_gaussian(rho):
    p = GAUSS.scaled(1.0, rho)
    assert l2_norm_sq(p).value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    assert h1_seminorm_sq(p).value == pytest.approx(math.sqrt(math.pi / 2) / rho ** 2, rel=1e-12)
    assert l6_norm_6(p).value == pytest.approx(math.sqrt(math.pi / 6) / rho ** 2, rel=1e-12)


def test_tail_region():
    p = AnalyticProfile(real=[Component("algebraic")])
    r = l2_norm_sq(p, region="tail_ge_1")
    assert r.value == pytest.approx(2 * (math.pi / 2 - math.pi / 4), rel=1e-12)


def test_sampled_matches_analytic():
    f = SampledField.from_profile(GAUSS, 1024, 12.0)
    assert l2_norm_sq(f).value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
    assert h1_seminorm_sq(f).value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)
    h = AnalyticProfile(real=[Component("gaussian")], domain="halfline")
    g = SampledField.from_profile(h, 4001, 10.0)
    assert l2_norm_sq(g).value == pytest.approx(0.5 * math.sqrt(math.pi / 2), rel=1e-6)


def test_weighted_integral_with_kinks():
    r = integrate(GAUSS, lambda x, v, vx: np.abs(x) * np.abs(v) ** 2, weight_knots=(0.0,))
    assert r.value == pytest.approx(0.5, rel=1e-12)


def test_under_resolved_refused():
    with pytest.raises(UnderResolvedError):
        SampledField.from_profile(GAUSS.scaled(1.0, 1e-3), 256, 10.0)


def test_line_grid_must_be_power_of_two():
    with pytest.raises(ValueError):
        SampledField(-1.0, 1.0, np.zeros(100, complex), "line")


def test_spectral_derivative():
    f = SampledField.from_profile(GAUSS, 512, 10.0)
    assert np.allclose(f.dx(), GAUSS.deriv(f.x), atol=1e-10)


def test_interpolation():
    f = SampledField.from_profile(GAUSS, 512, 10.0)
    xq = np.array([0.01234, 1.5, -2.2])
    v, vx = f.interpolate(xq)
    assert np.allclose(v, GAUSS(xq), atol=1e-6)


@pytest.mark.parametrize("domain, n", [("line", 64), ("halfline", 65)])
def test_roundtrips(tmp_path, domain, n):
    prof = AnalyticProfile(real=[Component("gaussian")], imag=[Component("algebraic")], domain=domain)
    f = SampledField.from_profile(prof, n, 6.0, check=False)
    g = SampledField.from_bytes(f.to_bytes())
    assert np.array_equal(g.values, f.values) and g.x_min == f.x_min and g.domain == domain
    f.to_csv(tmp_path / "f.csv")
    h = SampledField.from_csv(tmp_path / "f.csv", domain=domain)
    assert np.array_equal(h.values, f.values)
    f.save(tmp_path / "f.bin")
    assert np.array_equal(SampledField.load(tmp_path / "f.bin").values, f.values)
