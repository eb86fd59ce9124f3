import math

import numpy as np
import pytest

from nlslab.weights import HalflineWeight, LineWeight, make_weight

KINK = 1 + 1 / math.sqrt(3)


@pytest.fixture(params=["rescaled", "literal"])
def line(request):
    return LineWeight(request.param)


def test_identity_on_unit_interval(line):
    x = np.linspace(-1, 1, 2001)
    assert np.array_equal(line.phi(x), x)
    assert np.array_equal(line.phi(x, 1), np.ones_like(x))


def test_odd_symmetry(line):
    x = np.linspace(0, 2.5, 5001)
    for k in range(4):
        sign = -1 if k % 2 == 0 else 1
        assert np.allclose(line.phi(-x, k), sign * line.phi(x, k), atol=1e-12)


def test_branch_values_against_closed_forms():
    w = LineWeight()
    x = np.linspace(1.01, KINK, 50)
    assert np.allclose(w.phi(x), x - (x - 1) ** 3, atol=1e-15)
    x = np.linspace(KINK + 0.01, 1.6, 50)
    assert np.allclose(w.phi(x), -x + 2 * KINK - (-x + 1 + 2 / math.sqrt(3)) ** 3, atol=1e-14)


def test_nonincreasing_past_kink(line):
    x = np.linspace(KINK, 2.0, 4001)
    assert np.max(line.phi(x, 1)) <= 1e-12


def test_rescaled_support_and_smooth_edge():
    w = LineWeight("rescaled")
    x = np.linspace(2.0, 5.0, 101)
    for k in range(4):
        assert np.all(w.phi(x, k) == 0)
        assert abs(float(w.phi(np.array(1.9999), k))) < 1e-12


def test_literal_reading_jumps_at_edge():
    jumps = {(r["knot"], r["order"]): r["jump"] for r in LineWeight("literal").continuity_report()}
    assert abs(jumps[(2.0, 0)]) > 1e-3


def test_continuity_report_knot_one_is_c2():
    rows = LineWeight().continuity_report()
    at1 = {r["order"]: r["jump"] for r in rows if r["knot"] == 1.0}
    assert abs(at1[0]) < 1e-15 and abs(at1[1]) < 1e-15 and abs(at1[2]) < 1e-15
    assert at1[3] == pytest.approx(-6.0)


def test_psi_is_antiderivative(line):
    x = np.linspace(-2.5, 2.5, 300)     # avoids the knots exactly
    h = 1e-5
    fd = (line.psi(x + h) - line.psi(x - h)) / (2 * h)
    assert np.allclose(fd, line.phi(x), atol=1e-8)
    assert np.allclose(line.psi(np.array([3.0, -3.0])), line.psi_plateau, rtol=1e-12)
    assert float(line.psi(np.array(0.5))) == pytest.approx(0.125, rel=1e-13)


def test_sup_norms_match_dense_sampling(line):
    n = line.sup_norms()
    x = np.linspace(-2, 2, 400001)
    assert n.phi2 >= np.max(np.abs(line.phi(x, 2))) * (1 - 1e-9)
    assert n.phi3 >= np.max(np.abs(line.phi(x, 3))) * (1 - 1e-9)
    assert n.phi3 <= np.max(np.abs(line.phi(x, 3))) * 1.01


def test_halfline_closed_forms():
    w = HalflineWeight()
    x = np.linspace(0, 30, 3001)
    assert np.allclose(w.phi(x), (x * x + x) * np.exp(-x), atol=1e-15)
    assert np.allclose(w.psi(x), 3 - (x * x + 3 * x + 3) * np.exp(-x), atol=1e-14)
    assert float(w.phi(np.array(0.0), 1)) == 1.0
    assert float(w.phi(np.array(0.0), 2)) == 0.0
    assert w.sup_norms().phi3 == pytest.approx(3.0, abs=1e-12)


def test_make_weight():
    assert isinstance(make_weight("line"), LineWeight)
    assert isinstance(make_weight("halfline"), HalflineWeight)
    with pytest.raises(ValueError):
        make_weight("torus")
    with pytest.raises(ValueError):
        LineWeight("other")
