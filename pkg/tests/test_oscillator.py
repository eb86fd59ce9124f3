import math

import numpy as np
import pytest

from nlslab.oscillator import OscillatingCoefficient


def test_cos2_closed_form(coeff):
    t = np.linspace(0, 0.1, 101)
    assert np.allclose(coeff.eval(t), coeff.amplitude * np.cos(100 * t) ** 2, rtol=0, atol=1e-12)
    assert np.allclose(coeff.eval_prime(t), -100 * coeff.amplitude * np.sin(200 * t), atol=1e-9)


def test_prime_matches_finite_difference():
    co = OscillatingCoefficient("cos2", 3.0, 2.0)
    t, h = 0.37, 1e-6
    fd = (co.eval(t + h) - co.eval(t - h)) / (2 * h)
    assert co.eval_prime(t) == pytest.approx(fd, rel=1e-8)


def test_example_window_is_valid(coeff, window):
    t0, T = window
    chk = coeff.validate_window(t0, T)
    assert chk
    assert chk.A_t0 == pytest.approx(coeff.amplitude / 2, rel=1e-14)
    assert coeff.eval(t0 + T) == pytest.approx(coeff.amplitude, rel=1e-14)


def test_window_rejects_decreasing_stretch(coeff):
    chk = coeff.validate_window(0.0, 0.01)
    assert not chk
    assert "A'" in chk.message


def test_window_rejects_nonpositive_start():
    co = OscillatingCoefficient("constant", 1.0, -1.0)
    chk = co.validate_window(0.0, 1.0)
    assert not chk and "not positive" in chk.message


def test_monotone_windows_are_valid(coeff):
    wins = coeff.monotone_windows(0.0, count=3)
    assert wins[0] == pytest.approx((3 * math.pi / 400, math.pi / 400))
    for t0, T in wins:
        assert coeff.validate_window(t0, T)


def test_periodicity(coeff):
    t = np.linspace(0, 0.05, 17)
    assert np.allclose(coeff.eval(t + math.pi / 100), coeff.eval(t), atol=1e-10)


def test_table_profile(tmp_path):
    s = np.linspace(0, 2 * math.pi, 65)
    path = tmp_path / "a.csv"
    np.savetxt(path, np.column_stack([s, np.cos(s / 2) ** 2]), delimiter=",")
    co = OscillatingCoefficient.from_table_file(path, omega=2.0)
    ref = OscillatingCoefficient("cos2", 2.0, 1.0)
    t = np.linspace(0.1, 1.4, 9)
    assert np.allclose(co.eval(t), ref.eval(t), atol=1e-4)


@pytest.mark.parametrize("kw", [dict(profile="nope"), dict(omega=0.0), dict(omega=-1.0)])
def test_bad_construction(kw):
    with pytest.raises(ValueError):
        OscillatingCoefficient(**kw)
