import math

import numpy as np
import pytest

from nlslab.field import AnalyticProfile, Component, SampledField
from nlslab.oscillator import OscillatingCoefficient
from nlslab.solver_line import Controls, run

FREE = OscillatingCoefficient("constant", 1.0, 0.0)
ONE = OscillatingCoefficient("constant", 1.0, 1.0)


def free_gaussian(x, t, c=0.0):
    z = 1 + 4j * t
    return np.exp(-(x - c) ** 2 / z) / np.sqrt(z)


def test_free_evolution_is_exact():
    u0 = SampledField(-20.0, 20.0, free_gaussian(np.linspace(-20, 20, 1024, endpoint=False), 0.0), "line")
    rec = run(u0, FREE, 0.0, 0.5, Controls(dt0=1e-2))
    assert rec.detection == "completed"
    assert np.max(np.abs(rec.final.values - free_gaussian(u0.x, 0.5))) < 1e-10
    assert rec.mass_drift() < 1e-13
    assert math.isnan(rec.p_bound[0])      # no blow-up parameters without a focusing window


def test_short_soliton_run():
    q = AnalyticProfile(real=[Component("sechpow", 3 ** 0.25, 0.5, power=0.5)])
    u0 = SampledField.from_profile(q, 1024, 20.0)
    rec = run(u0, ONE, 0.0, 0.05, Controls(tol=1e-9))
    assert np.max(np.abs(np.abs(rec.final.values) - np.abs(u0.values))) < 1e-5
    assert rec.energy_residual_rel() < 1e-9
    # no virial assertion here: the soliton carries mass across the phi'' jump at 1.6


def test_record_layout(tmp_path):
    u0 = SampledField(-10.0, 10.0, free_gaussian(np.linspace(-10, 10, 256, endpoint=False), 0.0), "line")
    rec = run(u0, FREE, 0.0, 0.01, Controls(dt0=1e-3, fixed_dt=True))
    cols = rec.columns()
    for c in ("t", "mass", "energy", "virial_lhs", "virial_rhs", "psi_mass", "p_bound", "A_of_t"):
        assert c in cols
    assert rec.steps == 10
    rec.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0].split(",") == list(cols) and len(lines) == len(rec.times) + 1
    s = rec.summary()
    assert s["detection"] == "completed" and s["t_final"] == pytest.approx(0.01)


def test_edge_mass_stops_run():
    x = np.linspace(-10, 10, 256, endpoint=False)
    u0 = SampledField(-10.0, 10.0, free_gaussian(x, 0.0, c=8.5), "line")
    rec = run(u0, FREE, 0.0, 1.0, Controls(dt0=1e-3))
    assert rec.detection == "step_failure" and rec.trigger == "edge_mass"


def test_blowup_detected_for_large_negative_energy():
    # eight times the soliton mass collapses almost at once under A = 1
    p = AnalyticProfile(real=[Component("gaussian")], mu=3.0, rho=0.5)
    u0 = SampledField.from_profile(p, 2048, 8.0)
    rec = run(u0, ONE, 0.0, 0.2, Controls(tol=1e-7, grad_ratio=100.0))
    assert rec.detection == "blowup_detected"
    assert rec.detection_time < 0.2
    assert rec.grad_ratio()[-1] > 100


def test_rejects_halfline_field():
    f = SampledField(0.0, 1.0, np.zeros(17, complex), "halfline")
    with pytest.raises(ValueError):
        run(f, ONE, 0.0, 0.1)
