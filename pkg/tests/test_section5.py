import math

import mpmath as mp
import numpy as np
import pytest

from nlslab.section5 import (REPORTED, ExampleConfig, Oracle, build_datum, format_table, oracle_agreement,
                             plot_data, reproduce_report, theta_minus_from_reported, to_json)


@pytest.fixture(scope="module")
def table():
    return reproduce_report(ExampleConfig())


def test_datum_structure():
    u = build_datum(1e-3)
    x = np.array([-1e-3, 0.0, 0.5e-3, 1e-3, 5e-3])
    v = u(x) * math.sqrt(1e-3)
    assert v[0] == 0 and v[1] == 0
    assert v[2].real == pytest.approx(0.5 / math.sqrt(2))
    assert v[3].real == pytest.approx(1 / math.sqrt(2))
    assert v[2].imag == pytest.approx(1 / math.sqrt(2))
    assert set(u.knots()) >= {0.0, 0.5e-3, 1e-3}


def test_infinite_momentum():
    # x^2 |u0|^2 tends to 5 rho / 4, so int x^2 |u0|^2 diverges linearly
    rho = 1e-3
    u = build_datum(rho)
    x = np.array([1.0, 10.0, 100.0])
    assert np.allclose(x ** 2 * np.abs(u(x)) ** 2, 1.25 * rho, rtol=1e-5)


def test_config_validation():
    assert ExampleConfig().validate()
    with pytest.raises(ValueError):
        ExampleConfig(rho=0.0)
    with pytest.raises(ValueError):
        ExampleConfig(mollifier_interpretation="other")


def test_oracle_closed_forms():
    o = Oracle(ExampleConfig())
    with mp.workdps(40):
        assert mp.almosteq(o.mass(), mp.mpf(3) / 2 * (mp.mpf(1) / 6 + mp.pi / 4), 1e-35)
        g, src, e, bracket = o.energy_terms()
        assert mp.almosteq(g * mp.mpf("1e-20"), 3 * (mp.mpf(1) / 2 + mp.pi / 32), 1e-30)
        assert mp.almosteq(o.half_bound(), mp.sqrt(3 / (8 * o.c0)) / 2, 1e-35)


def test_theta_from_reported_ingredients():
    th = theta_minus_from_reported()
    assert th["rel_stable"] < 1e-4
    # the printed quotient is ill conditioned: about 150 x the six-digit input rounding
    assert th["condition_printed"] > 100
    assert th["im_sq_minus_D"] == pytest.approx(th["beta_alpha"], rel=1e-3)


def test_report_rows(table):
    rows = {r["quantity"]: r for r in table["rows"]}
    assert rows["half_bound"]["oracle"] == pytest.approx(REPORTED["half_bound"], abs=5e-8)
    assert rows["alpha"]["oracle"] == pytest.approx(REPORTED["alpha"], rel=1e-5)
    assert any(f.startswith("mass_discrepancy") for f in rows["mass"]["flags"])
    assert any(f.startswith("cancellation_limited") for f in rows["energy"]["flags"])
    assert oracle_agreement(table) == []
    assert table["psi_plateau"]["oracle"] == pytest.approx(table["psi_plateau"]["engine"], rel=1e-12)
    d = table["delta_audit"]
    assert d["rescaled"]["implied_phi3_sup"] == pytest.approx(9.76e7, rel=2e-3)


def test_oracle_verdict_chain(table):
    margins = {m["name"]: m["status"] for m in table["verdict_oracle"]["margins"]}
    assert margins["lambda < 0"] == "holds"
    assert margins["lambda^2 - 4 alpha beta > 0"] == "holds"
    assert margins["T > theta_minus"] == "holds"
    assert margins["alpha + beta theta_minus^2 < bound/2"] == "holds"


def test_serialisation(table):
    js = to_json(table)
    assert "NaN" not in js
    assert "verdict on oracle values" in format_table(table)


def test_plot_data(tmp_path):
    files = plot_data(tmp_path, samples=11)
    names = {p.split("/")[-1] for p in files}
    assert names == {"coefficient.csv", "mollifier_left.csv", "mollifier_right.csv", "weight.csv",
                     "m.csv", "m_prime.csv", "re_u0.csv"}
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "x,m" and len(lines) == 12
