import json

import pytest

from nlslab.cli import main
from nlslab.config import ConfigError, DEFAULTS, RunConfig, load, loads

S5 = """
problem = "line"
[datum]
rho = 1e-10
real = [{kind = "m"}]
imag = [{kind = "m", scale = 0.5}]
"""

SEED = """
problem = "line"
[datum]
mu = 2.0
real = [{kind = "gaussian"}]
"""

FREE = """
problem = "line"
[coefficient]
profile = "constant"
omega = 1.0
amplitude = 0.0
[window]
t0 = 0.0
T = 0.05
[datum]
real = [{kind = "gaussian"}]
[solver]
n = 512
L = 20.0
dt0 = 0.005
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


def test_config_defaults_and_roundtrip(tmp_path):
    cfg = load(write(tmp_path, "a.toml", SEED))
    assert cfg.problem == "line" and cfg.data["solver"]["n"] == DEFAULTS["solver"]["n"]
    assert loads(cfg.dumps(), tmp_path) == cfg


@pytest.mark.parametrize("text", [
    "problem = 'torus'\n[datum]\nreal=[{kind='gaussian'}]",
    "[datum]\nreal=[{kind='gaussian'}]\n[solver]\nn = 4",
    "[datum]\nreal=[{kind='gaussian'}]\n[window]\nT = -1.0",
    "[datum]\nreal=[{kind='gaussian'}]\nbogus = 1",
    "[datum]\nfile = 'missing.bin'",
    "[datum]\n",
    "not toml [",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_check_example_matches(tmp_path, capsys):
    code, out = run(capsys, ["check", write(tmp_path, "s5.toml", S5)])
    assert code == 0
    assert json.loads(out)["verdict"]["matched_case"] in ("case_i", "case_ii")


def test_check_zero_datum(tmp_path, capsys):
    code, _ = run(capsys, ["check", write(tmp_path, "z.toml", "[datum]\nreal=[{kind='zero'}]")])
    assert code == 3


def test_malformed_config(tmp_path, capsys):
    assert main(["check", write(tmp_path, "b.toml", "problem = [")]) == 2


def test_synthesize_paths(tmp_path, capsys):
    code, out = run(capsys, ["synthesize", write(tmp_path, "g.toml", SEED)])
    assert code == 0 and json.loads(out)["verdict"]["matched_case"] == "case_ii"
    code, _ = run(capsys, ["synthesize", write(tmp_path, "p.toml", SEED.replace("2.0", "0.1"))])
    assert code == 2
    half = ("problem = 'halfline'\n[coefficient]\nomega = 1.0\namplitude = 1.0\n"
            "[window]\nt0 = 2.356194490192345\nT = 0.7853981633974483\n"
            "[datum]\nreal = [{kind = 'm'}]\n[synthesize]\ntarget = 'case_iii'\n")
    code, out = run(capsys, ["synthesize", write(tmp_path, "h.toml", half)])
    assert code == 3 and "boundary term vanishes" in json.loads(out)["error"]


def test_simulate_free(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out = run(capsys, ["simulate", write(tmp_path, "f.toml", FREE), "-o", str(out_dir)])
    assert code == 0
    summary = json.loads(out)
    assert summary["detection"] == "completed" and summary["mass_drift"] <= 1e-10
    assert (out_dir / "monitors.csv").exists() and (out_dir / "summary.json").exists()


def test_simulate_under_resolved(tmp_path, capsys):
    code, out = run(capsys, ["simulate", write(tmp_path, "u.toml", FREE.replace("[datum]", "[datum]\nrho = 1e-3"))])
    assert code == 2 and "under-resolved" in out


def test_simulate_step_failure(tmp_path, capsys):
    # mass sitting in the outer sixteenth of the box trips the edge guard
    text = FREE.replace("real = [{kind = \"gaussian\"}]", "real = [{kind = \"gaussian\", center = 19.0}]")
    code, _ = run(capsys, ["simulate", write(tmp_path, "e.toml", text), "-o", str(tmp_path / "e")])
    assert code == 4


def test_sweep_is_thread_independent(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, "s.toml", SEED + "\n[[sweep]]\n\"datum.mu\" = 0.5\n[[sweep]]\n\"datum.mu\" = 2.0\n")
    monkeypatch.setenv("NLSLAB_THREADS", "1")
    c1, o1 = run(capsys, ["check", path])
    monkeypatch.setenv("NLSLAB_THREADS", "2")
    c2, o2 = run(capsys, ["check", path])
    assert o1 == o2 and c1 == c2
    assert [e["overrides"]["datum.mu"] for e in json.loads(o1)["entries"]] == [0.5, 2.0]


def test_bad_sweep_key(tmp_path, capsys):
    path = write(tmp_path, "s.toml", SEED + "\n[[sweep]]\n\"datum.nope\" = 1\n")
    assert main(["check", path]) == 2


def test_weights_inspect(tmp_path, capsys):
    code, out = run(capsys, ["weights-inspect", "--csv", str(tmp_path / "w.csv"), "--samples", "11"])
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "line_compact" and len(rep["continuity"]) == 16
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "x,phi,phi1,phi2,phi3,psi"
