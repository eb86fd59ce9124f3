"""Run configuration: TOML in, resolved TOML out.

Every key has a default; unknown keys and out-of-range values raise ``ConfigError``.
Relative paths (coefficient table, datum file, output dir) resolve against the
directory of the config file.
"""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import fields
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .field import AnalyticProfile, SampledField
from .oscillator import OscillatingCoefficient
from .solver_line import Controls
from .weights import make_weight


class ConfigError(ValueError):
    pass


_CONTROLS = {f.name: f.default for f in fields(Controls)}
_CONTROLS["dt_max"] = 0.0          # 0 means "no cap beyond 1/(20 omega)"

DEFAULTS = {
    "problem": "line",
    "r": 2.0,
    "coefficient": {"profile": "cos2", "omega": 100.0, "amplitude": 73.55418773631645, "table": ""},
    "weight": {"mollifier": "rescaled"},
    "window": {"t0": 3 * math.pi / 400, "T": math.pi / 400},
    "datum": {"file": "", "mu": 1.0, "rho": 1.0, "real": [], "imag": []},
    "solver": _CONTROLS,
    "synthesize": {"target": "case_ii", "rho_min": 1e-12},
    "output": {"dir": "nlslab-out", "csv": "monitors.csv", "json": "summary.json"},
    "sweep": [],
}

_COMPONENT_KEYS = {"kind", "coef", "scale", "center", "power"}


def _merge(base, over, where=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        key = f"{where}{k}"
        if k not in base:
            raise ConfigError(f"unknown key {key!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{key!r} must be a table")
            out[k] = _merge(base[k], v, key + ".")
        else:
            out[k] = v
    return out


def _num(d, key, where, lo=None, strict=False, integer=False):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number")
    if integer and int(v) != v:
        raise ConfigError(f"{where}.{key} must be an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be finite")
    if lo is not None and (v <= lo if strict else v < lo):
        raise ConfigError(f"{where}.{key} = {v} out of range ({'>' if strict else '>='} {lo})")
    d[key] = int(v) if integer else float(v)


def _validate(cfg):
    if cfg["problem"] not in ("line", "halfline"):
        raise ConfigError("problem must be 'line' or 'halfline'")
    _num(cfg, "r", "run", lo=0.0)
    c = cfg["coefficient"]
    if c["profile"] not in ("cos2", "constant", "table"):
        raise ConfigError("coefficient.profile must be cos2, constant or table")
    _num(c, "omega", "coefficient", lo=0.0, strict=True)
    _num(c, "amplitude", "coefficient")
    if c["profile"] == "table" and not c["table"]:
        raise ConfigError("coefficient.table is required for the table profile")
    if cfg["weight"]["mollifier"] not in ("rescaled", "literal"):
        raise ConfigError("weight.mollifier must be 'rescaled' or 'literal'")
    w = cfg["window"]
    _num(w, "t0", "window")
    _num(w, "T", "window", lo=0.0, strict=True)
    d = cfg["datum"]
    _num(d, "mu", "datum", lo=0.0, strict=True)
    _num(d, "rho", "datum", lo=0.0, strict=True)
    for part in ("real", "imag"):
        if not isinstance(d[part], list):
            raise ConfigError(f"datum.{part} must be an array of tables")
        for comp in d[part]:
            if not isinstance(comp, dict) or "kind" not in comp or set(comp) - _COMPONENT_KEYS:
                raise ConfigError(f"datum.{part} entries need 'kind' and only {sorted(_COMPONENT_KEYS)}")
    if not d["file"] and not (d["real"] or d["imag"]):
        raise ConfigError("datum needs a file or at least one component")
    s = cfg["solver"]
    for k in ("dt0", "dt_floor", "tol", "grad_ratio", "signature_ratio", "edge_tol", "L"):
        _num(s, k, "solver", lo=0.0, strict=True)
    _num(s, "dt_max", "solver", lo=0.0)
    for k in ("output_stride", "max_steps", "n"):
        _num(s, k, "solver", lo=1, integer=True)
    if s["n"] < 16:
        raise ConfigError("solver.n must be at least 16")
    if not isinstance(s["fixed_dt"], bool):
        raise ConfigError("solver.fixed_dt must be a boolean")
    y = cfg["synthesize"]
    if y["target"] not in ("case_ii", "case_iii"):
        raise ConfigError("synthesize.target must be case_ii or case_iii")
    _num(y, "rho_min", "synthesize", lo=0.0, strict=True)
    if not isinstance(cfg["sweep"], list) or not all(isinstance(e, dict) for e in cfg["sweep"]):
        raise ConfigError("sweep must be an array of tables")
    return cfg


class RunConfig:
    """Resolved configuration plus the directory that relative paths refer to."""

    def __init__(self, data: dict, base_dir="."):
        self.base_dir = Path(base_dir)
        self.data = _validate(_merge(DEFAULTS, data))
        for key in ("table",):
            p = self.data["coefficient"][key]
            if p and not self._path(p).exists():
                raise ConfigError(f"coefficient.table file {p!r} not found")
        p = self.data["datum"]["file"]
        if p and not self._path(p).exists():
            raise ConfigError(f"datum.file {p!r} not found")

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    def _path(self, p) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base_dir / q

    @property
    def problem(self) -> str:
        return self.data["problem"]

    @property
    def r(self) -> float:
        return self.data["r"]

    @property
    def t0(self) -> float:
        return self.data["window"]["t0"]

    @property
    def T(self) -> float:
        return self.data["window"]["T"]

    def coefficient(self) -> OscillatingCoefficient:
        c = self.data["coefficient"]
        if c["profile"] == "table":
            return OscillatingCoefficient.from_table_file(self._path(c["table"]), c["omega"], c["amplitude"])
        return OscillatingCoefficient(c["profile"], c["omega"], c["amplitude"])

    def weight(self):
        return make_weight(self.problem, self.data["weight"]["mollifier"])

    def datum(self):
        d = self.data["datum"]
        if d["file"]:
            f = SampledField.load(self._path(d["file"]))
            if f.domain != self.problem:
                raise ConfigError(f"datum file holds a {f.domain} field, problem is {self.problem}")
            return f
        return AnalyticProfile(real=d["real"], imag=d["imag"], mu=d["mu"], rho=d["rho"],
                               domain=self.problem)

    def controls(self) -> Controls:
        s = dict(self.data["solver"])
        s["dt_max"] = s["dt_max"] or None
        return Controls(**s)

    def output_dir(self) -> Path:
        return self._path(self.data["output"]["dir"])

    def with_overrides(self, flat: dict) -> "RunConfig":
        """Apply dotted-key overrides (``{"datum.mu": 2.0}``) and revalidate."""
        data = copy.deepcopy(self.data)
        for key, v in flat.items():
            node = data
            *head, last = key.split(".")
            for h in head:
                if h not in node or not isinstance(node[h], dict):
                    raise ConfigError(f"unknown sweep key {key!r}")
                node = node[h]
            if last not in node:
                raise ConfigError(f"unknown sweep key {key!r}")
            node[last] = v
        data["sweep"] = []
        return RunConfig(data, self.base_dir)

    def dumps(self) -> str:
        return tomli_w.dumps(self.data)


def loads(text: str, base_dir=".") -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return RunConfig(data, base_dir)


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return loads(text, p.parent)
