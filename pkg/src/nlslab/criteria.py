"""Sufficient blow-up conditions for the line and half-line problems.

Every inequality is evaluated with three-valued logic: ``holds`` when the slack
exceeds the propagated error, ``fails`` when it is below minus the error, and
``indeterminate`` otherwise. Horizons are offsets from ``t0``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .functionals import BlowupParameters, clean, line_bound_constant, roots_from, tau_crit

HOLDS, FAILS, INDET = "holds", "fails", "indeterminate"
CASES = ("case_i", "case_ii", "case_iii")


class WindowError(ValueError):
    pass


class UnsupportedRegime(ValueError):
    pass


@dataclass(frozen=True)
class Margin:
    name: str
    lhs: Optional[float]
    rhs: Optional[float]
    slack: Optional[float]
    status: str
    error: float = 0.0


def _finite(x):
    return x is not None and math.isfinite(x)


def _status(slack, err):
    # a strict inequality with zero error fails at equality
    if slack > err:
        return HOLDS
    return FAILS if (slack < -err or err == 0.0) else INDET


def less(name, lhs, rhs, err=0.0) -> Margin:
    """lhs < rhs with slack rhs - lhs."""
    if not (_finite(lhs) and _finite(rhs)):
        return Margin(name, lhs, rhs, None, FAILS, err)
    slack = rhs - lhs
    return Margin(name, lhs, rhs, slack, _status(slack, err), err)


def greater(name, lhs, rhs, err=0.0) -> Margin:
    """lhs > rhs with slack lhs - rhs."""
    if not (_finite(lhs) and _finite(rhs)):
        return Margin(name, lhs, rhs, None, FAILS, err)
    slack = lhs - rhs
    return Margin(name, lhs, rhs, slack, _status(slack, err), err)


def band(name, lhs, rhs, err) -> Margin:
    """|lhs - rhs| <= err, recorded with slack err - |lhs - rhs|."""
    slack = err - abs(lhs - rhs)
    return Margin(name, lhs, rhs, float(slack), HOLDS if slack >= 0 else FAILS, float(err))


def aggregate(margins: Sequence[Margin]) -> str:
    st = [m.status for m in margins]
    if FAILS in st:
        return FAILS
    return INDET if INDET in st else HOLDS


def _spread(fn: Callable, vals, errs) -> float:
    """Largest change of fn over the box vals +- errs (corners only)."""
    base = fn(*vals)
    if not _finite(base):
        return 0.0
    worst = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=len(vals)):
        v = fn(*[x + s * e for x, s, e in zip(vals, signs, errs)])
        worst = max(worst, abs(v - base)) if _finite(v) else math.inf
    return worst


@dataclass(frozen=True)
class BlowupVerdict:
    problem: str
    matched_case: str
    margins: tuple
    predicted_horizon: Optional[float]
    bound_constant: Optional[float]
    case_status: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def matched(self) -> bool:
        return self.matched_case in CASES

    def margin(self, name) -> Margin:
        for m in self.margins:
            if m.name == name:
                return m
        raise KeyError(name)

    def to_dict(self):
        return clean({
            "problem": self.problem,
            "matched_case": self.matched_case,
            "predicted_horizon": self.predicted_horizon,
            "bound_constant": self.bound_constant,
            "case_status": self.case_status,
            "margins": [m.__dict__ for m in self.margins],
            "diagnostics": self.diagnostics,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _theta_minus(a, l, b):
    return roots_from(a, l, b)[0]


def _evaluate(p: BlowupParameters, T: float, bound: Optional[float]):
    """Margins of the three cases; ``bound`` None drops the smallness conditions."""
    a, l, b = p.alpha, p.lambda_, p.beta
    ea, el, eb = p.alpha_error, p.lambda_error, 2.0 * p.energy_error
    half_delta = -0.5 * p.delta
    e_err = p.energy_error

    disc_err = _spread(lambda a_, l_, b_: l_ * l_ - 4 * a_ * b_, (a, l, b), (ea, el, eb))
    tm = p.theta_minus
    tm_err = _spread(lambda *v: _nan(_theta_minus(*v)), (a, l, b), (ea, el, eb)) if tm is not None else 0.0
    tc = p.tau_crit
    tc_err = _spread(lambda *v: _nan(tau_crit(*v)), (a, l, b), (ea, el, eb)) if tc is not None else 0.0
    t0v = p.theta_zero
    t0_err = _spread(lambda a_, l_: -a_ / l_, (a, l), (ea, el)) if t0v is not None else 0.0

    case_i = [
        greater("E0 > -delta/2", p.energy0, half_delta, e_err),
        less("lambda < 0", l, 0.0, el),
        greater("lambda^2 - 4 alpha beta > 0", p.discriminant, 0.0, disc_err),
        greater("T > theta_minus", T, tm, tm_err),
    ]
    case_ii = [
        less("E0 < -delta/2", p.energy0, half_delta, e_err),
        greater("T > tau_crit", T, tc, tc_err),
    ]
    case_iii = [
        band("E0 = -delta/2", p.energy0, half_delta, e_err),
        less("lambda < 0 (iii)", l, 0.0, el),
        greater("T > theta_zero", T, t0v, t0_err),
    ]
    if bound is not None:
        sm = (lambda a_, l_, b_: a_ + b_ * _nan(_theta_minus(a_, l_, b_)) ** 2)
        lhs = sm(a, l, b) if tm is not None else None
        case_i.append(less("alpha + beta theta_minus^2 < bound/2", lhs, 0.5 * bound,
                           _spread(sm, (a, l, b), (ea, el, eb)) if tm is not None else 0.0))
        g = (lambda a_, b_: 2 * a_ * (2.0 / b_ * p.grad_l2 + 1.0))
        case_ii.append(less("2 alpha gamma < bound", 2 * a * p.gamma, bound,
                            _spread(g, (a, b), (ea, eb)) if b != 0 else 0.0))
        case_iii.append(less("alpha < bound/2", a, 0.5 * bound, ea))
    return case_i, case_ii, case_iii


def _nan(x):
    return math.nan if x is None else x


def _decide(problem, p, T, bound, diagnostics):
    ci, cii, ciii = _evaluate(p, T, bound)
    status = {"case_i": aggregate(ci), "case_ii": aggregate(cii), "case_iii": aggregate(ciii)}
    horizons = {"case_i": p.theta_minus, "case_ii": p.tau_crit, "case_iii": p.theta_zero}
    holding = [c for c in CASES if status[c] == HOLDS]
    pending = [c for c in CASES if status[c] == INDET]
    if holding and not pending:
        matched = holding[0]
    elif holding or pending:
        matched = "indeterminate"
    else:
        matched = "none"
    # the literal theta_plus reading of the negative-beta case, for comparison
    if p.theta_plus is not None:
        lit = greater("T > theta_plus (literal)", T, p.theta_plus)
        diagnostics["literal_theta_plus"] = {"theta_plus": p.theta_plus, "status": lit.status}
    horizon = horizons.get(matched)
    return BlowupVerdict(problem, matched, tuple(ci + cii + ciii), horizon, bound, status, diagnostics)


def _check_window(coeff, t0, T):
    wc = coeff.validate_window(t0, T)
    if not wc.valid:
        raise WindowError(f"invalid window [t0, t0+T) = [{t0}, {t0 + T}): {wc.message}")
    return wc


def check_line(params: BlowupParameters, coeff, t0: float, T: float) -> BlowupVerdict:
    if params.problem != "line":
        raise ValueError("parameters were assembled for the half-line problem")
    _check_window(coeff, t0, T)
    bound = line_bound_constant(coeff, t0, T)
    diag = {"horizon_convention": "offset from t0", "periodic_profile": coeff.periodic}
    return _decide("line", params, T, bound, diag)


def check_halfline(params: BlowupParameters, coeff, t0: float, T: float, r: float = 2.0) -> BlowupVerdict:
    if params.problem != "halfline":
        raise ValueError("parameters were assembled for the line problem")
    if r < 2:
        raise UnsupportedRegime(f"r = {r} is below the critical exponent 2")
    _check_window(coeff, t0, T)
    diag = {"horizon_convention": "offset from t0", "periodic_profile": coeff.periodic, "r": r}
    return _decide("halfline", params, T, None, diag)
