"""Scalar blow-up calculus: mass, energy, lambda, alpha, delta, beta, gamma, roots of p.

``p(tau) = alpha + lambda * tau + beta * tau**2`` bounds the weighted mass
``int Psi |u|^2`` from above; its first negativity time ``tau_crit`` drives every
blow-up criterion.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .field import h1_seminorm_sq, integrate, l2_norm_sq, l6_norm_6, trace_at_zero
from .quadrature import QuadResult

PROBLEMS = ("line", "halfline")


@dataclass(frozen=True)
class EnergyParts:
    value: float
    error: float
    gradient: float
    source: float          # the subtracted nonlinear term, >= 0 for A >= 0


def energy_parts(u, coeff, t: float, problem: str = "line", r: float = 2.0,
                 tol: float = 1e-12) -> EnergyParts:
    """E = ||u_x||^2 - (A/3)||u||_6^6 (line) or ||u_x||^2 - A (2/(r+2)) |u(0)|^(r+2) (half line)."""
    if problem not in PROBLEMS:
        raise ValueError(f"problem must be one of {PROBLEMS}")
    if u.domain != problem:
        raise ValueError(f"field lives on the {u.domain}, problem is {problem}")
    A = coeff.eval(t)
    g = h1_seminorm_sq(u, tol=tol)
    if problem == "line":
        l6 = l6_norm_6(u, tol=tol)
        src = A / 3.0 * l6.value
        err = g.error + abs(A) / 3.0 * l6.error
    else:
        src = A * 2.0 / (r + 2.0) * abs(trace_at_zero(u)) ** (r + 2)
        err = g.error
    val = g.value - src
    # cancellation floor: the difference cannot be trusted below roundoff of its terms
    err = err + 4 * np.finfo(float).eps * (abs(g.value) + abs(src))
    return EnergyParts(float(val), float(err), float(g.value), float(src))


def energy(u, coeff, t: float, problem: str = "line", r: float = 2.0, tol: float = 1e-12) -> float:
    return energy_parts(u, coeff, t, problem, r, tol).value


def lambda_virial(u0, w, tol: float = 1e-12) -> QuadResult:
    """lambda = -2 Im int phi u0 conj(u0')."""
    return integrate(u0, lambda x, v, vx: -2.0 * np.imag(w.phi(x) * v * np.conj(vx)),
                     weight_knots=w.knots, tol=tol)


def alpha_weighted_mass(u0, w, tol: float = 1e-12) -> QuadResult:
    """alpha = int Psi |u0|^2."""
    return integrate(u0, lambda x, v, vx: w.psi(x) * (v.real ** 2 + v.imag ** 2),
                     weight_knots=w.knots, tol=tol)


def line_bound_constant(coeff, t0: float, T: float) -> float:
    """sqrt(3 / (8 A(t0 + T)))."""
    A = coeff.eval(t0 + T)
    if not A > 0:
        raise ValueError(f"A(t0 + T) = {A} must be positive")
    return math.sqrt(3.0 / (8.0 * A))


def delta_line(w, coeff, t0: float, T: float) -> float:
    n = w.sup_norms()
    return 0.5 * line_bound_constant(coeff, t0, T) * (n.phi3 + max(math.sqrt(3.0), 0.5 * n.phi2) ** 2)


def delta_halfline(w, u0=None, mass: Optional[float] = None) -> float:
    """delta = (1/2) ||phi'''|| ||u0||^2 with ||phi'''|| = 3 for the exponential weight."""
    if mass is None:
        mass = l2_norm_sq(u0).value
    return 0.5 * w.sup_norms().phi3 * mass


# --------------------------------------------------------------------------
# roots of p


def quadratic_roots(a: float, b: float, c: float):
    """Real roots of c t^2 + b t + a (note the order: constant first), sorted.

    Uses q = -(b + sign(b) sqrt(disc)) / 2 so neither root suffers cancellation.
    Returns () when there are no real roots or the polynomial is degenerate.
    """
    if c == 0.0:
        return (-a / b,) if b != 0.0 else ()
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return ()
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        return (0.0, 0.0)
    return tuple(sorted((q / c, a / q)))


def tau_crit(alpha: float, lam: float, beta: float) -> Optional[float]:
    """inf { tau > 0 : alpha + lam tau + beta tau^2 < 0 }, or None when p stays >= 0."""
    if beta > 0:
        if not (lam < 0 and lam * lam - 4 * alpha * beta > 0):
            return None
        lo = quadratic_roots(alpha, lam, beta)[0]
        return max(lo, 0.0)
    if beta < 0:
        roots = [t for t in quadratic_roots(alpha, lam, beta) if t >= 0]
        if not roots:
            return 0.0 if alpha < 0 else None
        return max(roots) if alpha > 0 or lam >= 0 else min(roots)
    if lam < 0:
        return max(-alpha / lam, 0.0)
    return None


@dataclass(frozen=True)
class BlowupParameters:
    problem: str
    mass: float
    energy0: float
    lambda_: float
    alpha: float
    delta: float
    beta: float
    gamma: float
    grad_l2: float
    theta_minus: Optional[float]
    theta_plus: Optional[float]
    theta_zero: Optional[float]
    tau_crit: Optional[float]
    discriminant: float
    quadrature_error: float
    energy_error: float = 0.0
    lambda_error: float = 0.0
    alpha_error: float = 0.0

    def p(self, tau):
        return self.alpha + self.lambda_ * tau + self.beta * np.asarray(tau) ** 2

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d

    def to_json(self) -> str:
        return json.dumps(clean(self.to_dict()), sort_keys=True, indent=2)


def clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return clean(obj.item())
    return obj


def roots_from(alpha: float, lam: float, beta: float):
    """theta_-, theta_+ (labelled as in the quadratic formula with 2 beta in the
    denominator), theta_0 = -alpha/lam, and the discriminant."""
    disc = lam * lam - 4.0 * alpha * beta
    tm = tp = None
    if beta != 0.0 and disc >= 0.0:
        sq = math.sqrt(disc)
        q = -0.5 * (lam + math.copysign(sq, lam))
        # (-lam - sq)/(2 beta) and (-lam + sq)/(2 beta) without cancellation
        if q != 0.0:
            r1, r2 = q / beta, alpha / q
        else:
            r1 = r2 = 0.0
        if lam >= 0:
            tm, tp = r1, r2     # q = -(lam + sq)/2
        else:
            tm, tp = r2, r1     # q = -(lam - sq)/2
    t0 = -alpha / lam if lam != 0.0 else None
    return tm, tp, t0, disc


def assemble(u0, w, coeff, t0: float, T: float, problem: str = "line", r: float = 2.0,
             tol: float = 1e-12) -> BlowupParameters:
    mass = l2_norm_sq(u0, tol=tol)
    e = energy_parts(u0, coeff, t0, problem, r, tol)
    lam = lambda_virial(u0, w, tol)
    al = alpha_weighted_mass(u0, w, tol)
    if problem == "line":
        delta = delta_line(w, coeff, t0, T)
    else:
        delta = delta_halfline(w, mass=mass.value)
    beta = 2.0 * e.value + delta
    grad = math.sqrt(e.gradient)
    gamma = 2.0 / beta * grad + 1.0 if beta != 0.0 else math.inf
    tm, tp, th0, disc = roots_from(al.value, lam.value, beta)
    return BlowupParameters(
        problem=problem, mass=mass.value, energy0=e.value, lambda_=lam.value, alpha=al.value,
        delta=delta, beta=beta, gamma=gamma, grad_l2=grad, theta_minus=tm, theta_plus=tp,
        theta_zero=th0, tau_crit=tau_crit(al.value, lam.value, beta), discriminant=disc,
        quadrature_error=float(max(mass.error, e.error, lam.error, al.error)),
        energy_error=e.error, lambda_error=float(lam.error), alpha_error=float(al.error))
