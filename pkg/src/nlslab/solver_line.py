"""Strang-split Fourier solver for ``i u_t = -u_xx - A(t)|u|^4 u`` on a periodic box.

Each step is a half linear step (exact multiplier ``exp(-i k^2 dt/2)``), a full
nonlinear phase rotation ``exp(i A(t_mid) |u|^4 dt)`` and another half linear
step. Step size is controlled by step doubling unless ``fixed_dt`` is set.

Along the trajectory the run records mass, energy, the energy-rate residual,
both sides of the first virial identity, the weighted mass ``int Psi |u|^2``,
the quadratic bound ``p(tau)`` and the exterior mass. A gradient blow-up
signature stops the run; this is a numerical symptom, not a proof.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .field import AnalyticProfile, SampledField
from .functionals import BlowupParameters, assemble
from .quadrature import gauss_legendre_panels
from .weights import make_weight

log = logging.getLogger(__name__)

STATUSES = ("completed", "blowup_detected", "step_failure")


@dataclass
class Controls:
    dt0: float = 1e-4
    dt_floor: float = 1e-12
    dt_max: Optional[float] = None
    tol: float = 1e-9               # relative step-doubling error per step
    fixed_dt: bool = False
    grad_ratio: float = 1e6         # detection threshold on ||u_x||^2 / ||u_x(t0)||^2
    signature_ratio: float = 100.0  # growth that qualifies a dt-floor stop as blow-up
    output_stride: int = 1
    edge_tol: float = 1e-8          # max |u|^2 allowed in the outer 1/16 of the box
    max_steps: int = 10_000_000
    # grid used when an analytic datum is passed
    n: int = 4096
    L: float = 20.0


@dataclass
class SimulationRecord:
    problem: str
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    grad_l2_sq: list = field(default_factory=list)
    l6_6: list = field(default_factory=list)
    virial_lhs: list = field(default_factory=list)
    virial_rhs: list = field(default_factory=list)
    psi_mass: list = field(default_factory=list)
    psi_predicted: list = field(default_factory=list)
    p_bound: list = field(default_factory=list)
    tail_l2_4: list = field(default_factory=list)
    A_of_t: list = field(default_factory=list)
    energy_residual: list = field(default_factory=list)
    trace_abs: list = field(default_factory=list)
    bc_residual: list = field(default_factory=list)
    detection: str = "completed"
    detection_time: Optional[float] = None
    trigger: str = ""
    steps: int = 0
    rejected: int = 0
    tail_bound: float = math.nan
    virial_scale: float = 0.0
    energy_scale: float = 0.0
    params: Optional[BlowupParameters] = None
    final: Optional[SampledField] = None
    meta: dict = field(default_factory=dict)

    LINE_COLUMNS = ("t", "mass", "energy", "grad_l2_sq", "l6_6", "virial_lhs", "virial_rhs",
                    "psi_mass", "p_bound", "tail_l2_4", "A_of_t")
    HALFLINE_EXTRA = ("trace_abs", "bc_residual")

    def columns(self):
        cols = self.LINE_COLUMNS + ("energy_residual", "psi_predicted")
        return cols + self.HALFLINE_EXTRA if self.problem == "halfline" else cols

    def array(self, name) -> np.ndarray:
        return np.asarray(self.times if name == "t" else getattr(self, name), dtype=float)

    def to_csv(self, path):
        cols = self.columns()
        data = np.column_stack([self.array(c) for c in cols])
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    # -- derived diagnostics ---------------------------------------------
    def mass_drift(self) -> float:
        m = self.array("mass")
        return float(np.max(np.abs(m - m[0])) / m[0]) if m[0] else float(np.max(np.abs(m)))

    def energy_residual_rel(self) -> float:
        """max |E(t) - E(t0) + int rate| over max(|E0|, ||u_x(t0)||^2)."""
        r = self.array("energy_residual")
        return float(np.max(np.abs(r)) / self.energy_scale) if self.energy_scale else float(np.max(np.abs(r)))

    def virial_residual_rel(self) -> float:
        """max |lhs - rhs| over the accumulated size of the time-integrated terms."""
        d = np.abs(self.array("virial_lhs") - self.array("virial_rhs"))
        return float(np.max(d) / self.virial_scale) if self.virial_scale else float(np.max(d))

    def grad_ratio(self) -> np.ndarray:
        g = self.array("grad_l2_sq")
        return g / g[0]

    def summary(self):
        g = self.grad_ratio()
        return {
            "problem": self.problem,
            "detection": self.detection,
            "detection_time": self.detection_time,
            "trigger": self.trigger,
            "steps": self.steps,
            "rejected": self.rejected,
            "t_final": self.times[-1],
            "mass_drift": self.mass_drift(),
            "energy_residual_rel": self.energy_residual_rel(),
            "virial_residual_rel": self.virial_residual_rel(),
            "max_grad_ratio": float(np.max(g)),
            "max_tail_l2_4": float(np.max(self.array("tail_l2_4"))),
            "tail_bound": self.tail_bound,
            **({"max_bc_residual": float(np.max(self.array("bc_residual")))}
               if self.problem == "halfline" else {}),
        }


class _LineMoments:
    """Weighted integrals on a periodic grid for a weight with kinks.

    Gauss-Legendre panels (two cells wide) between the weight's knots; field
    values at the nodes come from 8-point local Lagrange interpolation.
    """

    def __init__(self, grid: SampledField, w):
        lo, hi = max(grid.x_min, w.support[0]), min(grid.x_max - grid.h, w.support[1])
        cuts = sorted({lo, hi} | {k for k in w.knots if lo < k < hi})
        xs, ws = [], []
        for a, b in zip(cuts[:-1], cuts[1:]):
            # mollified branches have very steep third derivatives
            xa, wa = gauss_legendre_panels(a, b, min(2 * grid.h, (b - a) / 400))
            xs.append(xa)
            ws.append(wa)
        self.x = np.concatenate(xs)
        self.wq = np.concatenate(ws)
        self.phi = w.phi(self.x, 0)
        self.phi1 = w.phi(self.x, 1)
        self.phi3 = w.phi(self.x, 3)
        self.psi = w.psi(self.x)
        self.psi_out = w.psi_plateau
        # interpolation stencils
        t = (self.x - grid.x_min) / grid.h
        base = np.floor(t).astype(int) - 3
        s = t - base
        L = np.ones(self.x.shape + (8,))
        for j in range(8):
            for k in range(8):
                if k != j:
                    L[:, j] *= (s - k) / (j - k)
        self.idx = (base[:, None] + np.arange(8)) % grid.n
        self.L = L
        self.lo, self.hi = lo, hi
        xg = grid.x
        self.outside = (xg < lo) | (xg > hi)

    def __call__(self, u, ux, h):
        v = np.einsum("ij,ij->i", self.L, u[self.idx])
        vx = np.einsum("ij,ij->i", self.L, ux[self.idx])
        a2 = v.real ** 2 + v.imag ** 2
        q = self.wq
        out_mass = h * float(np.sum(np.abs(u[self.outside]) ** 2))
        return {
            "im_phi": float(np.dot(q, self.phi * np.imag(v * np.conj(vx)))),
            "phi1_ux2": float(np.dot(q, self.phi1 * (vx.real ** 2 + vx.imag ** 2))),
            "phi1_u6": float(np.dot(q, self.phi1 * a2 ** 3)),
            "phi3_u2": float(np.dot(q, self.phi3 * a2)),
            "psi_u2": float(np.dot(q, self.psi * a2)) + self.psi_out * out_mass,
            "abs_phi1_ux2": float(np.dot(q, np.abs(self.phi1) * (vx.real ** 2 + vx.imag ** 2))),
            "abs_phi1_u6": float(np.dot(q, np.abs(self.phi1) * a2 ** 3)),
            "abs_phi3_u2": float(np.dot(q, np.abs(self.phi3) * a2)),
        }


def _trap(t_prev, t_now, f_prev, f_now):
    return 0.5 * (t_now - t_prev) * (f_prev + f_now)


class LineSolver:
    def __init__(self, u0: SampledField, coeff, controls: Controls, weight=None):
        if u0.domain != "line":
            raise ValueError("the line solver needs a line field")
        self.grid = u0
        self.coeff = coeff
        self.c = controls
        k = u0.wavenumbers()
        self.k2 = k ** 2
        self.k_odd = k.copy()
        self.k_odd[u0.n // 2] = 0.0      # Nyquist mode has no odd derivative
        self.w = weight if weight is not None else make_weight("line")
        self.moments = _LineMoments(u0, self.w)
        n = u0.n
        edge = max(1, n // 32)
        self.edge_mask = np.zeros(n, dtype=bool)
        self.edge_mask[:edge] = True
        self.edge_mask[-edge:] = True

    def step(self, u, t, dt):
        half = np.exp(-0.5j * self.k2 * dt)
        v = np.fft.ifft(half * np.fft.fft(u))
        a2 = v.real ** 2 + v.imag ** 2
        v = v * np.exp(1j * self.coeff.eval(t + 0.5 * dt) * dt * a2 * a2)
        return np.fft.ifft(half * np.fft.fft(v))

    def derivative(self, u):
        return np.fft.ifft(1j * self.k_odd * np.fft.fft(u))

    def observe(self, u, t):
        h = self.grid.h
        ux = self.derivative(u)
        a2 = u.real ** 2 + u.imag ** 2
        mom = self.moments(u, ux, h)
        tail = h * float(np.sum(np.where(np.abs(self.grid.x) >= 1.0, a2, 0.0)))
        return {
            "t": t,
            "A": self.coeff.eval(t),
            "Ap": self.coeff.eval_prime(t),
            "mass": h * math.fsum(a2),
            "grad": h * math.fsum(ux.real ** 2 + ux.imag ** 2),
            "l6": h * math.fsum(a2 ** 3),
            "tail2": tail * tail,
            "edge": float(np.max(a2[self.edge_mask])),
            **mom,
        }


def _virial_integrand(o):
    return 2.0 * o["phi1_ux2"] - 2.0 * o["A"] / 3.0 * o["phi1_u6"] - 0.5 * o["phi3_u2"]


def _virial_scale_integrand(o):
    return 2.0 * o["abs_phi1_ux2"] + 2.0 * abs(o["A"]) / 3.0 * o["abs_phi1_u6"] + 0.5 * o["abs_phi3_u2"]


def run(u0, coeff, t0: float, T: float, controls: Optional[Controls] = None,
        weight=None, params: Optional[BlowupParameters] = None) -> SimulationRecord:
    """Evolve the line problem on ``[t0, t0 + T]``; see the module docstring."""
    c = controls or Controls()
    if isinstance(u0, AnalyticProfile):
        u0 = SampledField.from_profile(u0, c.n, c.L)
    if not T > 0:
        raise ValueError("T must be positive")
    solver = LineSolver(u0, coeff, c, weight)
    w = solver.w
    if params is None:
        params = _try_assemble(u0, w, coeff, t0, T, "line")
    rec = SimulationRecord("line", params=params)
    A_end = coeff.eval(t0 + T)
    rec.tail_bound = 3.0 / (8.0 * A_end) if A_end > 0 else math.inf

    dt_cap = 1.0 / (20.0 * coeff.omega)
    if c.dt_max is not None:
        dt_cap = min(dt_cap, c.dt_max)
    dt = min(c.dt0, dt_cap)

    u = u0.values.copy()
    t = t0
    o = solver.observe(u, t)
    first = o
    rec.energy_scale = max(abs(o["grad"] - o["A"] / 3 * o["l6"]), o["grad"])
    acc = {"virial": 0.0, "virial_abs": 0.0, "psi": 0.0, "erate": 0.0}
    prev = o

    def record(o):
        tau = o["t"] - t0
        e = o["grad"] - o["A"] / 3.0 * o["l6"]
        rec.times.append(o["t"])
        rec.mass.append(o["mass"])
        rec.energy.append(e)
        rec.grad_l2_sq.append(o["grad"])
        rec.l6_6.append(o["l6"])
        rec.virial_lhs.append(-o["im_phi"] + first["im_phi"])
        rec.virial_rhs.append(acc["virial"])
        rec.psi_mass.append(o["psi_u2"])
        rec.psi_predicted.append(first["psi_u2"] - 2.0 * acc["psi"])
        rec.p_bound.append(float(params.p(tau)) if params is not None else math.nan)
        rec.tail_l2_4.append(o["tail2"])
        rec.A_of_t.append(o["A"])
        rec.energy_residual.append(e - (first["grad"] - first["A"] / 3.0 * first["l6"]) + acc["erate"])

    record(o)
    g0 = o["grad"]
    t_end = t0 + T
    steps = 0
    while t < t_end * (1 - 1e-15) and t_end - t > 1e-15 * max(1.0, abs(t_end)):
        if steps >= c.max_steps:
            rec.detection, rec.trigger = "step_failure", "max_steps"
            break
        dt = min(dt, t_end - t)
        if c.fixed_dt:
            u_new = solver.step(u, t, dt)
            ok = np.all(np.isfinite(u_new))
        else:
            big = solver.step(u, t, dt)
            u_new = solver.step(solver.step(u, t, 0.5 * dt), t + 0.5 * dt, 0.5 * dt)
            norm = np.linalg.norm(u_new)
            err = np.linalg.norm(u_new - big) / norm if norm > 0 else 0.0
            ok = np.isfinite(err) and err <= c.tol
            if not ok:
                rec.rejected += 1
                fac = 0.25 if not np.isfinite(err) else max(0.25, 0.9 * (c.tol / err) ** (1 / 3))
                dt *= fac
                if dt < c.dt_floor:
                    _stop_at_floor(rec, t, prev["grad"] / g0 if g0 else 0.0, c)
                    break
                continue
        if not ok:
            _stop_at_floor(rec, t, prev["grad"] / g0 if g0 else 0.0, c)
            break
        t_new = t + dt
        o = solver.observe(u_new, t_new)
        acc["virial"] += _trap(t, t_new, _virial_integrand(prev), _virial_integrand(o))
        acc["virial_abs"] += _trap(t, t_new, _virial_scale_integrand(prev), _virial_scale_integrand(o))
        acc["psi"] += _trap(t, t_new, prev["im_phi"], o["im_phi"])
        acc["erate"] += _trap(t, t_new, prev["Ap"] / 3.0 * prev["l6"], o["Ap"] / 3.0 * o["l6"])
        u, t, prev = u_new, t_new, o
        steps += 1
        ratio = o["grad"] / g0 if g0 else 0.0
        detected = g0 > 0 and ratio > c.grad_ratio
        if steps % c.output_stride == 0 or detected or t >= t_end:
            record(o)
        if detected:
            rec.detection, rec.detection_time, rec.trigger = "blowup_detected", t, "grad_ratio"
            break
        if o["edge"] > c.edge_tol:
            if rec.times[-1] != t:
                record(o)
            rec.detection, rec.detection_time, rec.trigger = "step_failure", t, "edge_mass"
            break
        if not c.fixed_dt:
            fac = 2.0 if err == 0 else min(2.0, max(0.5, 0.9 * (c.tol / err) ** (1 / 3)))
            dt = min(dt * fac, dt_cap)
    if rec.times[-1] != t:
        record(prev)
    rec.steps = steps
    rec.virial_scale = max(acc["virial_abs"], abs(first["im_phi"]))
    rec.final = u0.with_values(u)
    return rec


def _try_assemble(u0, w, coeff, t0, T, problem, r=2.0):
    # the p(tau) monitor needs A(t0 + T) > 0; free or defocusing runs go without it
    try:
        return assemble(u0, w, coeff, t0, T, problem, r)
    except ValueError:
        return None


def _stop_at_floor(rec, t, ratio, c):
    rec.detection_time = t
    if ratio >= c.signature_ratio:
        rec.detection, rec.trigger = "blowup_detected", "dt_floor"
    else:
        rec.detection, rec.trigger = "step_failure", "dt_floor"
