"""Time-dependent nonlinearity amplitude ``A(t) = amplitude * a(2 * omega * t)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

PROFILES = ("cos2", "constant", "table")


@dataclass(frozen=True)
class WindowCheck:
    valid: bool
    t0: float
    T: float
    A_t0: float
    first_violation: Optional[float] = None
    min_rate: float = math.nan
    message: str = ""

    def __bool__(self) -> bool:
        return self.valid


@dataclass(frozen=True)
class OscillatingCoefficient:
    """Oscillating coefficient built from a registry profile.

    ``cos2`` uses the base profile ``a(s) = cos^2(s/2)`` so that
    ``A(t) = amplitude * cos^2(omega * t)``. ``constant`` is ``a = 1``.
    ``table`` interpolates samples ``(s, a(s))`` with a cubic spline; when the
    first and last samples coincide the table is treated as one period.
    """

    profile: str = "cos2"
    omega: float = 1.0
    amplitude: float = 1.0
    table: Optional[tuple] = None
    _spline: Optional[CubicSpline] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown coefficient profile {self.profile!r}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.profile == "table":
            if self.table is None:
                raise ValueError("table profile needs samples")
            s, a = (np.asarray(c, dtype=float) for c in self.table)
            if s.ndim != 1 or s.shape != a.shape or len(s) < 4 or np.any(np.diff(s) <= 0):
                raise ValueError("table needs >= 4 strictly increasing abscissae")
            bc = "periodic" if a[0] == a[-1] else "not-a-knot"
            object.__setattr__(self, "_spline", CubicSpline(s, a, bc_type=bc))

    @classmethod
    def from_table_file(cls, path, omega: float, amplitude: float = 1.0):
        data = np.loadtxt(Path(path), delimiter=",", ndmin=2, comments="#")
        return cls("table", omega, amplitude, table=(tuple(data[:, 0]), tuple(data[:, 1])))

    @property
    def periodic(self) -> bool:
        """False for a non-periodic table, which the blow-up criteria do not cover."""
        if self.profile != "table":
            return True
        return self._spline.extrapolate == "periodic"

    def _base(self, s, nu=0):
        if self.profile == "cos2":
            if nu == 0:
                return np.cos(0.5 * s) ** 2
            return -0.5 * np.sin(s)
        if self.profile == "constant":
            return np.ones_like(s) if nu == 0 else np.zeros_like(s)
        sp = self._spline
        if self.periodic:
            return sp(s, nu)
        # clamp outside the sampled range
        lo, hi = sp.x[0], sp.x[-1]
        inside = (s >= lo) & (s <= hi)
        out = sp(np.clip(s, lo, hi), nu)
        return out if nu == 0 else np.where(inside, out, 0.0)

    def eval(self, t):
        s = 2.0 * self.omega * np.asarray(t, dtype=float)
        v = self.amplitude * self._base(s)
        return float(v) if np.ndim(v) == 0 else v

    __call__ = eval

    def eval_prime(self, t):
        """d/dt A(t) = 2 * omega * amplitude * a'(2 omega t)."""
        s = 2.0 * self.omega * np.asarray(t, dtype=float)
        v = 2.0 * self.omega * self.amplitude * self._base(s, 1)
        return float(v) if np.ndim(v) == 0 else v

    def base_prime(self, s):
        """a'(s) scaled by amplitude, i.e. the factor appearing in the energy rate."""
        return self.amplitude * self._base(np.asarray(s, dtype=float), 1)

    def validate_window(self, t0: float, T: float, tol_window: float = 1e-12,
                        samples: int = 10_000) -> WindowCheck:
        """Check A(t0) > 0 and A' >= -tol on [t0, t0 + T] (uniform samples plus endpoints).

        The tolerance is scaled by ``max(1, amplitude * omega)`` so that roundoff in
        ``sin`` at an exact zero crossing does not reject a valid window.
        """
        if not T > 0:
            raise ValueError("window length T must be positive")
        a0 = self.eval(t0)
        ts = np.linspace(t0, t0 + T, samples + 1)
        rates = self.eval_prime(ts)
        floor = -tol_window * max(1.0, abs(self.amplitude) * self.omega)
        bad = np.flatnonzero(rates < floor)
        min_rate = float(np.min(rates))
        if not a0 > 0:
            return WindowCheck(False, t0, T, a0, t0, min_rate, f"A(t0) = {a0:.6g} is not positive")
        if bad.size:
            tv = float(ts[bad[0]])
            return WindowCheck(False, t0, T, a0, tv, min_rate,
                               f"A'({tv:.9g}) = {rates[bad[0]]:.6g} < 0")
        return WindowCheck(True, t0, T, a0, None, min_rate, "ok")

    def monotone_windows(self, t_from: float = 0.0, count: int = 1):
        """Closed-form maximal windows [t0, t0+T] with A(t0) > 0, A' >= 0 (cos2 only).

        A' = -amplitude*omega*sin(2 omega t) >= 0 on [(pi/2 + k pi)/omega, (k+1) pi/omega];
        A vanishes at the left end, so each window is returned half-open on the left
        as its midpoint start (A(t0) = amplitude/2) and its right end.
        """
        if self.profile != "cos2":
            raise NotImplementedError("closed-form windows exist only for the cos2 profile")
        k = math.ceil(self.omega * t_from / math.pi - 0.75)
        out = []
        while len(out) < count:
            start = (0.75 + k) * math.pi / self.omega
            end = (k + 1) * math.pi / self.omega
            if start >= t_from:
                out.append((start, end - start))
            k += 1
        return out
