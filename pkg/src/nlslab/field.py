"""Complex fields on the line or half-line: analytic profiles and grid samples.

An :class:`AnalyticProfile` is ``u(x) = (mu / sqrt(rho)) * (R(x / rho) + i I(x / rho))``
where ``R`` and ``I`` are sums of registry components. Every integral over an
analytic profile is computed in the inner variable ``y = x / rho`` so that data
concentrated at ``rho ~ 1e-10`` are resolved by the same panels as ``rho = 1``.

A :class:`SampledField` holds values on a uniform grid. Line grids are periodic
(``x_max`` excluded, spectral derivatives); half-line grids include both ends
and use centred differences.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .quadrature import QuadResult, gauss_legendre_panels, integrate as _quad

DOMAINS = ("line", "halfline")
_SQRT2 = math.sqrt(2.0)


class UnderResolvedError(ValueError):
    """Raised when a grid cannot resolve the inner scale of an analytic profile."""


# --------------------------------------------------------------------------
# component registry: base(y) and base'(y), plus knots in the base variable


def _zero(y, nu):
    return np.zeros_like(y)


def _ramp(y, nu):
    # hat function (1 - |y|)_+
    inside = np.abs(y) < 1.0
    if nu == 0:
        return np.where(inside, 1.0 - np.abs(y), 0.0)
    return np.where(inside, -np.sign(y), 0.0)


def _algebraic(y, nu):
    if nu == 0:
        return 1.0 / np.sqrt(1.0 + y * y)
    return -y / (1.0 + y * y) ** 1.5


def _m(y, nu):
    lin = (y >= 0) & (y < 1.0)
    tail = y >= 1.0
    ys = np.where(tail, y, 1.0)
    if nu == 0:
        return np.where(lin, y / _SQRT2, np.where(tail, 1.0 / np.sqrt(1.0 + ys * ys), 0.0))
    return np.where(lin, 1.0 / _SQRT2, np.where(tail, -ys / (1.0 + ys * ys) ** 1.5, 0.0))


def _gaussian(y, nu):
    with np.errstate(under="ignore"):
        g = np.exp(-y * y)
    return g if nu == 0 else -2.0 * y * g


def _sech(y):
    e = np.exp(-np.abs(y))
    return 2.0 * e / (1.0 + e * e)


_REGISTRY = {
    "zero": (_zero, ()),
    "ramp": (_ramp, (-1.0, 0.0, 1.0)),
    "algebraic": (_algebraic, (0.0,)),
    "m": (_m, (0.0, 1.0)),
    "gaussian": (_gaussian, (-3.0, 0.0, 3.0)),
    "sechpow": (None, (-3.0, 0.0, 3.0)),
}
KINDS = tuple(_REGISTRY)


@dataclass(frozen=True)
class Component:
    """``coef * base((y - center) / scale)``; ``power`` is used by ``sechpow`` only."""

    kind: str
    coef: float = 1.0
    scale: float = 1.0
    center: float = 0.0
    power: float = 1.0

    def __post_init__(self):
        if self.kind not in _REGISTRY:
            raise ValueError(f"unknown profile component {self.kind!r}; choose from {KINDS}")
        if not self.scale > 0:
            raise ValueError("component scale must be positive")

    def _base(self, s, nu):
        if self.kind == "sechpow":
            with np.errstate(under="ignore"):
                sp = _sech(s) ** self.power
            return sp if nu == 0 else -self.power * np.tanh(s) * sp
        return _REGISTRY[self.kind][0](s, nu)

    def __call__(self, y, nu=0):
        s = (np.asarray(y, dtype=float) - self.center) / self.scale
        out = self.coef * self._base(s, nu)
        return out / self.scale if nu else out

    @property
    def knots(self):
        if self.kind == "zero" or self.coef == 0:
            return ()
        return tuple(self.center + self.scale * k for k in _REGISTRY[self.kind][1])


def _as_components(parts) -> tuple:
    if parts is None:
        return ()
    if isinstance(parts, Component):
        return (parts,)
    out = []
    for p in parts:
        out.append(p if isinstance(p, Component) else Component(**p))
    return tuple(out)


@dataclass(frozen=True)
class AnalyticProfile:
    """Closed-form field ``(mu/sqrt(rho)) [R(x/rho) + i I(x/rho)]``."""

    real: tuple = ()
    imag: tuple = ()
    mu: float = 1.0
    rho: float = 1.0
    domain: str = "line"

    def __post_init__(self):
        object.__setattr__(self, "real", _as_components(self.real))
        object.__setattr__(self, "imag", _as_components(self.imag))
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}")
        if not (self.mu > 0 and self.rho > 0):
            raise ValueError("mu and rho must be positive")

    @property
    def amplitude(self) -> float:
        return self.mu / math.sqrt(self.rho)

    @property
    def is_zero(self) -> bool:
        return all(c.kind == "zero" or c.coef == 0 for c in self.real + self.imag)

    @property
    def inner_scale(self) -> float:
        """Smallest length scale present, in x units."""
        scales = [c.scale for c in self.real + self.imag if c.kind != "zero" and c.coef != 0]
        return self.rho * min(scales) if scales else math.inf

    def knots_y(self):
        ks = set()
        for c in self.real + self.imag:
            ks.update(c.knots)
        if self.domain == "halfline":
            ks = {k for k in ks if k > 0}
        return tuple(sorted(ks))

    def knots(self):
        return tuple(self.rho * k for k in self.knots_y())

    def parts_y(self, y):
        """(R, I, R', I') at inner coordinates y."""
        y = np.asarray(y, dtype=float)
        z = np.zeros_like(y)
        R = sum((c(y) for c in self.real), z)
        I = sum((c(y) for c in self.imag), z)
        dR = sum((c(y, 1) for c in self.real), z)
        dI = sum((c(y, 1) for c in self.imag), z)
        return R, I, dR, dI

    def __call__(self, x):
        R, I, _, _ = self.parts_y(np.asarray(x, dtype=float) / self.rho)
        return self.amplitude * (R + 1j * I)

    def deriv(self, x):
        _, _, dR, dI = self.parts_y(np.asarray(x, dtype=float) / self.rho)
        return (self.amplitude / self.rho) * (dR + 1j * dI)

    def scaled(self, mu: float = 1.0, rho: float = 1.0) -> "AnalyticProfile":
        return replace(self, mu=self.mu * mu, rho=self.rho * rho)

    def to_dict(self):
        comp = lambda c: {"kind": c.kind, "coef": c.coef, "scale": c.scale,
                          "center": c.center, "power": c.power}
        return {"real": [comp(c) for c in self.real], "imag": [comp(c) for c in self.imag],
                "mu": self.mu, "rho": self.rho, "domain": self.domain}


# --------------------------------------------------------------------------
# sampled fields


@dataclass(frozen=True)
class SampledField:
    """Uniform-grid samples. Line grids are periodic on ``[x_min, x_max)``;
    half-line grids cover ``[0, x_max]`` inclusive."""

    x_min: float
    x_max: float
    values: np.ndarray = field(repr=False)
    domain: str = "line"

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=complex)
        object.__setattr__(self, "values", v)
        n = v.size
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}")
        if n < 16:
            raise ValueError("a sampled field needs at least 16 points")
        if self.domain == "line" and n & (n - 1):
            raise ValueError("line grids need a power-of-two number of points")
        if self.domain == "halfline" and self.x_min != 0.0:
            raise ValueError("half-line grids start at x = 0")
        if not self.x_max > self.x_min:
            raise ValueError("empty grid")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        span = self.x_max - self.x_min
        return span / self.n if self.domain == "line" else span / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    @classmethod
    def from_profile(cls, profile: AnalyticProfile, n: int, x_max: float,
                     x_min: Optional[float] = None, check: bool = True):
        """Sample ``profile``. Line grids default to ``[-x_max, x_max)``.

        Refuses (``UnderResolvedError``) when the profile's inner scale is below
        eight grid spacings.
        """
        if profile.domain == "line":
            lo = -x_max if x_min is None else x_min
            h = (x_max - lo) / n
        else:
            lo = 0.0
            h = x_max / (n - 1)
        if check and profile.inner_scale < 8 * h:
            raise UnderResolvedError(
                f"inner scale {profile.inner_scale:.3e} is below 8h = {8 * h:.3e}; "
                "refine the grid or use the analytic path")
        xs = lo + h * np.arange(n)
        return cls(lo, x_max, profile(xs), profile.domain)

    def with_values(self, values) -> "SampledField":
        return SampledField(self.x_min, self.x_max, values, self.domain)

    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def dx(self) -> np.ndarray:
        u = self.values
        if self.domain == "line":
            return np.fft.ifft(1j * self.wavenumbers() * np.fft.fft(u))
        h = self.h
        d = np.empty_like(u)
        d[1:-1] = (u[2:] - u[:-2]) / (2 * h)
        d[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        d[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
        return d

    def grid_sum(self, f: np.ndarray) -> float:
        """Trapezoid rule (periodic for line grids)."""
        f = np.asarray(f, dtype=float)
        if self.domain == "line":
            return self.h * math.fsum(f)
        return self.h * (math.fsum(f) - 0.5 * (f[0] + f[-1]))

    def interpolate(self, xq, with_derivative: bool = True):
        """Local 8-point Lagrange interpolation of u (and of the grid derivative)."""
        xq = np.asarray(xq, dtype=float)
        t = (xq - self.x_min) / self.h
        base = np.floor(t).astype(int) - 3
        if self.domain == "halfline":
            base = np.clip(base, 0, self.n - 8)
        s = t - base
        offs = np.arange(8)
        w = np.ones(xq.shape + (8,))
        for j in range(8):
            for k in range(8):
                if k != j:
                    w[..., j] *= (s - k) / (j - k)
        idx = base[..., None] + offs
        if self.domain == "line":
            idx %= self.n
        u = np.sum(w * self.values[idx], axis=-1)
        if not with_derivative:
            return u
        return u, np.sum(w * self.dx()[idx], axis=-1)

    # -- serialization -------------------------------------------------------
    def to_csv(self, path):
        x = self.x
        with open(path, "w") as fh:
            fh.write("x,re,im\n")
            for xi, v in zip(x, self.values):
                fh.write(f"{xi:.17g},{v.real:.17g},{v.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path, domain: str = "line"):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        x = data[:, 0]
        h = x[1] - x[0]
        x_max = x[-1] + h if domain == "line" else x[-1]
        return cls(float(x[0]), float(x_max), data[:, 1] + 1j * data[:, 2], domain)

    _MAGIC = b"NLSF"
    _HEADER = struct.Struct("<4sBBddQ")

    def to_bytes(self) -> bytes:
        head = self._HEADER.pack(self._MAGIC, 1, DOMAINS.index(self.domain),
                                 self.x_min, self.x_max, self.n)
        payload = np.empty(2 * self.n, dtype="<f8")
        payload[0::2] = self.values.real
        payload[1::2] = self.values.imag
        return head + payload.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes):
        magic, version, dom, lo, hi, n = cls._HEADER.unpack_from(blob)
        if magic != cls._MAGIC or version != 1:
            raise ValueError("not a sampled-field container")
        data = np.frombuffer(blob, dtype="<f8", offset=cls._HEADER.size, count=2 * n)
        return cls(lo, hi, data[0::2] + 1j * data[1::2], DOMAINS[dom])

    def save(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path):
        p = Path(path)
        if p.suffix == ".csv":
            return cls.from_csv(p)
        return cls.from_bytes(p.read_bytes())


# --------------------------------------------------------------------------
# integration engine

Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def integrate(u, integrand: Integrand, region: str = "full", weight_knots: Iterable[float] = (),
              tol: float = 1e-12) -> QuadResult:
    """Integrate ``integrand(x, u(x), u'(x))`` over the field's domain.

    ``region`` is ``"full"`` or ``"tail_ge_1"`` (``|x| >= 1``). ``weight_knots`` are
    x-positions where the integrand has kinks besides the profile's own knots.
    """
    if region not in ("full", "tail_ge_1"):
        raise ValueError("region must be 'full' or 'tail_ge_1'")
    if isinstance(u, SampledField):
        return _integrate_sampled(u, integrand, region, tuple(weight_knots))
    return _integrate_analytic(u, integrand, region, tuple(weight_knots), tol)


def _integrate_analytic(u: AnalyticProfile, integrand, region, wknots, tol):
    if u.is_zero:
        return QuadResult(0.0, 0.0, 0)
    rho, amp = u.rho, u.amplitude

    def g(y):
        R, I, dR, dI = u.parts_y(y)
        return rho * integrand(rho * y, amp * (R + 1j * I), (amp / rho) * (dR + 1j * dI))

    knots = set(u.knots_y()) | {k / rho for k in wknots}
    lo = 0.0 if u.domain == "halfline" else -math.inf
    if region == "full":
        spans = [(lo, math.inf)]
    else:
        spans = [(1.0 / rho, math.inf)]
        if u.domain == "line":
            spans.insert(0, (-math.inf, -1.0 / rho))
    val = err = 0.0
    panels = 0
    ok = True
    for a, b in spans:
        r = _quad(g, a, b, breakpoints=knots, tol=tol)
        val += r.value
        err += r.error
        panels += r.panels
        ok &= r.converged
    return QuadResult(val, err, panels, ok)


def _integrate_sampled(u: SampledField, integrand, region, wknots):
    x = u.x
    if not wknots:
        f = np.real(integrand(x, u.values, u.dx()))
        if region == "tail_ge_1":
            f = np.where(np.abs(x) >= 1.0, f, 0.0)
        return QuadResult(u.grid_sum(f), 0.0, u.n)
    # kinked weights: composite Gauss-Legendre between knots on interpolated data
    hi = u.x_max if u.domain == "halfline" else u.x_max - u.h
    cuts = sorted({u.x_min, hi} | {k for k in wknots if u.x_min < k < hi})
    if region == "tail_ge_1":
        cuts = sorted(set(cuts) | {c for c in (-1.0, 1.0) if u.x_min < c < hi})
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if region == "tail_ge_1" and -1.0 <= 0.5 * (a + b) <= 1.0:
            continue
        xa, wa = gauss_legendre_panels(a, b, min(2 * u.h, (b - a) / 400))
        xs.append(xa)
        ws.append(wa)
    xq, wq = np.concatenate(xs), np.concatenate(ws)
    v, vx = u.interpolate(xq)
    total = math.fsum(wq * np.real(integrand(xq, v, vx)))
    if u.domain == "line" and region == "full":
        # periodic closing cell [x_max - h, x_max)
        last = (u.x_max - u.h, u.x_max)
        xa, wa = gauss_legendre_panels(*last, 2 * u.h)
        va, vxa = u.interpolate(xa)
        total += math.fsum(wa * np.real(integrand(xa, va, vxa)))
    return QuadResult(total, 0.0, xq.size)


# --------------------------------------------------------------------------
# norms


def _abs2(v):
    return v.real ** 2 + v.imag ** 2


def l2_norm_sq(u, region: str = "full", tol: float = 1e-12) -> QuadResult:
    return integrate(u, lambda x, v, vx: _abs2(v), region, tol=tol)


def l6_norm_6(u, tol: float = 1e-12) -> QuadResult:
    return integrate(u, lambda x, v, vx: _abs2(v) ** 3, tol=tol)


def h1_seminorm_sq(u, tol: float = 1e-12) -> QuadResult:
    return integrate(u, lambda x, v, vx: _abs2(vx), tol=tol)


def trace_at_zero(u) -> complex:
    if u.domain != "halfline":
        raise ValueError("trace at zero is defined for half-line fields only")
    if isinstance(u, SampledField):
        return complex(u.values[0])
    return complex(u(np.array([0.0]))[0])
