"""Virial weight functions phi, their derivatives up to order three, and Psi = int_0^x phi.

``LineWeight`` is the odd, compactly supported whole-line weight: linear on
``|x| <= 1``, a cubic bend up to ``1 + 1/sqrt(3)``, a vertically reflected cubic up
to 1.6, and a mollified cubic that is cut off at ``|x| = 2``.
``HalflineWeight`` is ``(x^2 + x) exp(-x)`` on ``[0, inf)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize_scalar

from .quadrature import _KW as _KR_WEIGHTS, _NODES as _KR_NODES

SQRT3 = math.sqrt(3.0)
KINK = 1.0 + 1.0 / SQRT3          # end of the cubic bend
JOIN = 1.6                        # centre of the mollifier
EDGE = 2.0                        # support edge
MOLLIFIER_HALF_WIDTH = 0.4
MOLLIFIERS = ("rescaled", "literal")


@dataclass(frozen=True)
class SupNorms:
    phi2: float
    phi3: float
    argmax_phi2: float
    argmax_phi3: float
    samples_per_branch: int


def _bump(s, order):
    """Derivatives of e * exp(-1/(1 - s^4)) with respect to s, zero for |s| >= 1."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    ss = np.where(inside, s, 0.0)
    w = 1.0 - ss ** 4
    # g = -1/w and its s-derivatives
    w1, w2, w3 = -4 * ss ** 3, -12 * ss ** 2, -24 * ss
    g1 = w1 / w ** 2
    g2 = -2 * w1 ** 2 / w ** 3 + w2 / w ** 2
    g3 = 6 * w1 ** 3 / w ** 4 - 6 * w1 * w2 / w ** 3 + w3 / w ** 2
    with np.errstate(under="ignore"):
        b = np.exp(1.0 - 1.0 / w)
    # near |s| = 1 the exponential underflows before the rational factors overflow
    inside = inside & (b > 0.0)
    g1, g2, g3, b = (np.where(inside, g, 0.0) for g in (g1, g2, g3, b))
    if order == 0:
        out = b
    elif order == 1:
        out = b * g1
    elif order == 2:
        out = b * (g1 ** 2 + g2)
    else:
        out = b * (g1 ** 3 + 3 * g1 * g2 + g3)
    return np.where(inside, out, 0.0)


class LineWeight:
    """Compactly supported odd weight on the whole line.

    Parameters
    ----------
    mollifier : {"rescaled", "literal"}
        How the mollifier argument is read. ``literal`` uses ``0.4 (x - 1.6)`` and
        therefore does not vanish at ``|x| = 2`` (phi jumps there); ``rescaled``
        uses ``(x - 1.6) / 0.4`` which vanishes with all derivatives at the edge.
    """

    kind = "line_compact"
    domain = "line"
    knots = (-EDGE, -JOIN, -KINK, -1.0, 1.0, KINK, JOIN, EDGE)
    support = (-EDGE, EDGE)

    def __init__(self, mollifier: str = "rescaled", psi_nodes: int = 4097):
        if mollifier not in MOLLIFIERS:
            raise ValueError(f"mollifier must be one of {MOLLIFIERS}")
        self.mollifier = mollifier
        self._kappa = 1.0 / MOLLIFIER_HALF_WIDTH if mollifier == "rescaled" else MOLLIFIER_HALF_WIDTH
        self._psi_join = self._psi_closed(np.array([JOIN]))[0]
        self._build_psi_table(psi_nodes)
        self._sup = None

    def __repr__(self):
        return f"LineWeight(mollifier={self.mollifier!r})"

    # -- branch formulas on x >= 0 -------------------------------------------
    def _mollifier(self, x, order):
        s = self._kappa * (x - JOIN)
        return _bump(s, order) * self._kappa ** order

    def _branch(self, idx, x, order):
        x = np.asarray(x, dtype=float)
        if idx == 0:
            return [x, np.ones_like(x), np.zeros_like(x), np.zeros_like(x)][order]
        if idx == 1:
            d = x - 1.0
            return [x - d ** 3, 1 - 3 * d ** 2, -6 * d, np.full_like(x, -6.0)][order]
        if idx == 2:
            q = -x + 1.0 + 2.0 / SQRT3
            return [-x + 2 * KINK - q ** 3, -1 + 3 * q ** 2, -6 * q, np.full_like(x, 6.0)][order]
        if idx == 3:
            d = x - 1.0
            p = [x - d ** 3, 1 - 3 * d ** 2, -6 * d, np.full_like(x, -6.0)]
            r = [self._mollifier(x, k) for k in range(order + 1)]
            binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]][order]
            return sum(binom[k] * p[order - k] * r[k] for k in range(order + 1))
        return np.zeros_like(x)

    @staticmethod
    def _branch_index(ax):
        # 0: [0,1]  1: (1,KINK]  2: (KINK,1.6]  3: (1.6,2)  4: [2,inf)
        idx = np.full(ax.shape, 4, dtype=int)
        idx[ax < EDGE] = 3
        idx[ax <= JOIN] = 2
        idx[ax <= KINK] = 1
        idx[ax <= 1.0] = 0
        return idx

    def phi(self, x, order: int = 0):
        """order-th derivative of phi, vectorised, exact closed forms on every branch."""
        if order not in (0, 1, 2, 3):
            raise ValueError("order must be 0..3")
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        idx = self._branch_index(ax)
        out = np.zeros_like(ax)
        for b in range(4):
            sel = idx == b
            if np.any(sel):
                out[sel] = self._branch(b, ax[sel], order)
        # phi is odd: the k-th derivative has parity (-1)^(k+1)
        if order % 2 == 0:
            out = np.where(x < 0, -out, out)
        return float(out) if out.ndim == 0 else out

    # -- antiderivative -------------------------------------------------------
    @staticmethod
    def _psi_closed(ax):
        out = np.empty_like(ax)
        b0 = ax <= 1.0
        b1 = (ax > 1.0) & (ax <= KINK)
        b2 = ax > KINK
        out[b0] = 0.5 * ax[b0] ** 2
        d = ax[b1] - 1.0
        out[b1] = 0.5 + 0.5 * (ax[b1] ** 2 - 1.0) - 0.25 * d ** 4
        psi_kink = 0.5 + 0.5 * (KINK ** 2 - 1.0) - 0.25 / 9.0

        def prim(y):
            q = -y + 1.0 + 2.0 / SQRT3
            return -0.5 * y ** 2 + 2 * KINK * y + 0.25 * q ** 4

        y = np.minimum(ax[b2], JOIN)
        out[b2] = psi_kink + prim(y) - prim(KINK)
        return out

    def _build_psi_table(self, n):
        xs = np.linspace(JOIN, EDGE, n)
        # one 15-point Kronrod panel per cell: cells are ~1e-4 wide, phi is smooth
        mid = 0.5 * (xs[:-1] + xs[1:])
        half = 0.5 * np.diff(xs)
        nodes = mid[:, None] + half[:, None] * _KR_NODES[None, :]
        pieces = half * (self._branch(3, nodes, 0) @ _KR_WEIGHTS)
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        vals = self._psi_join + cum
        # right end: one-sided limit of phi from inside the branch
        dphi = self._branch(3, xs, 0)
        self._psi_spline = CubicHermiteSpline(xs, vals, dphi)
        self._psi_edge = float(vals[-1])

    def psi(self, x):
        """Psi(x) = int_0^x phi; even, constant for |x| >= 2."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.empty_like(ax)
        low = ax <= JOIN
        mid = (ax > JOIN) & (ax < EDGE)
        high = ax >= EDGE
        out[low] = self._psi_closed(ax[low])
        out[mid] = self._psi_spline(ax[mid])
        out[high] = self._psi_edge
        return float(out) if out.ndim == 0 else out

    @property
    def psi_plateau(self) -> float:
        return self._psi_edge

    # -- norms and diagnostics --------------------------------------------------
    def _branch_intervals(self):
        return [(1.0, KINK, 1), (KINK, JOIN, 2), (JOIN, EDGE, 3)]

    def sup_norms(self, samples: int = 100_001) -> SupNorms:
        """Estimate ||phi''||_inf and ||phi'''||_inf by dense sampling per branch
        followed by bounded scalar refinement around the best sample."""
        if self._sup is not None and self._sup.samples_per_branch == samples:
            return self._sup
        best = {2: (0.0, 0.0), 3: (0.0, 0.0)}
        for a, b, idx in self._branch_intervals():
            xs = np.linspace(a, b, samples)
            # branch formulas are evaluated on the closed interval: one-sided limits
            for order in (2, 3):
                v = np.abs(self._branch(idx, xs, order))
                i = int(np.argmax(v))
                val, arg = float(v[i]), float(xs[i])
                lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, samples - 1)]
                if hi > lo:
                    res = minimize_scalar(lambda t: -abs(float(self._branch(idx, np.array(t), order))),
                                          bounds=(lo, hi), method="bounded",
                                          options={"xatol": 1e-14})
                    if -res.fun > val:
                        val, arg = float(-res.fun), float(res.x)
                if val > best[order][0]:
                    best[order] = (val, arg)
        self._sup = SupNorms(best[2][0], best[3][0], best[2][1], best[3][1], samples)
        return self._sup

    def continuity_report(self):
        """Jumps phi^(k)(knot+) - phi^(k)(knot-) at the positive knots, k = 0..3."""
        rows = []
        for knot, left, right in ((1.0, 0, 1), (KINK, 1, 2), (JOIN, 2, 3), (EDGE, 3, 4)):
            for k in range(4):
                lv = float(self._branch(left, np.array(knot), k))
                rv = float(self._branch(right, np.array(knot), k))
                rows.append({"knot": knot, "order": k, "left": lv, "right": rv, "jump": rv - lv})
        return rows


class HalflineWeight:
    """phi(x) = (x^2 + x) exp(-x) on the half line."""

    kind = "halfline_exp"
    domain = "halfline"
    knots = ()
    support = (0.0, math.inf)
    psi_plateau = 3.0

    def __repr__(self):
        return "HalflineWeight()"

    def phi(self, x, order: int = 0):
        if order not in (0, 1, 2, 3):
            raise ValueError("order must be 0..3")
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("half-line weight is defined for x >= 0 only")
        poly = [(1.0, 1.0, 0.0), (-1.0, 1.0, 1.0), (1.0, -3.0, 0.0), (-1.0, 5.0, -3.0)][order]
        with np.errstate(under="ignore"):
            out = (poly[0] * x ** 2 + poly[1] * x + poly[2]) * np.exp(-x)
        return float(out) if out.ndim == 0 else out

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("half-line weight is defined for x >= 0 only")
        with np.errstate(under="ignore"):
            out = 3.0 - (x ** 2 + 3 * x + 3) * np.exp(-x)
        return float(out) if out.ndim == 0 else out

    def sup_norms(self, samples: int = 0) -> SupNorms:
        """Exact: phi'' peaks at (5 - sqrt 13)/2, phi''' at the origin with value -3."""
        x2 = 0.5 * (5.0 - math.sqrt(13.0))
        return SupNorms(abs(self.phi(x2, 2)), 3.0, x2, 0.0, samples)


def make_weight(kind: str, mollifier: str = "rescaled"):
    if kind in ("line", "line_compact"):
        return LineWeight(mollifier)
    if kind in ("halfline", "halfline_exp"):
        return HalflineWeight()
    raise ValueError(f"unknown weight kind {kind!r}")
