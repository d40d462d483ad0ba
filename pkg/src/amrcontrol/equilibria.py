"""Equilibrium points of the rescaled system and their existence conditions.

P0 = (0, 0) always exists, P1 = (0, (R_r-1)/R_r) exists iff R_r > 1, and
the coexistence point P* lies on the line

    x = (R_s-1)/R_s - ((R_s+h_s)/R_s) y

with y* a root of p(y) = -a2 y^2 + a1 y + a0 in (0, y_max).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import DimensionlessParams, DimensionlessState, Thresholds, compute_thresholds, rhs_dimensionless

__all__ = [
    "DegenerateCase",
    "QuadraticCoeffs",
    "Equilibrium",
    "quadratic_coeffs",
    "a2_factored",
    "y_max",
    "x_on_line",
    "find_equilibria",
    "verify_pymax_negative",
    "equilibria_report",
]

MARGIN = 1e-12


class DegenerateCase(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadraticCoeffs:
    a2: float
    a1: float
    a0: float

    def __call__(self, y):
        return -self.a2 * y * y + self.a1 * y + self.a0


@dataclass(frozen=True)
class Equilibrium:
    kind: str  # "P0", "P1" or "Pstar"
    point: DimensionlessState | None
    exists: bool
    reason: str
    residual: float = float("nan")
    marginal: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["point"] = None if self.point is None else [self.point.x, self.point.y]
        if not math.isfinite(self.residual):
            d["residual"] = None
        return d


def quadratic_coeffs(th: Thresholds, dp: DimensionlessParams) -> QuadraticCoeffs:
    q = dp.q
    a2 = th.h_r2 * (th.R_s + th.h_s) - th.h_s * th.R_r
    a1 = th.h_r2 * (th.R_s - 1.0) - th.h_r1 * q * (th.R_s + th.h_s) + th.R_r - th.R_s
    a0 = th.h_r1 * q * (th.R_s - 1.0)
    return QuadraticCoeffs(a2, a1, a0)


def a2_factored(th: Thresholds, dp: DimensionlessParams) -> float:
    """a2 written as h_r2 (beta_s - beta_r)/removal + h_r2 h_s."""
    return th.h_r2 * (dp.beta_s - dp.beta_r) / dp.removal + th.h_r2 * th.h_s


def y_max(th: Thresholds) -> float:
    """Largest y for which the coexistence line still has x > 0."""
    return (th.R_s - 1.0) / (th.R_s + th.h_s)


def x_on_line(th: Thresholds, y):
    return (th.R_s - 1.0) / th.R_s - (th.R_s + th.h_s) / th.R_s * y


def _gt(lhs, rhs):
    """Strict lhs > rhs plus a flag for being within MARGIN of equality."""
    scale = max(1.0, abs(lhs), abs(rhs))
    return lhs > rhs, abs(lhs - rhs) <= MARGIN * scale


def _residual(dp, x, y):
    return float(np.max(np.abs(rhs_dimensionless((x, y), dp))))


def _positive_root(c: QuadraticCoeffs) -> float:
    # root of a2 y^2 - a1 y - a0 = 0 taken with the + sign, cancellation-free
    disc = c.a1 * c.a1 + 4.0 * c.a2 * c.a0
    if disc < 0:
        raise DegenerateCase(f"negative discriminant {disc!r}")
    sq = math.sqrt(disc)
    if c.a1 >= 0:
        return (c.a1 + sq) / (2.0 * c.a2)
    return 2.0 * c.a0 / (sq - c.a1)


def _make(kind, dp, x, y, exists, reason, marginal):
    point = DimensionlessState(max(x, 0.0), max(y, 0.0)) if exists else None
    if not exists and x >= 0 and y >= 0 and math.isfinite(x) and math.isfinite(y):
        point = DimensionlessState(x, y)
    res = _residual(dp, x, y) if math.isfinite(x) and math.isfinite(y) else float("nan")
    return Equilibrium(kind, point, exists, reason, res, marginal)


def _pstar(dp: DimensionlessParams, th: Thresholds, coeffs: QuadraticCoeffs) -> Equilibrium:
    rs_ok, rs_marg = _gt(th.R_s, 1.0)
    if not rs_ok:
        return Equilibrium("Pstar", None, False, "R_s <= 1: no coexistence line in the positive quadrant",
                           marginal=rs_marg)
    ym = y_max(th)
    h1, h2 = dp.h1, dp.h2
    if h2 < 1.0 and h1 < 1.0:
        case = "0<=h1<1, 0<=h2<1"
        cond, marg = _gt(th.h_s + th.R_s, th.R_r * (th.h_s + 1.0))
        reason = f"{case}: R_s>1 and R_r(h_s+1) < h_s+R_s"
        if coeffs.a2 <= 0:
            raise DegenerateCase(f"a2 = {coeffs.a2!r} <= 0 with h2 < 1")
        y = _positive_root(coeffs)
    elif h2 < 1.0:
        case = "h1=1, 0<=h2<1"
        c1, m1 = _gt(coeffs.a1, 0.0)  # h_r2(R_s-1) + R_r - R_s > 0
        c2, m2 = _gt(th.h_s + th.R_s, th.R_r * (th.h_s + 1.0))
        cond, marg = c1 and c2, m1 or m2
        reason = f"{case}: R_s>1, h_r2(R_s-1)+R_r-R_s > 0 and R_r(h_s+1) < h_s+R_s"
        if coeffs.a2 == 0:
            raise DegenerateCase("a2 = 0 in the h1=1 case")
        y = coeffs.a1 / coeffs.a2
    elif h1 < 1.0:
        # a2 = 0: p is linear, root y = -a0/a1 needs a1 < 0
        case = "h2=1, 0<=h1<1"
        c1, m1 = _gt(0.0, coeffs.a1)
        c2, m2 = _gt(th.R_s, th.R_r)
        cond, marg = c1 and c2, m1 or m2
        reason = f"{case}: R_s>1, a1 = -h_r1 q R_s + R_r - R_s < 0 and R_r < R_s"
        if coeffs.a1 == 0:
            raise DegenerateCase("a1 = 0 in the h2=1 case")
        y = -coeffs.a0 / coeffs.a1
    else:
        return Equilibrium("Pstar", None, False, "h1=h2=1: no mutation or transfer, no coexistence point",
                           marginal=rs_marg)
    x = x_on_line(th, y)
    exists = bool(cond and 0.0 < y < ym and x > 0.0)
    if cond and not exists:
        # analytic condition met but the root left (0, y_max) by roundoff
        marg = True
    if not exists:
        reason = "condition fails: " + reason
    return _make("Pstar", dp, x, y, exists, reason, marg or rs_marg)


def find_equilibria(dp: DimensionlessParams) -> list[Equilibrium]:
    """P0, P1 and P* (in that order) with existence flags and residuals."""
    th = compute_thresholds(dp)
    out = [Equilibrium("P0", DimensionlessState(0.0, 0.0), True, "always exists", _residual(dp, 0.0, 0.0))]
    ok, marg = _gt(th.R_r, 1.0)
    y1 = (th.R_r - 1.0) / th.R_r
    out.append(_make("P1", dp, 0.0, y1, ok, "R_r > 1" if ok else "R_r <= 1", marg))
    out.append(_pstar(dp, th, quadratic_coeffs(th, dp)))
    return out


def verify_pymax_negative(th: Thresholds, dp: DimensionlessParams) -> bool:
    """True iff p(y_max) < 0, evaluating p directly from its coefficients.

    As R_s -> 1+ both y_max and p(y_max) shrink to zero, so the sign becomes
    roundoff-dominated for R_s - 1 below roughly 1e-8.
    """
    return bool(quadratic_coeffs(th, dp)(y_max(th)) < 0.0)


def equilibria_report(dp: DimensionlessParams) -> str:
    eqs = find_equilibria(dp)
    th = compute_thresholds(dp)
    payload = {
        "thresholds": asdict(th),
        "equilibria": [e.to_dict() for e in eqs],
    }
    return json.dumps(payload, indent=2)
