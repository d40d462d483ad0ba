"""Linearisation, local stability verdicts and the R1-R5 region atlas."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .equilibria import Equilibrium, find_equilibria
from .model import DimensionlessParams, Thresholds, compute_thresholds, params_from_thresholds

__all__ = [
    "MarginalSpectrum",
    "Jacobian2",
    "StabilityVerdict",
    "jacobian_at",
    "jacobian_threshold_form",
    "jacobian_raw",
    "classify",
    "classify_all",
    "classify_region",
    "classify_region_params",
    "REGION_PATTERN",
    "sweep_params",
    "region_atlas",
]

LABELS = ("LAS", "unstable-saddle", "unstable-source", "marginal", "nonexistent")
REGIONS = ("R1", "R2", "R3", "R4", "R5", "boundary")

# stability of (P0, P1, Pstar) per region, "unstable" covering saddle and source
REGION_PATTERN = {
    "R1": ("LAS", "nonexistent", "nonexistent"),
    "R2": ("unstable", "LAS", "nonexistent"),
    "R3": ("unstable", "LAS", "nonexistent"),
    "R4": ("unstable", "unstable", "LAS"),
    "R5": ("unstable", "nonexistent", "LAS"),
}


class MarginalSpectrum(ArithmeticError):
    pass


@dataclass(frozen=True)
class Jacobian2:
    j11: float
    j12: float
    j21: float
    j22: float

    @property
    def trace(self) -> float:
        return self.j11 + self.j22

    @property
    def determinant(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21

    @property
    def eigenvalues(self) -> tuple[complex, complex]:
        half_tr = 0.5 * self.trace
        # (tr/2)^2 - det rewritten to avoid cancellation
        disc = 0.25 * (self.j11 - self.j22) ** 2 + self.j12 * self.j21
        if disc >= 0:
            root = math.sqrt(disc)
            big = half_tr + math.copysign(root, half_tr)
            small = self.determinant / big if big != 0 else half_tr - math.copysign(root, half_tr)
            return complex(big), complex(small)
        root = cmath.sqrt(disc)
        return half_tr + root, half_tr - root

    def as_array(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])


def jacobian_raw(dp: DimensionlessParams, point) -> Jacobian2:
    """Partial derivatives of f1, f2 written with the raw rates."""
    x, y = point
    u1, u2 = 1.0 - dp.h1, 1.0 - dp.h2
    return Jacobian2(
        dp.beta_s * (1.0 - 2.0 * x - y) - (dp.alpha + dp.gamma) - u1 * dp.q - u2 * y,
        -dp.beta_s * x - u2 * x,
        -dp.beta_r * y + u1 * dp.q + u2 * y,
        dp.beta_r * (1.0 - x - 2.0 * y) + u2 * x - dp.gamma,
    )


def jacobian_threshold_form(dp: DimensionlessParams, point, th: Thresholds | None = None) -> Jacobian2:
    """Jacobian written through the thresholds; needs h2 < 1."""
    th = compute_thresholds(dp) if th is None else th
    x, y = point
    g = dp.gamma
    k = g * th.h_r2 / th.h_s
    return Jacobian2(
        k * (th.R_s - 1.0 - 2.0 * th.R_s * x - (th.R_s + th.h_s) * y),
        -k * (th.R_s + th.h_s) * x,
        g * (th.h_r1 * dp.q + (th.h_r2 - th.R_r) * y),
        g * (th.R_r - 1.0 - (th.R_r - th.h_r2) * x - 2.0 * th.R_r * y),
    )


def jacobian_at(dp: DimensionlessParams, point) -> Jacobian2:
    if dp.h2 < 1.0:
        return jacobian_threshold_form(dp, point)
    return jacobian_raw(dp, point)


@dataclass(frozen=True)
class StabilityVerdict:
    kind: str
    label: str
    eigen_label: str
    theorem_label: str | None  # None where the threshold conditions make no statement
    eigenvalues: tuple[complex, complex] | None = None

    @property
    def basis(self) -> tuple[str, ...]:
        out = ("eigenvalue-numeric",)
        return out + ("theorem-condition",) if self.theorem_label is not None else out

    @property
    def agree(self) -> bool:
        if self.theorem_label is None or "marginal" in (self.eigen_label, self.theorem_label):
            return True
        return self.eigen_label == self.theorem_label


def _spectrum_label(l1: complex, l2: complex, tol: float) -> str:
    re = sorted((l1.real, l2.real))
    if any(abs(r) < tol for r in re):
        return "marginal"
    if re[1] < 0:
        return "LAS"
    if re[0] < 0:
        return "unstable-saddle"
    return "unstable-source"


def _sign_label(s1: float, s2: float) -> str:
    if s1 < 0 and s2 < 0:
        return "LAS"
    if s1 > 0 and s2 > 0:
        return "unstable-source"
    return "unstable-saddle"


def _theorem_label(dp: DimensionlessParams, th: Thresholds, eq: Equilibrium, tol: float) -> str | None:
    if not eq.exists:
        return "nonexistent"
    if eq.kind == "P0":
        # eigenvalues gamma h_r2 (R_s-1)/h_s and gamma (R_r-1)
        if dp.h2 >= 1.0 or abs(th.R_s - 1.0) < tol or abs(th.R_r - 1.0) < tol:
            return None if dp.h2 >= 1.0 else "marginal"
        return _sign_label(th.R_s - 1.0, th.R_r - 1.0)
    if eq.kind == "P1":
        # lambda1 < 0 iff R_r (1+h_s) > R_s + h_s; lambda2 = -gamma (R_r-1) < 0 since P1 exists
        s1 = (th.R_s + th.h_s) - th.R_r * (1.0 + th.h_s)
        if abs(s1) < tol:
            return "marginal"
        return _sign_label(s1, -(th.R_r - 1.0))
    # P*: covered only for 0 < h1 < 1, 0 < h2 < 1, where existence already
    # implies R_r < (R_s+h_s)/(h_s+1)
    if 0.0 < dp.h1 < 1.0 and 0.0 < dp.h2 < 1.0:
        return "LAS" if th.R_s > 1.0 and th.R_r * (th.h_s + 1.0) < th.R_s + th.h_s else "marginal"
    return None


def classify(dp: DimensionlessParams, eq: Equilibrium, tol: float = 1e-9, *,
             raise_on_marginal: bool = False) -> StabilityVerdict:
    """Stability of ``eq`` from its eigenvalues and from the threshold conditions."""
    if not eq.exists:
        return StabilityVerdict(eq.kind, "nonexistent", "nonexistent", "nonexistent")
    jac = jacobian_at(dp, (eq.point.x, eq.point.y))
    lam = jac.eigenvalues
    eigen = _spectrum_label(*lam, tol)
    if eigen == "marginal" and raise_on_marginal:
        raise MarginalSpectrum(f"{eq.kind}: eigenvalues {lam} within {tol} of the imaginary axis")
    theorem = _theorem_label(dp, compute_thresholds(dp), eq, tol)
    return StabilityVerdict(eq.kind, eigen, eigen, theorem, lam)


def classify_all(dp: DimensionlessParams, tol: float = 1e-9) -> list[StabilityVerdict]:
    return [classify(dp, eq, tol) for eq in find_equilibria(dp)]


def classify_region(th: Thresholds, tol: float = 1e-9) -> str:
    """Region R1-R5 of the (R_s, R_r) plane for interior controls.

    R2 and R3 both have P1 stable; they are split at R_s = 1, where the first
    eigenvalue at P0 changes sign (saddle for R_s < 1, source for R_s > 1).
    """
    R_s, R_r, h_s = th.R_s, th.R_r, th.h_s
    p1_line = (R_s + h_s) / (1.0 + h_s)
    if min(abs(R_s - 1.0), abs(R_r - 1.0)) < tol:
        return "boundary"
    # the P1 stability line only separates regions (R3 | R4) where R_s > 1
    if R_s > 1.0 and abs(R_r - p1_line) < tol:
        return "boundary"
    if R_s < 1.0:
        return "R1" if R_r < 1.0 else "R2"
    if R_r < 1.0:
        return "R5"
    return "R3" if R_r > p1_line else "R4"


def classify_region_params(dp: DimensionlessParams, tol: float = 1e-9) -> str:
    return classify_region(compute_thresholds(dp), tol)


def sweep_params(R_s: float, R_r: float, h_s: float, h1: float = 0.5, h2: float = 0.5) -> DimensionlessParams:
    """A valid parameter set realising the given (R_s, R_r, h_s).

    gamma and q are chosen as fractions of the removal rate so that alpha stays
    positive and beta_r <= beta_s holds.
    """
    removal = (1.0 - h2) / h_s
    gamma = 0.1 * removal * min(1.0, R_s / R_r) if R_r > 0 else 0.1 * removal
    q = 0.1 * removal
    return params_from_thresholds(R_s, R_r, h_s, (1.0 - h1) / gamma, (1.0 - h2) / gamma, q, gamma)


def region_atlas(h_s: float, grid: int = 200, rs_max: float = 2.0, rr_max: float = 2.0):
    """Labels on the grid k*rs_max/grid, k = 1..grid (and likewise for R_r).

    Returns a list of (R_s, R_r, h_s, region) rows, R_s varying slowest.
    """
    rs_vals = np.arange(1, grid + 1) * (rs_max / grid)
    rr_vals = np.arange(1, grid + 1) * (rr_max / grid)
    rows = []
    for R_s in rs_vals:
        for R_r in rr_vals:
            th = Thresholds(R_r=float(R_r), R_s=float(R_s), h_s=h_s, h_r1=float("nan"), h_r2=float("nan"))
            rows.append((float(R_s), float(R_r), h_s, classify_region(th)))
    return rows
