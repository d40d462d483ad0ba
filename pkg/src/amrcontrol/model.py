"""Parameters, states, thresholds and right-hand sides of the S/R bacteria model.

Dimensional system (time in hours, populations in cells)::

    dS/dt = beta_S S (1 - (S+R)/K) - (alpha_bar Lambda + gamma_bar) S
            - (1-h1) q_bar Lambda S - (1-h2) a R S
    dR/dt = beta_R R (1 - (S+R)/K) + (1-h1) q_bar Lambda S
            + (1-h2) a R S - gamma_bar R

The mobile-genetic-element law P(R) = a R^n is used with n = 1 throughout.
Rescaling x = S/K, y = R/K, tau = a K t gives the dimensionless system
handled by :func:`rhs_dimensionless`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "ParameterError",
    "DimensionalParams",
    "Controls",
    "DimensionalState",
    "DimensionlessState",
    "DimensionlessParams",
    "Thresholds",
    "nondimensionalize",
    "compute_thresholds",
    "params_from_thresholds",
    "rhs_dimensional",
    "rhs_dimensionless",
    "rhs_dimensionless_threshold",
]


class ParameterError(ValueError):
    """Invalid model parameter; ``field`` names the offender."""

    def __init__(self, field: str, constraint: str, value=None):
        self.field = field
        self.constraint = constraint
        self.value = value
        msg = f"{field}: must satisfy {constraint}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


def _check_positive(obj, names):
    for name in names:
        v = getattr(obj, name)
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v)):
            raise ParameterError(name, "finite number", v)
        if v <= 0:
            raise ParameterError(name, "> 0", v)


def _check_unit(obj, names, *, lower_open=False):
    for name in names:
        v = getattr(obj, name)
        if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v)):
            raise ParameterError(name, "finite number", v)
        if lower_open and not 0 < v <= 1:
            raise ParameterError(name, "0 < value <= 1", v)
        if not lower_open and not 0 <= v <= 1:
            raise ParameterError(name, "0 <= value <= 1", v)


@dataclass(frozen=True)
class DimensionalParams:
    """Table-1 parameters of the dimensional model.

    ``Lambda`` is the administration rate (its reciprocal is the dosing
    interval). ``beta_R <= beta_S`` is enforced; equality is accepted but
    makes the leading coefficient of the coexistence quadratic degenerate
    towards ``h_r2 * h_s``.
    """

    beta_S: float
    beta_R: float
    alpha_bar: float
    Lambda: float
    gamma_bar: float
    q_bar: float
    a: float
    K: float

    def __post_init__(self):
        _check_positive(self, ("beta_S", "beta_R", "Lambda", "gamma_bar", "a", "K"))
        _check_unit(self, ("alpha_bar", "q_bar"), lower_open=True)
        if self.beta_R > self.beta_S:
            raise ParameterError("beta_R", "beta_R <= beta_S", self.beta_R)

    def replace(self, **changes) -> "DimensionalParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return DimensionalParams(**values)


@dataclass(frozen=True)
class Controls:
    """Constant control levels: h1 blocks natural mutation, h2 blocks HGT."""

    h1: float = 0.0
    h2: float = 0.0

    def __post_init__(self):
        _check_unit(self, ("h1", "h2"))


@dataclass(frozen=True)
class DimensionalState:
    S: float
    R: float

    def __post_init__(self):
        if not (0 <= self.S < math.inf):
            raise ParameterError("S", "finite and >= 0", self.S)
        if not (0 <= self.R < math.inf):
            raise ParameterError("R", "finite and >= 0", self.R)

    def __iter__(self):
        return iter((self.S, self.R))

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.R], dtype=float)


@dataclass(frozen=True)
class DimensionlessState:
    x: float
    y: float

    def __post_init__(self):
        if not (0 <= self.x < math.inf):
            raise ParameterError("x", "finite and >= 0", self.x)
        if not (0 <= self.y < math.inf):
            raise ParameterError("y", "finite and >= 0", self.y)

    def __iter__(self):
        return iter((self.x, self.y))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class DimensionlessParams:
    """Rescaled rates plus the (constant) controls.

    ``time_scale`` is a*K: dimensionless time is ``tau = time_scale * t``.
    It is 1.0 when the parameters were not produced by
    :func:`nondimensionalize`.
    """

    beta_s: float
    beta_r: float
    q: float
    alpha: float
    gamma: float
    h1: float = 0.0
    h2: float = 0.0
    time_scale: float = 1.0

    def __post_init__(self):
        _check_positive(self, ("beta_s", "beta_r", "q", "alpha", "gamma", "time_scale"))
        _check_unit(self, ("h1", "h2"))
        if self.beta_r > self.beta_s:
            raise ParameterError("beta_r", "beta_r <= beta_s", self.beta_r)

    @property
    def removal(self) -> float:
        """alpha + gamma + q(1-h1): per-capita loss rate of sensitive cells."""
        return self.alpha + self.gamma + self.q * (1.0 - self.h1)

    def replace(self, **changes) -> "DimensionlessParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return DimensionlessParams(**values)


@dataclass(frozen=True)
class Thresholds:
    R_r: float
    R_s: float
    h_s: float
    h_r1: float
    h_r2: float


def nondimensionalize(p: DimensionalParams, c: Controls) -> DimensionlessParams:
    """Map dimensional parameters to the rescaled system.

    Rates are divided by ``a*K``; the returned ``time_scale`` equals ``a*K`` so
    that a dimensional time ``t`` corresponds to ``tau = a*K*t``.
    """
    if not p.a > 0:
        raise ParameterError("a", "> 0", p.a)
    if not p.K > 0:
        raise ParameterError("K", "> 0", p.K)
    aK = p.a * p.K
    return DimensionlessParams(
        beta_s=p.beta_S / aK,
        beta_r=p.beta_R / aK,
        q=p.q_bar * p.Lambda / aK,
        alpha=p.alpha_bar * p.Lambda / aK,
        gamma=p.gamma_bar / aK,
        h1=c.h1,
        h2=c.h2,
        time_scale=aK,
    )


def compute_thresholds(dp: DimensionlessParams) -> Thresholds:
    if dp.gamma == 0:
        raise ParameterError("gamma", "!= 0", dp.gamma)
    removal = dp.removal
    if removal == 0:
        raise ParameterError("alpha+gamma+q(1-h1)", "!= 0", removal)
    return Thresholds(
        R_r=dp.beta_r / dp.gamma,
        R_s=dp.beta_s / removal,
        h_s=(1.0 - dp.h2) / removal,
        h_r1=(1.0 - dp.h1) / dp.gamma,
        h_r2=(1.0 - dp.h2) / dp.gamma,
    )


def params_from_thresholds(R_s, R_r, h_s, h_r1, h_r2, q, gamma) -> DimensionlessParams:
    """Invert :func:`compute_thresholds` given the mutation rate and immune rate.

    The five thresholds together with ``q`` and ``gamma`` determine the
    dimensionless parameter set uniquely::

        h1 = 1 - h_r1*gamma,  h2 = 1 - h_r2*gamma,
        removal = (1-h2)/h_s, beta_s = R_s*removal, beta_r = R_r*gamma,
        alpha = removal - gamma - q(1-h1)

    Requires ``h_s > 0`` (otherwise the removal rate is not recoverable).
    """
    h1 = 1.0 - h_r1 * gamma
    h2 = 1.0 - h_r2 * gamma
    if h_s <= 0:
        raise ParameterError("h_s", "> 0", h_s)
    removal = (1.0 - h2) / h_s
    alpha = removal - gamma - q * (1.0 - h1)
    if alpha <= 0:
        raise ParameterError("alpha", "> 0 (thresholds inconsistent with q, gamma)", alpha)
    return DimensionlessParams(
        beta_s=R_s * removal,
        beta_r=R_r * gamma,
        q=q,
        alpha=alpha,
        gamma=gamma,
        h1=min(max(h1, 0.0), 1.0),
        h2=min(max(h2, 0.0), 1.0),
    )


def _dimensional_terms(S, R, p, h1, h2):
    crowd = 1.0 - (S + R) / p.K
    mutation = (1.0 - h1) * p.q_bar * p.Lambda * S
    hgt = (1.0 - h2) * p.a * R * S
    dS = p.beta_S * S * crowd - (p.alpha_bar * p.Lambda + p.gamma_bar) * S - mutation - hgt
    dR = p.beta_R * R * crowd + mutation + hgt - p.gamma_bar * R
    return dS, dR


def rhs_dimensional(state, p: DimensionalParams, c: Controls) -> np.ndarray:
    """(dS/dt, dR/dt) for the dimensional model at constant controls."""
    S, R = state
    return np.array(_dimensional_terms(S, R, p, c.h1, c.h2))


def rhs_dimensionless(state, dp: DimensionlessParams) -> np.ndarray:
    """(f1, f2) of the rescaled system, written with the raw rates."""
    x, y = state
    crowd = 1.0 - (x + y)
    mutation = (1.0 - dp.h1) * dp.q * x
    hgt = (1.0 - dp.h2) * x * y
    f1 = dp.beta_s * x * crowd - (dp.alpha + dp.gamma) * x - mutation - hgt
    f2 = dp.beta_r * y * crowd + mutation + hgt - dp.gamma * y
    return np.array([f1, f2])


def rhs_dimensionless_threshold(state, dp: DimensionlessParams, th: Thresholds | None = None) -> np.ndarray:
    """(f1, f2) written through the thresholds.

    The prefactor gamma*h_r2/h_s is undefined at h2 = 1; use
    :func:`rhs_dimensionless` there.
    """
    if dp.h2 >= 1.0:
        raise ParameterError("h2", "< 1 for the threshold form", dp.h2)
    th = compute_thresholds(dp) if th is None else th
    x, y = state
    g = dp.gamma
    f1 = x * (g * th.h_r2 / th.h_s * (th.R_s * (1.0 - (x + y)) - 1.0 - th.h_s * y))
    f2 = g * (th.R_r * y * (1.0 - (x + y)) + th.h_r1 * dp.q * x + th.h_r2 * x * y - y)
    return np.array([f1, f2])
