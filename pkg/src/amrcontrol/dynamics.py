"""Time integration of the model and trapping-region monitoring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import (
    Controls,
    DimensionalParams,
    DimensionlessParams,
    ParameterError,
    _dimensional_terms,
)

__all__ = [
    "IntegrationError",
    "StepBudgetExceeded",
    "NonFiniteState",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "simulate_dimensional",
    "simulate_dimensionless",
    "in_omega",
    "TrappingReport",
    "check_trapping",
]

METHODS = ("dopri45", "rk4")
FORMULATIONS = {"dimensional": ("t", "S", "R"), "dimensionless": ("tau", "x", "y")}


class IntegrationError(RuntimeError):
    pass


class StepBudgetExceeded(IntegrationError):
    def __init__(self, max_steps, t):
        self.max_steps = max_steps
        self.t = t
        super().__init__(f"step budget of {max_steps} exhausted at t={t!r}")


class NonFiniteState(IntegrationError):
    def __init__(self, t, state):
        self.t = t
        self.state = state
        super().__init__(f"non-finite state {state!r} at t={t!r}")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "dopri45"
    step: float = 1e-3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError("method", f"one of {METHODS}", self.method)
        if not self.step > 0:
            raise ParameterError("step", "> 0", self.step)
        if not self.rel_tol > 0:
            raise ParameterError("rel_tol", "> 0", self.rel_tol)
        if not self.abs_tol > 0:
            raise ParameterError("abs_tol", "> 0", self.abs_tol)
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ParameterError("max_steps", "integer >= 1", self.max_steps)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    formulation: str = "dimensional"
    # accepted-step nodes, kept for dense re-sampling
    _nodes: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.formulation not in FORMULATIONS:
            raise ParameterError("formulation", f"one of {tuple(FORMULATIONS)}", self.formulation)
        if self.states.ndim != 2 or len(self.states) != len(self.times):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite entries")

    @property
    def columns(self) -> tuple[str, str, str]:
        return FORMULATIONS[self.formulation]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def clamped(self) -> np.ndarray:
        """States with floating-point undershoot below zero set to 0."""
        return np.maximum(self.states, 0.0)

    def sample(self, t_eval) -> np.ndarray:
        """Evaluate the trajectory at ``t_eval`` by cubic Hermite interpolation."""
        if self._nodes is None:
            raise ValueError("trajectory carries no dense-output data")
        return _hermite_eval(*self._nodes, np.asarray(t_eval, dtype=float))


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# difference between 5th- and embedded 4th-order weights
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def _hermite_eval(ts, ys, fs, t_eval):
    idx = np.clip(np.searchsorted(ts, t_eval, side="right") - 1, 0, len(ts) - 2)
    t0, t1 = ts[idx], ts[idx + 1]
    h = t1 - t0
    s = ((t_eval - t0) / h)[:, None]
    h = h[:, None]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * ys[idx] + h10 * h * fs[idx] + h01 * ys[idx + 1] + h11 * h * fs[idx + 1]


def _check_finite(t, y):
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(t, tuple(float(v) for v in y))


def _rk4(rhs, y0, t0, t_end, cfg):
    n = max(1, int(math.ceil((t_end - t0) / cfg.step - 1e-12)))
    if n > cfg.max_steps:
        raise StepBudgetExceeded(cfg.max_steps, t0)
    ts = t0 + cfg.step * np.arange(n + 1, dtype=float)
    ts[-1] = t_end
    ys = np.empty((n + 1, len(y0)))
    fs = np.empty_like(ys)
    y = np.array(y0, dtype=float)
    ys[0] = y
    for k in range(n):
        t, h = ts[k], ts[k + 1] - ts[k]
        k1 = rhs(t, y)
        fs[k] = k1
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(ts[k + 1], y)
        ys[k + 1] = y
    fs[n] = rhs(ts[n], y)
    return ts, ys, fs


def _dopri45(rhs, y0, t0, t_end, cfg, stops=()):
    """Adaptive Dormand-Prince steps; every time in ``stops`` becomes a step end."""
    y = np.array(y0, dtype=float)
    t = t0
    h = min(cfg.step, t_end - t0)
    targets = [float(v) for v in stops if t0 < v < t_end] + [t_end]
    ti = 0
    f = np.asarray(rhs(t, y), dtype=float)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    k = [None] * 7
    steps = 0
    while t < t_end:
        if steps >= cfg.max_steps:
            raise StepBudgetExceeded(cfg.max_steps, t)
        steps += 1
        target = targets[ti]
        h_free = h
        last = t + h >= target
        if last:
            h = target - t
        k[0] = f
        for i in range(1, 7):
            yi = y + h * sum(a * kj for a, kj in zip(_A[i], k[:i]) if a != 0.0)
            k[i] = np.asarray(rhs(t + _C[i] * h, yi), dtype=float)
        y_new = yi  # stage 7 is evaluated at the 5th-order solution (FSAL)
        err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if not math.isfinite(err_norm):
            if h < 1e-14 * max(1.0, abs(t)):
                _check_finite(t + h, y_new)
            h *= 0.2
            continue
        if err_norm <= 1.0:
            t = target if last else t + h
            if last:
                ti += 1
            _check_finite(t, y_new)
            y = y_new
            f = k[6]
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
            if last:
                # a step shortened to hit a stop says nothing against the free size
                h = max(h, min(h_free, h * factor))
                factor = 1.0
        else:
            factor = max(0.2, 0.9 * err_norm ** -0.2)
        h *= factor
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t!r}")
    return np.array(ts), np.array(ys), np.array(fs)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    t0: float,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    *,
    t_eval=None,
    formulation: str = "dimensional",
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t_end``.

    Without ``t_eval`` the accepted step points are returned. With it, the
    adaptive method shortens steps so that each ``t_eval`` point is a step
    end (values carry full error control); the fixed-step method is sampled
    by cubic Hermite interpolation between its nodes.
    """
    if not t_end > t0:
        raise ParameterError("t_end", "> t0", t_end)
    y0 = np.asarray(y0, dtype=float)
    _check_finite(t0, y0)
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.min() < t0 or t_eval.max() > t_end:
            raise ParameterError("t_eval", f"within [{t0}, {t_end}]")
    if cfg.method == "rk4":
        ts, ys, fs = _rk4(rhs, y0, float(t0), float(t_end), cfg)
    else:
        stops = () if t_eval is None else np.unique(t_eval)
        ts, ys, fs = _dopri45(rhs, y0, float(t0), float(t_end), cfg, stops)
    nodes = (ts, ys, fs)
    if t_eval is not None:
        # for dopri45 every t_eval point is a node, so this only picks values out
        return Trajectory(t_eval, _hermite_eval(ts, ys, fs, t_eval), formulation, nodes)
    return Trajectory(ts, ys, formulation, nodes)


def simulate_dimensional(p: DimensionalParams, c: Controls, state0, T: float,
                         cfg: IntegratorConfig = IntegratorConfig(), t_eval=None) -> Trajectory:
    h1, h2 = c.h1, c.h2

    def rhs(t, s):
        return np.array(_dimensional_terms(s[0], s[1], p, h1, h2))

    return integrate(rhs, tuple(state0), 0.0, T, cfg, t_eval=t_eval, formulation="dimensional")


def simulate_dimensionless(dp: DimensionlessParams, state0, tau_end: float,
                           cfg: IntegratorConfig = IntegratorConfig(), t_eval=None) -> Trajectory:
    bs, br, q, al, g = dp.beta_s, dp.beta_r, dp.q, dp.alpha, dp.gamma
    u1, u2 = 1.0 - dp.h1, 1.0 - dp.h2

    def rhs(t, s):
        x, y = s
        crowd = 1.0 - (x + y)
        flux = u1 * q * x + u2 * x * y
        return np.array([bs * x * crowd - (al + g) * x - flux, br * y * crowd + flux - g * y])

    return integrate(rhs, tuple(state0), 0.0, tau_end, cfg, t_eval=t_eval, formulation="dimensionless")


def in_omega(state, tol: float = 0.0) -> bool:
    """Membership in the triangle x >= 0, y >= 0, x + y <= 1 (with slack ``tol``)."""
    x, y = state
    return bool(x >= -tol and y >= -tol and x + y <= 1.0 + tol)


@dataclass
class TrappingReport:
    n_trajectories: int
    horizon: float
    tol: float
    # (start index, time, x, y) for every point found outside Omega
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_trapping(initial_states, dp: DimensionlessParams, horizon: float,
                   cfg: IntegratorConfig = IntegratorConfig(), tol: float = 1e-6) -> TrappingReport:
    starts = [tuple(map(float, s)) for s in initial_states]
    for i, s in enumerate(starts):
        if not in_omega(s, 0.0):
            raise ParameterError(f"initial_states[{i}]", "inside Omega", s)
    report = TrappingReport(len(starts), horizon, tol)
    for i, s in enumerate(starts):
        traj = simulate_dimensionless(dp, s, horizon, cfg)
        x, y = traj.states[:, 0], traj.states[:, 1]
        bad = (x < -tol) | (y < -tol) | (x + y > 1.0 + tol)
        for j in np.flatnonzero(bad):
            report.violations.append((i, float(traj.times[j]), float(x[j]), float(y[j])))
    return report
