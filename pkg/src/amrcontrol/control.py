"""Pontryagin optimal control of natural mutation (h1) and HGT (h2).

Cost::

    J[h] = int_0^T c R + (w1 + w2 h1) h1 + (b1 + b2 h2) h2 dt

with free end state, so the adjoints vanish at T. The forward-backward
sweep discretises both state and adjoint with classical RK4 on one uniform
grid; controls are piecewise linear between grid nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .dynamics import NonFiniteState
from .model import Controls, DimensionalParams, ParameterError, _dimensional_terms

__all__ = [
    "NoConvergence",
    "CostWeights",
    "AdjointState",
    "FBSConfig",
    "ControlSolution",
    "cost",
    "hamiltonian",
    "hamiltonian_control_gradient",
    "adjoint_rhs",
    "optimal_controls",
    "convexity_check",
    "forward_sweep",
    "backward_sweep",
    "evaluate_cost",
    "cost_gradient",
    "solve_fbs",
    "OracleResult",
    "constant_control_oracle",
]


class NoConvergence(RuntimeError):
    def __init__(self, solution):
        self.solution = solution
        super().__init__(f"forward-backward sweep did not converge in {solution.iterations} iterations")


@dataclass(frozen=True)
class CostWeights:
    """Weights of the cost integrand.

    There are no reference values for these; the defaults are arbitrary and meant
    to be overridden.
    """

    c: float = 1.0
    w1: float = 1.0
    w2: float = 10.0
    b1: float = 1.0
    b2: float = 10.0

    def __post_init__(self):
        for name in ("c", "w1", "b1", "w2", "b2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(name, "finite number", v)
        for name in ("c", "w1", "b1"):
            if getattr(self, name) < 0:
                raise ParameterError(name, ">= 0", getattr(self, name))


@dataclass(frozen=True)
class AdjointState:
    lambda1: float
    lambda2: float

    def __iter__(self):
        return iter((self.lambda1, self.lambda2))


@dataclass(frozen=True)
class FBSConfig:
    n_grid: int = 1001
    relaxation: float = 0.5
    tol: float = 1e-7
    max_iter: int = 200
    # relative rise in J tolerated per accepted iterate; the continuous adjoint
    # is only a grid-accurate gradient of the discretised cost
    accept_slack: float = 1e-5

    def __post_init__(self):
        if not self.accept_slack >= 0:
            raise ParameterError("accept_slack", ">= 0", self.accept_slack)
        if int(self.n_grid) != self.n_grid or self.n_grid < 2:
            raise ParameterError("n_grid", "integer >= 2", self.n_grid)
        if not 0 < self.relaxation <= 1:
            raise ParameterError("relaxation", "0 < omega <= 1", self.relaxation)
        if not self.tol > 0:
            raise ParameterError("tol", "> 0", self.tol)
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError("max_iter", "integer >= 1", self.max_iter)


@dataclass
class ControlSolution:
    t: np.ndarray
    S: np.ndarray
    R: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    J: float
    history: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def summary(self) -> dict:
        return {
            "J": self.J,
            "iterations": self.iterations,
            "converged": self.converged,
            "T": float(self.t[-1]),
            "n_grid": len(self.t),
            "S_T": float(self.S[-1]),
            "R_T": float(self.R[-1]),
        }


def cost(t, R, h1, h2, w: CostWeights) -> float:
    """Composite Simpson quadrature of the cost integrand on the grid ``t``."""
    t = np.asarray(t, dtype=float)
    R, h1, h2 = (np.broadcast_to(np.asarray(v, dtype=float), t.shape) if np.ndim(v) == 0
                 else np.asarray(v, dtype=float) for v in (R, h1, h2))
    if not (R.shape == h1.shape == h2.shape == t.shape):
        raise ValueError(f"grid mismatch: t{t.shape}, R{R.shape}, h1{h1.shape}, h2{h2.shape}")
    integrand = w.c * R + (w.w1 + w.w2 * h1) * h1 + (w.b1 + w.b2 * h2) * h2
    return float(simpson(integrand, x=t))


def _adjoint_terms(S, R, l1, l2, u1, u2, p: DimensionalParams, c: float):
    qL = p.q_bar * p.Lambda
    d = l2 - l1
    dl1 = (-p.beta_S * l1 + p.beta_S / p.K * (2 * S + R) * l1
           + (p.alpha_bar * p.Lambda + p.gamma_bar) * l1
           - u1 * qL * d - u2 * p.a * R * d + p.beta_R * R / p.K * l2)
    dl2 = (-c - p.beta_R * l2 + p.beta_S * S / p.K * l1
           + p.beta_R / p.K * (S + 2 * R) * l2 - u2 * p.a * S * d + p.gamma_bar * l2)
    return dl1, dl2


def hamiltonian(state, adj, controls: Controls, p: DimensionalParams, w: CostWeights) -> float:
    S, R = state
    l1, l2 = adj
    h1, h2 = controls.h1, controls.h2
    dS, dR = _dimensional_terms(S, R, p, h1, h2)
    return w.c * R + (w.w1 + w.w2 * h1) * h1 + (w.b1 + w.b2 * h2) * h2 + l1 * dS + l2 * dR


def hamiltonian_control_gradient(state, adj, controls, p: DimensionalParams, w: CostWeights):
    """(dH/dh1, dH/dh2); arrays are accepted for grid-wide evaluation."""
    S, R = state
    l1, l2 = adj
    h1, h2 = controls
    d = np.subtract(l1, l2)
    g1 = w.w1 + 2 * w.w2 * np.asarray(h1) + p.q_bar * p.Lambda * np.asarray(S) * d
    g2 = w.b1 + 2 * w.b2 * np.asarray(h2) + p.a * np.asarray(R) * np.asarray(S) * d
    return g1, g2


def adjoint_rhs(state, adj, controls: Controls, p: DimensionalParams, w: CostWeights) -> np.ndarray:
    """(dlambda1/dt, dlambda2/dt) = -(dH/dS, dH/dR)."""
    S, R = state
    l1, l2 = adj
    return np.array(_adjoint_terms(S, R, l1, l2, 1.0 - controls.h1, 1.0 - controls.h2, p, w.c))


def _optimal_arrays(S, R, l1, l2, p, w):
    d = np.subtract(l1, l2)
    h1 = (-w.w1 - p.q_bar * p.Lambda * np.asarray(S) * d) / (2 * w.w2)
    h2 = (-w.b1 - p.a * np.asarray(R) * np.asarray(S) * d) / (2 * w.b2)
    return np.clip(h1, 0.0, 1.0), np.clip(h2, 0.0, 1.0)


def optimal_controls(state, adj, p: DimensionalParams, w: CostWeights) -> Controls:
    """Pointwise minimiser of the Hamiltonian over [0, 1]^2."""
    if not convexity_check(w):
        raise ParameterError("w2, b2", "> 0 for a unique minimiser", (w.w2, w.b2))
    S, R = state
    l1, l2 = adj
    h1, h2 = _optimal_arrays(S, R, l1, l2, p, w)
    return Controls(float(h1), float(h2))


def convexity_check(w: CostWeights) -> bool:
    # Hessian of the integrand in (h1, h2) is diag(2 w2, 2 b2)
    return w.w2 > 0 and w.b2 > 0


def forward_sweep(p: DimensionalParams, x0, t, h1, h2):
    """RK4 state integration with controls linear between nodes."""
    n = len(t)
    S = np.empty(n)
    R = np.empty(n)
    S[0], R[0] = x0
    s, r = float(S[0]), float(R[0])
    for k in range(n - 1):
        dt = t[k + 1] - t[k]
        a1, a2 = h1[k], h2[k]
        e1, e2 = h1[k + 1], h2[k + 1]
        m1, m2 = 0.5 * (a1 + e1), 0.5 * (a2 + e2)
        k1s, k1r = _dimensional_terms(s, r, p, a1, a2)
        k2s, k2r = _dimensional_terms(s + 0.5 * dt * k1s, r + 0.5 * dt * k1r, p, m1, m2)
        k3s, k3r = _dimensional_terms(s + 0.5 * dt * k2s, r + 0.5 * dt * k2r, p, m1, m2)
        k4s, k4r = _dimensional_terms(s + dt * k3s, r + dt * k3r, p, e1, e2)
        s += dt / 6 * (k1s + 2 * k2s + 2 * k3s + k4s)
        r += dt / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
        if not (math.isfinite(s) and math.isfinite(r)):
            raise NonFiniteState(float(t[k + 1]), (s, r))
        S[k + 1], R[k + 1] = s, r
    return S, R


def backward_sweep(p: DimensionalParams, w: CostWeights, t, S, R, h1, h2):
    """RK4 adjoint integration from lambda(T) = 0 back to t[0].

    The state at step midpoints comes from cubic Hermite interpolation of the
    stored forward solution.
    """
    n = len(t)
    L1 = np.zeros(n)
    L2 = np.zeros(n)
    l1 = l2 = 0.0
    c = w.c
    fS, fR = _dimensional_terms(S, R, p, h1, h2)
    for k in range(n - 1, 0, -1):
        dt = t[k - 1] - t[k]  # negative
        u1e, u2e = 1.0 - h1[k], 1.0 - h2[k]
        u1b, u2b = 1.0 - h1[k - 1], 1.0 - h2[k - 1]
        u1m, u2m = 0.5 * (u1e + u1b), 0.5 * (u2e + u2b)
        H = t[k] - t[k - 1]
        sm = 0.5 * (S[k] + S[k - 1]) + H / 8 * (fS[k - 1] - fS[k])
        rm = 0.5 * (R[k] + R[k - 1]) + H / 8 * (fR[k - 1] - fR[k])
        k1a, k1b = _adjoint_terms(S[k], R[k], l1, l2, u1e, u2e, p, c)
        k2a, k2b = _adjoint_terms(sm, rm, l1 + 0.5 * dt * k1a, l2 + 0.5 * dt * k1b, u1m, u2m, p, c)
        k3a, k3b = _adjoint_terms(sm, rm, l1 + 0.5 * dt * k2a, l2 + 0.5 * dt * k2b, u1m, u2m, p, c)
        k4a, k4b = _adjoint_terms(S[k - 1], R[k - 1], l1 + dt * k3a, l2 + dt * k3b, u1b, u2b, p, c)
        l1 += dt / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        l2 += dt / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if not (math.isfinite(l1) and math.isfinite(l2)):
            raise NonFiniteState(float(t[k - 1]), (l1, l2))
        L1[k - 1], L2[k - 1] = l1, l2
    return L1, L2


def _grid(T, n_grid):
    if not T > 0:
        raise ParameterError("T", "> 0", T)
    return np.linspace(0.0, float(T), int(n_grid))


def evaluate_cost(p: DimensionalParams, w: CostWeights, x0, t, h1, h2) -> float:
    S, R = forward_sweep(p, x0, t, h1, h2)
    return cost(t, R, h1, h2, w)


def cost_gradient(p: DimensionalParams, w: CostWeights, x0, t, h1, h2):
    """Adjoint-based L2 gradient of J with respect to h1(t), h2(t)."""
    S, R = forward_sweep(p, x0, t, h1, h2)
    L1, L2 = backward_sweep(p, w, t, S, R, h1, h2)
    return hamiltonian_control_gradient((S, R), (L1, L2), (h1, h2), p, w)


def solve_fbs(p: DimensionalParams, w: CostWeights, x0, T: float, cfg: FBSConfig = FBSConfig(),
              *, h_init=None, raise_on_failure: bool = False) -> ControlSolution:
    """Forward-backward sweep with relaxed control updates.

    Each iteration integrates the state forward, the adjoint backward from
    lambda(T) = 0, and moves the controls a fraction ``cfg.relaxation``
    towards the pointwise Hamiltonian minimiser. A move raising J by more
    than ``cfg.accept_slack`` (relative) is halved until it does not.
    Convergence means a full relaxed move changed no control value by more
    than ``cfg.tol``. ``h_init`` is a pair of scalars or grid arrays; the
    default starts from h = 0.

    The problem is not convex in the controls, so the sweep can settle in a
    local minimum; warm-starting from the best constant control (see
    :func:`constant_control_oracle`) guards against that.
    """
    if not convexity_check(w):
        raise ParameterError("w2, b2", "> 0 (strict convexity of the cost in the controls)", (w.w2, w.b2))
    t = _grid(T, cfg.n_grid)
    if h_init is None:
        h_init = (0.0, 0.0)
    h1 = np.clip(np.broadcast_to(np.asarray(h_init[0], dtype=float), t.shape), 0, 1).copy()
    h2 = np.clip(np.broadcast_to(np.asarray(h_init[1], dtype=float), t.shape), 0, 1).copy()
    S, R = forward_sweep(p, x0, t, h1, h2)
    J = cost(t, R, h1, h2, w)
    history = [J]
    best = (J, h1, h2, S, R)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        L1, L2 = backward_sweep(p, w, t, S, R, h1, h2)
        s1, s2 = _optimal_arrays(S, R, L1, L2, p, w)
        omega = cfg.relaxation
        while True:
            n1 = (1 - omega) * h1 + omega * s1
            n2 = (1 - omega) * h2 + omega * s2
            Sn, Rn = forward_sweep(p, x0, t, n1, n2)
            Jn = cost(t, Rn, n1, n2, w)
            if Jn <= J + cfg.accept_slack * abs(J) or omega < 1e-6:
                break
            omega *= 0.5
        if Jn > J + cfg.accept_slack * abs(J):
            break
        change = float(max(np.max(np.abs(n1 - h1)), np.max(np.abs(n2 - h2))))
        h1, h2, S, R, J = n1, n2, Sn, Rn, Jn
        history.append(J)
        if J < best[0]:
            best = (J, h1, h2, S, R)
        if change < cfg.tol and omega == cfg.relaxation:
            converged = True
            break
    if not converged:
        J, h1, h2, S, R = best
    L1, L2 = backward_sweep(p, w, t, S, R, h1, h2)
    sol = ControlSolution(t, S, R, L1, L2, h1, h2, J, history, converged, it)
    if not converged and raise_on_failure:
        raise NoConvergence(sol)
    return sol


@dataclass
class OracleResult:
    # rows of (h1, h2, J)
    table: np.ndarray
    best: tuple

    @property
    def J_min(self) -> float:
        return self.best[2]


def constant_control_oracle(p: DimensionalParams, w: CostWeights, x0, T: float, resolution: int = 11,
                            n_grid: int = 1001) -> OracleResult:
    """J for every constant (h1, h2) on a ``resolution`` x ``resolution`` grid of [0, 1]^2."""
    if int(resolution) != resolution or resolution < 2:
        raise ParameterError("resolution", "integer >= 2", resolution)
    t = _grid(T, n_grid)
    levels = np.linspace(0.0, 1.0, int(resolution))
    rows = []
    for a in levels:
        for b in levels:
            h1 = np.full_like(t, a)
            h2 = np.full_like(t, b)
            rows.append((float(a), float(b), evaluate_cost(p, w, x0, t, h1, h2)))
    table = np.array(rows)
    i = int(np.argmin(table[:, 2]))
    return OracleResult(table, tuple(float(v) for v in table[i]))
