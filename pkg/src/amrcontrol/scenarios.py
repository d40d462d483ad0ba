"""European-region antibiotic scenarios and the figure experiments.

Parameter tables (time in hours):

* fixed: beta_S = 8, beta_R = 0.64, a = 1, K = 1e5, h1 = h2 = 0.5
* (alpha_bar, q_bar) by region and antibiotic
* Lambda by dosing level, gamma_bar by host immune status
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .control import CostWeights, FBSConfig, forward_sweep, solve_fbs
from .dynamics import IntegratorConfig, simulate_dimensional
from .model import Controls, DimensionalParams, DimensionlessParams, ParameterError, params_from_thresholds
from .output import (
    CONTROL_COLUMNS,
    control_rows,
    overlay_plot,
    trajectory_rows,
    write_csv,
)

REGIONS = ("North", "Center", "South")
ANTIBIOTICS = ("amoxicillin", "gentamicin")

FIXED = {"beta_S": 8.0, "beta_R": 0.64, "a": 1.0, "K": 1e5}
FIXED_CONTROLS = {"h1": 0.5, "h2": 0.5}

# (alpha_bar, q_bar)
ELIMINATION_MUTATION = {
    ("North", "amoxicillin"): (0.56, 0.44),
    ("North", "gentamicin"): (0.92, 0.088),
    ("Center", "amoxicillin"): (0.4, 0.60),
    ("Center", "gentamicin"): (0.88, 0.12),
    ("South", "amoxicillin"): (0.36, 0.64),
    ("South", "gentamicin"): (0.79, 0.21),
}
DOSING = {"low": 12.0, "standard": 8.0, "high": 4.0}
IMMUNE = {"RISH": 2.4, "CISH": 1.5, "SCISH": 0.9}

# Thresholds and rates quoted for the five phase portraits, one per region
PHASE_PORTRAITS = {
    "R1": dict(R_s=0.17, h_s=0.22, h_r2=8.33, R_r=0.53, h_r1=4166.66, q=0.00098, gamma=0.00012),
    "R2": dict(R_s=0.99, h_s=12.41, h_r2=158.73, R_r=1.01, h_r1=79365.07, q=1.48e-5, gamma=6.3e-6),
    "R3": dict(R_s=1.01, h_s=0.12, h_r2=1.66, R_r=1.06, h_r1=150000.0, q=1.47e-5, gamma=6e-6),
    "R4": dict(R_s=1.21, h_s=15.15, h_r2=157.38, R_r=1.007, h_r1=78690.58, q=1.47e-5, gamma=6.35e-6),
    "R5": dict(R_s=1.05, h_s=1.31, h_r2=11.11, R_r=0.71, h_r1=5555.55, q=0.00014, gamma=9e-5),
}

_PARAM_FIELDS = {f.name for f in fields(DimensionalParams)}
_OVERRIDE_FIELDS = _PARAM_FIELDS | {"h1", "h2"}


def phase_portrait_params(region: str) -> DimensionlessParams:
    """Dimensionless parameters reconstructed from a phase-portrait threshold set."""
    try:
        d = PHASE_PORTRAITS[region]
    except KeyError:
        raise ParameterError("region", f"one of {tuple(PHASE_PORTRAITS)}", region) from None
    return params_from_thresholds(d["R_s"], d["R_r"], d["h_s"], d["h_r1"], d["h_r2"], d["q"], d["gamma"])


def _canon(value: str, options, name: str) -> str:
    for opt in options:
        if value.lower() == opt.lower():
            return opt
    raise ParameterError(name, f"one of {tuple(options)}", value)


@dataclass
class Scenario:
    region: str = "South"
    antibiotic: str = "amoxicillin"
    dosing: str = "standard"
    immune: str = "RISH"
    overrides: dict = field(default_factory=dict)
    S0: float = 1.0
    R0: float = 0.0
    T: float = 10.0

    def __post_init__(self):
        self.region = _canon(self.region, REGIONS, "region")
        self.antibiotic = _canon(self.antibiotic, ANTIBIOTICS, "antibiotic")
        self.dosing = _canon(self.dosing, DOSING, "dosing")
        self.immune = _canon(self.immune, IMMUNE, "immune")
        for key, v in self.overrides.items():
            if key not in _OVERRIDE_FIELDS:
                raise ParameterError(f"overrides.{key}", f"one of {sorted(_OVERRIDE_FIELDS)}", key)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParameterError(f"overrides.{key}", "a number", v)
        if not (self.S0 >= 0):
            raise ParameterError("S0", ">= 0", self.S0)
        if not (self.R0 >= 0):
            raise ParameterError("R0", ">= 0", self.R0)
        if not (self.T > 0):
            raise ParameterError("T", "> 0", self.T)

    @property
    def label(self) -> str:
        return f"{self.region.lower()}-{self.antibiotic}"

    @property
    def initial_state(self) -> tuple[float, float]:
        return (float(self.S0), float(self.R0))

    def with_overrides(self, **kw) -> "Scenario":
        d = asdict(self)
        d["overrides"] = {**self.overrides, **kw}
        return Scenario(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ParameterError(sorted(extra)[0], f"a Scenario field ({sorted(known)})")
        return cls(**d)


def resolve(s: Scenario) -> tuple[DimensionalParams, Controls]:
    alpha_bar, q_bar = ELIMINATION_MUTATION[(s.region, s.antibiotic)]
    values = dict(FIXED, alpha_bar=alpha_bar, q_bar=q_bar,
                  Lambda=DOSING[s.dosing], gamma_bar=IMMUNE[s.immune], **FIXED_CONTROLS)
    values.update(s.overrides)
    controls = Controls(values.pop("h1"), values.pop("h2"))
    return DimensionalParams(**values), controls


def scenario_from_name(name: str) -> Scenario:
    """``region-antibiotic[-dosing][-immune]``, e.g. ``south-amoxicillin-high-SCISH``."""
    parts = name.split("-")
    if len(parts) < 2:
        raise ParameterError("scenario", "region-antibiotic[-dosing][-immune]", name)
    kw = {"region": parts[0], "antibiotic": parts[1]}
    for extra in parts[2:]:
        if extra.lower() in DOSING:
            kw["dosing"] = extra
        elif extra.upper() in IMMUNE:
            kw["immune"] = extra.upper()
        else:
            raise ParameterError("scenario", f"dosing in {tuple(DOSING)} or immune in {tuple(IMMUNE)}", extra)
    return Scenario(**kw)


def catalog() -> dict[str, Scenario]:
    return {f"{r.lower()}-{a}": Scenario(region=r, antibiotic=a) for r in REGIONS for a in ANTIBIOTICS}


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError("scenario-file", "valid JSON", str(exc)) from None
    if not isinstance(data, dict):
        raise ParameterError("scenario-file", "a JSON object")
    return Scenario.from_dict(data)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(s.to_dict(), indent=2, sort_keys=True) + "\n")


@dataclass
class ExperimentSpec:
    name: str
    scenarios: list
    outputs: tuple = ("states",)
    compare_axis: str = "region"

    def __post_init__(self):
        if not self.scenarios:
            raise ParameterError("scenarios", "non-empty")


# override sets for the dosing and immune sweeps; they match no single region cell
FIG5_OVERRIDES = {"alpha_bar": 0.92, "q_bar": 0.44}
FIG6_OVERRIDES = {"alpha_bar": 0.56, "q_bar": 0.44}


def experiment(tag: str, T: float = 10.0, S0: float = 1.0, R0: float = 0.0) -> ExperimentSpec:
    base = dict(T=T, S0=S0, R0=R0)
    if tag == "fig4":
        scen = [Scenario(region=r, antibiotic=a, **base) for a in ANTIBIOTICS for r in REGIONS]
        return ExperimentSpec("fig4", scen, ("states",), "region")
    if tag == "fig5":
        scen = [Scenario(dosing=d, overrides=dict(FIG5_OVERRIDES), **base) for d in ("high", "standard", "low")]
        return ExperimentSpec("fig5", scen, ("states",), "dosing")
    if tag == "fig6":
        scen = [Scenario(immune=i, overrides=dict(FIG6_OVERRIDES), **base) for i in IMMUNE]
        return ExperimentSpec("fig6", scen, ("states",), "immune")
    if tag == "fig8":
        scen = [Scenario(antibiotic=a, **base) for a in ("gentamicin", "amoxicillin")]
        return ExperimentSpec("fig8", scen, ("states", "controls"), "antibiotic")
    raise ParameterError("figure", "one of ('fig4', 'fig5', 'fig6', 'fig8')", tag)


@dataclass
class FigureResult:
    tag: str
    files: list
    # label -> (S(T), R(T)); for fig8 label -> dict with controlled/uncontrolled runs
    terminal: dict
    runs: dict = field(default_factory=dict, repr=False)


def _axis_value(s: Scenario, axis: str) -> str:
    if axis == "dosing":
        return f"Lambda={DOSING[s.dosing]:g}"
    if axis == "immune":
        return f"{s.immune} (gamma_bar={IMMUNE[s.immune]:g})"
    return {"region": s.region, "antibiotic": s.antibiotic}[axis]


def _meta(tag, s: Scenario, p: DimensionalParams, c: Controls, extra=None) -> dict:
    meta = {"figure": tag, "scenario": s.label, "dosing": s.dosing, "immune": s.immune}
    meta.update(asdict(p))
    meta.update(h1=c.h1, h2=c.h2, S0=s.S0, R0=s.R0, T=s.T)
    if extra:
        meta.update(extra)
    return meta


def run_figure(tag: str, out_dir, *, T: float = 10.0, S0: float = 1.0, R0: float = 0.0,
               cfg: IntegratorConfig = IntegratorConfig(), n_out: int = 1001,
               weights: CostWeights = CostWeights(), fbs_cfg: FBSConfig = FBSConfig()) -> FigureResult:
    """Run one figure experiment, writing one CSV per run and one SVG per panel.

    On failure every file already written by this call is removed.
    """
    spec = experiment(tag, T, S0, R0)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        if tag == "fig8":
            result = _run_control_figure(spec, out_dir, written, weights, fbs_cfg)
        else:
            result = _run_state_figure(spec, out_dir, written, cfg, n_out)
    except BaseException:
        for f in written:
            f.unlink(missing_ok=True)
        raise
    return result


def _run_state_figure(spec, out_dir, written, cfg, n_out):
    tag = spec.name
    runs = []
    for s in spec.scenarios:
        p, c = resolve(s)
        grid = np.linspace(0.0, s.T, n_out)
        traj = simulate_dimensional(p, c, s.initial_state, s.T, cfg, t_eval=grid)
        name = f"{tag}_{s.region.lower()}_{s.antibiotic}_{s.dosing}_{s.immune}.csv"
        meta = _meta(tag, s, p, c, {"method": cfg.method, "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol})
        written.append(write_csv(out_dir / name, traj.columns, trajectory_rows(traj), meta))
        runs.append(traj)
    # panels: one per (population, group) where group splits by antibiotic for fig4
    groups = {}
    for i, s in enumerate(spec.scenarios):
        key = s.antibiotic if tag == "fig4" else "all"
        groups.setdefault(key, []).append(i)
    for key, members in groups.items():
        for col, pop in ((0, "sensitive"), (1, "resistant")):
            series = [(_axis_value(spec.scenarios[i], spec.compare_axis), runs[i].times,
                       runs[i].clamped()[:, col]) for i in members]
            suffix = f"_{key}" if key != "all" else ""
            path = out_dir / f"{tag}_{pop}{suffix}.svg"
            written.append(overlay_plot(path, series, xlabel="t (hours)", ylabel=f"{pop} bacteria",
                                        title=f"{tag}: {pop}{' - ' + key if key != 'all' else ''}"))
    labels = [_label(s, spec.compare_axis) for s in spec.scenarios]
    terminal = {k: tuple(float(v) for v in tr.final) for k, tr in zip(labels, runs)}
    return FigureResult(tag, list(written), terminal, dict(zip(labels, runs)))


def _label(s: Scenario, axis: str) -> str:
    if axis == "dosing":
        return f"{s.label}-{s.dosing}"
    if axis == "immune":
        return f"{s.label}-{s.immune}"
    return s.label


def _run_control_figure(spec, out_dir, written, weights, fbs_cfg):
    runs, terminal = {}, {}
    for s in spec.scenarios:
        p, _ = resolve(s)
        sol = solve_fbs(p, weights, s.initial_state, s.T, fbs_cfg)
        zero = np.zeros_like(sol.t)
        S0, R0 = forward_sweep(p, s.initial_state, sol.t, zero, zero)
        extra = {"c": weights.c, "w1": weights.w1, "w2": weights.w2, "b1": weights.b1, "b2": weights.b2,
                 "n_grid": fbs_cfg.n_grid, "omega": fbs_cfg.relaxation, "tol": fbs_cfg.tol}
        meta = _meta("fig8", s, p, Controls(), extra)
        written.append(write_csv(out_dir / f"fig8_{s.antibiotic}_controlled.csv", CONTROL_COLUMNS,
                                 control_rows(sol), dict(meta, J=sol.J, converged=sol.converged)))
        rows = np.column_stack([sol.t, np.maximum(S0, 0.0), np.maximum(R0, 0.0)])
        written.append(write_csv(out_dir / f"fig8_{s.antibiotic}_uncontrolled.csv", ("t", "S", "R"), rows,
                                 dict(meta, h1=0.0, h2=0.0)))
        runs[s.antibiotic] = {"controlled": sol, "uncontrolled": (sol.t, S0, R0)}
        terminal[s.label] = {"controlled": (float(sol.S[-1]), float(sol.R[-1])),
                             "uncontrolled": (float(S0[-1]), float(R0[-1])), "J": sol.J,
                             "converged": sol.converged}
    for ab in ("gentamicin", "amoxicillin"):
        sol = runs[ab]["controlled"]
        t, S0, R0 = runs[ab]["uncontrolled"]
        for pop, ctl, unc in (("sensitive", sol.S, S0), ("resistant", sol.R, R0)):
            written.append(overlay_plot(out_dir / f"fig8_{pop}_{ab}.svg",
                                        [("with controls", t, np.maximum(ctl, 0)),
                                         ("without controls", t, np.maximum(unc, 0))],
                                        xlabel="t (hours)", ylabel=f"{pop} bacteria",
                                        title=f"fig8: {pop} - {ab}"))
        written.append(overlay_plot(out_dir / f"fig8_controls_{ab}.svg",
                                    [("h1", t, sol.h1), ("h2", t, sol.h2)],
                                    xlabel="t (hours)", ylabel="control level", title=f"fig8: controls - {ab}"))
    return FigureResult("fig8", list(written), terminal, runs)
