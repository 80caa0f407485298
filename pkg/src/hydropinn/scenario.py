"""Transient scenario definition: boundary signals plus an optional offtake.

A scenario is the full description of one simulated operation: pipe and
fluid constants, run duration, inlet-pressure and outlet-flowrate signals,
and optionally an intermediate offtake (delivery) node. Scenario files are
JSON; see docs/config_reference.md for the exact keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .hydraulics import FluidSpec, PipelineSpec

OFFTAKE_START_TOL = 1e-12  # m^3/s; offtake must be shut at t=0


@dataclass(frozen=True)
class PiecewiseSignal:
    """Piecewise-linear time series; values held constant outside the breakpoints."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ConfigError("signal needs matching 1-d time/value breakpoint arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ConfigError("signal breakpoint times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ConfigError("signal breakpoints must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseSignal":
        return cls(np.array([0.0]), np.array([float(value)]))

    @classmethod
    def from_breakpoints(cls, pairs) -> "PiecewiseSignal":
        pairs = list(pairs)
        if not pairs or any(len(p) != 2 for p in pairs):
            raise ConfigError("breakpoints must be a non-empty list of [t, value] pairs")
        ts, vs = zip(*pairs)
        return cls(np.array(ts, dtype=float), np.array(vs, dtype=float))

    def breakpoints(self) -> list[list[float]]:
        return [[float(t), float(v)] for t, v in zip(self.times, self.values)]


@dataclass(frozen=True)
class Offtake:
    """Intermediate delivery node: withdraws `flowrate` [m^3/s] at `position` [m]."""

    position: float
    flowrate: PiecewiseSignal


@dataclass(frozen=True)
class Scenario:
    pipe: PipelineSpec
    fluid: FluidSpec
    duration: float  # s
    inlet_pressure: PiecewiseSignal  # MPa
    outlet_flowrate: PiecewiseSignal  # m^3/s
    offtake: Offtake | None = None

    def __post_init__(self):
        if self.duration < 0:
            raise ConfigError("scenario duration must be non-negative")
        if self.offtake is not None:
            if not 0 < self.offtake.position < self.pipe.length:
                raise ConfigError("offtake position must be strictly inside the pipe")
            # The initial condition is a single uniform steady profile, which
            # requires the offtake to be shut at t=0.
            if abs(float(self.offtake.flowrate(0.0))) > OFFTAKE_START_TOL:
                raise ConfigError("offtake flowrate must be zero at t=0")


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing key '{key}' in {context}")
    return mapping[key]


def fluid_from_dict(d: dict) -> FluidSpec:
    return FluidSpec(
        density=float(_require(d, "density_kgpm3", "fluid")),
        kinematic_viscosity=float(_require(d, "kinematic_viscosity_m2ps", "fluid")),
        bulk_modulus=float(_require(d, "bulk_modulus_pa", "fluid")),
    )


def fluid_to_dict(fluid: FluidSpec) -> dict:
    return {
        "density_kgpm3": fluid.density,
        "kinematic_viscosity_m2ps": fluid.kinematic_viscosity,
        "bulk_modulus_pa": fluid.bulk_modulus,
    }


def pipe_from_dict(d: dict) -> PipelineSpec:
    f = d.get("friction_factor")
    return PipelineSpec(
        length=float(_require(d, "length_m", "pipe")),
        diameter=float(_require(d, "diameter_m", "pipe")),
        wall_thickness=float(d.get("wall_thickness_m", 0.007)),
        pipe_elasticity=float(d.get("pipe_elasticity_pa", 2.07e11)),
        constraint_coeff=float(d.get("constraint_coeff", 1.0)),
        friction_factor=None if f is None else float(f),
        gravity=float(d.get("gravity_mps2", 9.81)),
    )


def pipe_to_dict(pipe: PipelineSpec) -> dict:
    return {
        "length_m": pipe.length,
        "diameter_m": pipe.diameter,
        "wall_thickness_m": pipe.wall_thickness,
        "pipe_elasticity_pa": pipe.pipe_elasticity,
        "constraint_coeff": pipe.constraint_coeff,
        "friction_factor": pipe.friction_factor,
        "gravity_mps2": pipe.gravity,
    }


def scenario_from_dict(d: dict) -> Scenario:
    offtake = None
    if d.get("offtake") is not None:
        od = d["offtake"]
        offtake = Offtake(
            position=float(_require(od, "position_m", "offtake")),
            flowrate=PiecewiseSignal.from_breakpoints(
                _require(od, "flowrate_m3ps", "offtake")
            ),
        )
    return Scenario(
        pipe=pipe_from_dict(_require(d, "pipe", "scenario")),
        fluid=fluid_from_dict(_require(d, "fluid", "scenario")),
        duration=float(_require(d, "duration_s", "scenario")),
        inlet_pressure=PiecewiseSignal.from_breakpoints(
            _require(d, "inlet_pressure_mpa", "scenario")
        ),
        outlet_flowrate=PiecewiseSignal.from_breakpoints(
            _require(d, "outlet_flowrate_m3ps", "scenario")
        ),
        offtake=offtake,
    )


def scenario_to_dict(sc: Scenario) -> dict:
    d = {
        "pipe": pipe_to_dict(sc.pipe),
        "fluid": fluid_to_dict(sc.fluid),
        "duration_s": sc.duration,
        "inlet_pressure_mpa": sc.inlet_pressure.breakpoints(),
        "outlet_flowrate_m3ps": sc.outlet_flowrate.breakpoints(),
        "offtake": None,
    }
    if sc.offtake is not None:
        d["offtake"] = {
            "position_m": sc.offtake.position,
            "flowrate_m3ps": sc.offtake.flowrate.breakpoints(),
        }
    return d


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
