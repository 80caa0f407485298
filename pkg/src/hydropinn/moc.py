"""Method-of-characteristics reference solver for the water-hammer equations.

Works internally in head/velocity on a Courant-1 grid (dx = a*dt exactly,
wave speed rescaled by at most 1% to fit the pipe length). The compatibility
relations integrated along the C+/C- characteristics, with friction
evaluated at the foot of each characteristic, are

    C+:  H_i = H_{i-1} + B*(V_{i-1} - V_i) - B*R*V_{i-1}|V_{i-1}|
    C-:  H_i = H_{i+1} - B*(V_{i+1} - V_i) + B*R*V_{i+1}|V_{i+1}|

with B = a/g and R = f*dt/(2D). The inlet node takes head from the
pressure signal and velocity from C-; the outlet node takes velocity from
the flowrate signal and head from C+.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError, NumericalBlowupError
from .hydraulics import (
    FluidSpec,
    PipelineSpec,
    flowrate_to_velocity,
    friction_factor,
    head_to_pressure,
    pressure_to_head,
    steady_profile,
    wave_speed,
)
from .scenario import Scenario

MAX_WAVE_SPEED_RESCALE = 0.01


@dataclass(frozen=True)
class MocGrid:
    """Courant-1 discretization: dx = wave_speed * dt exactly."""

    dt: float  # s
    dx: float  # m
    node_count: int
    wave_speed: float  # m/s, grid-adjusted

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.node_count) * self.dx


@dataclass
class FieldGrid:
    """Dense space-time pressure/velocity field on a rectangular (x, t) grid.

    P has shape (len(ts), len(xs)) in MPa; v likewise in m/s.
    """

    xs: np.ndarray
    ts: np.ndarray
    P: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ts = np.asarray(self.ts, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.xs.size < 2 or self.ts.size < 1:
            raise DomainError("FieldGrid needs at least 2 positions and 1 time")
        expected = (self.ts.size, self.xs.size)
        if self.P.shape != expected or self.v.shape != expected:
            raise DomainError(
                f"FieldGrid arrays must have shape {expected}, "
                f"got P{self.P.shape} v{self.v.shape}"
            )
        if not (np.all(np.isfinite(self.P)) and np.all(np.isfinite(self.v))):
            raise DomainError("FieldGrid values must be finite")


def build_grid(pipe: PipelineSpec, fluid: FluidSpec, dt: float) -> MocGrid:
    """Fit a Courant-1 grid to the pipe by rounding L/(a*dt) to whole cells.

    The wave speed is rescaled to dx/dt; if that moves it by more than 1%
    the requested dt is too coarse for this pipe and a GridError is raised.
    """
    if dt <= 0:
        raise GridError("dt must be strictly positive")
    a = wave_speed(fluid, pipe)
    node_count = int(round(pipe.length / (a * dt))) + 1
    if node_count < 3:
        raise GridError(
            f"only {node_count} nodes at dt={dt} s; grid too coarse to resolve the pipe"
        )
    dx = pipe.length / (node_count - 1)
    a_grid = dx / dt
    rescale = abs(a_grid - a) / a
    if rescale > MAX_WAVE_SPEED_RESCALE:
        raise GridError(
            f"fitting the grid would rescale the wave speed by {rescale:.2%} (> 1%); "
            "reduce dt"
        )
    return MocGrid(dt=dt, dx=dx, node_count=node_count, wave_speed=a_grid)


def moc_step(
    H: np.ndarray,
    V: np.ndarray,
    inlet_head: float,
    outlet_velocity: float,
    B: float,
    R: float,
    offtake_index: int | None = None,
    offtake_velocity: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance head/velocity one time step; returns new arrays.

    At an offtake node, V stores the upstream-side velocity and the
    downstream side carries V - offtake_velocity (common head).
    """
    n = H.size
    v_down = V
    if offtake_index is not None and offtake_velocity != 0.0:
        v_down = V.copy()
        v_down[offtake_index] = V[offtake_index] - offtake_velocity
    vf = v_down[:-1]  # C+ foot values, arriving at nodes 1..n-1
    vb = V[1:]  # C- foot values, arriving at nodes 0..n-2
    with np.errstate(over="ignore", invalid="ignore"):
        cp = H[:-1] + B * vf - B * R * vf * np.abs(vf)
        cm = H[1:] - B * vb + B * R * vb * np.abs(vb)

        Hn = np.empty_like(H)
        Vn = np.empty_like(V)
        Hn[1:-1] = 0.5 * (cp[:-1] + cm[1:])
        Vn[1:-1] = (cp[:-1] - cm[1:]) / (2.0 * B)
        Hn[0] = inlet_head
        Vn[0] = (inlet_head - cm[0]) / B
        Vn[n - 1] = outlet_velocity
        Hn[n - 1] = cp[-1] - B * outlet_velocity
        if offtake_index is not None:
            k = offtake_index
            v_up = (cp[k - 1] - cm[k] + B * offtake_velocity) / (2.0 * B)
            Vn[k] = v_up
            Hn[k] = cp[k - 1] - B * v_up
    if not (np.all(np.isfinite(Hn)) and np.all(np.isfinite(Vn))):
        raise NumericalBlowupError("non-finite head or velocity after MOC step")
    return Hn, Vn


def run(scenario: Scenario, dt: float = 0.5) -> FieldGrid:
    """Simulate the scenario on the internal MOC grid.

    The initial condition is the Darcy steady profile consistent with the
    boundary signals at t=0; the friction factor is frozen from that steady
    state (or taken from the pipe spec when set).
    """
    return run_details(scenario, dt)[0]


def run_details(scenario: Scenario, dt: float = 0.5):
    """Like `run`, but also returns the MocGrid and the frozen-friction pipe."""
    pipe, fluid = scenario.pipe, scenario.fluid
    grid = build_grid(pipe, fluid, dt)
    xs = grid.positions
    area = pipe.area

    v0 = float(flowrate_to_velocity(float(scenario.outlet_flowrate(0.0)), pipe.diameter))
    if pipe.friction_factor is None:
        f = friction_factor(fluid, v0, pipe.diameter) if v0 != 0.0 else 0.0
        pipe = pipe.with_friction(f) if f != 0.0 else pipe
    f = pipe.friction_factor if pipe.friction_factor is not None else 0.0

    profile = steady_profile(
        pipe, fluid, float(scenario.inlet_pressure(0.0)),
        float(scenario.outlet_flowrate(0.0)), positions=xs,
    )
    H = np.asarray(pressure_to_head(profile.pressure, fluid.density, pipe.gravity))
    V = np.full(grid.node_count, profile.velocity)

    offtake_index = None
    offtake_signal = None
    if scenario.offtake is not None:
        offtake_index = int(round(scenario.offtake.position / grid.dx))
        if not 0 < offtake_index < grid.node_count - 1:
            raise GridError("offtake position maps to a boundary node; refine the grid")
        offtake_signal = scenario.offtake.flowrate

    n_steps = int(np.ceil(scenario.duration / dt - 1e-9)) if scenario.duration > 0 else 0
    ts = np.arange(n_steps + 1) * dt
    B = grid.wave_speed / pipe.gravity
    R = f * dt / (2.0 * pipe.diameter)

    P_out = np.empty((n_steps + 1, grid.node_count))
    v_out = np.empty((n_steps + 1, grid.node_count))
    P_out[0] = profile.pressure
    v_out[0] = V

    for j in range(1, n_steps + 1):
        t = j * dt
        inlet_head = float(pressure_to_head(float(scenario.inlet_pressure(t)),
                                            fluid.density, pipe.gravity))
        outlet_v = float(flowrate_to_velocity(float(scenario.outlet_flowrate(t)),
                                              pipe.diameter))
        off_v = 0.0
        if offtake_signal is not None:
            off_v = float(offtake_signal(t)) / area
        try:
            H, V = moc_step(H, V, inlet_head, outlet_v, B, R, offtake_index, off_v)
        except NumericalBlowupError as exc:
            raise NumericalBlowupError(f"{exc} (step {j}, t={t:.3f} s)", step=j) from exc
        P_out[j] = head_to_pressure(H, fluid.density, pipe.gravity)
        v_out[j] = V

    return FieldGrid(xs=xs, ts=ts, P=P_out, v=v_out), grid, pipe


def _axis_weights(coords: np.ndarray, queries: np.ndarray, name: str):
    coords = np.asarray(coords, dtype=float)
    q = np.atleast_1d(np.asarray(queries, dtype=float))
    span = coords[-1] - coords[0]
    tol = 1e-9 * max(abs(span), 1.0)
    if np.any(q < coords[0] - tol) or np.any(q > coords[-1] + tol):
        raise DomainError(f"{name} query outside the field bounds "
                          f"[{coords[0]:g}, {coords[-1]:g}]")
    if coords.size == 1:
        return np.zeros(q.size, dtype=int), np.zeros(q.size)
    step = span / (coords.size - 1)
    frac = (q - coords[0]) / step
    i0 = np.clip(np.floor(frac).astype(int), 0, coords.size - 2)
    w = frac - i0
    # snap to the node when the query coincides with it (exactness contract)
    w[np.abs(w) < 1e-9] = 0.0
    w[np.abs(w - 1.0) < 1e-9] = 1.0
    return i0, w


def sample(field: FieldGrid, xs_out, ts_out) -> FieldGrid:
    """Bilinear resampling of the field onto a new rectangular grid."""
    ix, wx = _axis_weights(field.xs, xs_out, "x")
    it, wt = _axis_weights(field.ts, ts_out, "t")

    def interp(values: np.ndarray) -> np.ndarray:
        if field.xs.size == 1:
            in_x = values
        else:
            in_x = values[:, ix] * (1.0 - wx) + values[:, np.minimum(ix + 1, field.xs.size - 1)] * wx
        if field.ts.size == 1:
            return in_x[np.zeros(it.size, dtype=int), :]
        return (in_x[it, :] * (1.0 - wt)[:, None]
                + in_x[np.minimum(it + 1, field.ts.size - 1), :] * wt[:, None])

    return FieldGrid(
        xs=np.atleast_1d(np.asarray(xs_out, dtype=float)),
        ts=np.atleast_1d(np.asarray(ts_out, dtype=float)),
        P=interp(field.P),
        v=interp(field.v),
    )


def export_grid(length: float, duration: float, dx: float = 1000.0,
                dt: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """The dataset grid: evenly spaced columns/rows spanning the domain."""
    nx = int(round(length / dx))
    nt = int(round(duration / dt)) if duration > 0 else 0
    return np.linspace(0.0, length, nx + 1), np.linspace(0.0, duration, nt + 1)


def interior_column_indices(xs: np.ndarray, length: float,
                            offtake_x: float | None = None,
                            tol: float = 0.5) -> np.ndarray:
    """Columns that carry no boundary or offtake node (collocation columns)."""
    xs = np.asarray(xs, dtype=float)
    keep = (np.abs(xs - 0.0) > tol) & (np.abs(xs - length) > tol)
    if offtake_x is not None:
        keep &= np.abs(xs - offtake_x) > tol
    return np.nonzero(keep)[0]
