"""Residual operators and loss terms for physics-informed training.

Two equivalent residual forms exist: the pressure-form operators used by
the magnitude-converted network (outputs in MPa and m/s), and the
head-form operators used by the fixed-weight baseline (outputs in m and
m/s). The pressure-form residual equals rho*g/1e6 times the head-form
residual under h = 1e6*P/(rho*g); a test suite pins that identity.

The residual cores are written once over a generic operand type: they
accept plain numpy arrays (evaluation via forward-mode duals) or tape
variables (training), since both support the same operators. Reductions
are fixed-order numpy means, keeping loss values deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff.tape import Var
from .errors import ConfigError, DomainError
from .hydraulics import FluidSpec, PipelineSpec
from .moc import FieldGrid, interior_column_indices
from .network import NetSpec, forward_with_input_tangents, net_forward, taped_forward

BC_LOSS_FORMS = ("paper", "split")


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights for the coupled loss terms."""

    bc: float = 1.0
    ic: float = 1.0
    con: float = 1.0
    mo: float = 1.0

    def __post_init__(self):
        vals = (self.bc, self.ic, self.con, self.mo)
        if any(v < 0 for v in vals):
            raise DomainError("loss weights must be non-negative")
        if all(v == 0 for v in vals):
            raise DomainError("at least one loss weight must be positive")


@dataclass(frozen=True)
class PhysicsCoefficients:
    """Constant factors of the residual operators, fixed per run."""

    gravity: float
    rho_g_over_1e6: float  # rho*g/1e6, MPa per metre of head
    rho_a2_over_1e6: float  # rho*a^2/1e6
    friction_pv: float  # f * (rho*g/1e6) / (2D), multiplies v|v|
    a2_over_g: float
    friction_hv: float  # f / (2D)
    head_per_mpa: float  # 1e6 / (rho*g)

    @classmethod
    def from_specs(cls, fluid: FluidSpec, pipe: PipelineSpec,
                   wave_speed: float) -> "PhysicsCoefficients":
        f = pipe.friction_factor
        if f is None:
            raise ConfigError("pipe friction factor must be frozen before training")
        g = pipe.gravity
        rho_g = fluid.density * g / 1e6
        return cls(
            gravity=g,
            rho_g_over_1e6=rho_g,
            rho_a2_over_1e6=fluid.density * wave_speed**2 / 1e6,
            friction_pv=f * rho_g / (2.0 * pipe.diameter),
            a2_over_g=wave_speed**2 / g,
            friction_hv=f / (2.0 * pipe.diameter),
            head_per_mpa=1e6 / (fluid.density * g),
        )


@dataclass
class CollocationSet:
    """Point families for the loss terms.

    Collocation points are interior (no observations); boundary samples
    carry observed pressure/velocity at x in {0, L}; initial samples carry
    the t=0 state at the interior columns.
    """

    x_f: np.ndarray
    t_f: np.ndarray
    x_bc: np.ndarray
    t_bc: np.ndarray
    P_bc: np.ndarray
    v_bc: np.ndarray
    x_ic: np.ndarray
    t_ic: np.ndarray
    P_ic: np.ndarray
    v_ic: np.ndarray

    def __post_init__(self):
        if self.t_ic.size and not np.all(self.t_ic == self.t_ic[0]):
            raise DomainError("initial samples must share a single time")

    @property
    def n_f(self) -> int:
        return self.x_f.size

    @property
    def n_bc(self) -> int:
        return self.x_bc.size

    @property
    def n_ic(self) -> int:
        return self.x_ic.size


def collocation_from_field(field: FieldGrid, length: float,
                           offtake_x: float | None = None) -> CollocationSet:
    """Boundary/initial/collocation families from a dataset grid.

    Interior columns (everything except the two boundary columns and the
    offtake column, when present) provide the collocation coordinates at
    every time step and the initial samples at t=0; the first and last
    columns provide boundary samples at every time step.
    """
    interior = interior_column_indices(field.xs, length, offtake_x)
    if interior.size == 0:
        raise DomainError("dataset grid has no interior columns")
    b_idx = [0, field.xs.size - 1]

    xs_f, ts_f = np.meshgrid(field.xs[interior], field.ts)
    x_bc = np.concatenate([np.full(field.ts.size, field.xs[i]) for i in b_idx])
    t_bc = np.concatenate([field.ts, field.ts])
    P_bc = np.concatenate([field.P[:, i] for i in b_idx])
    v_bc = np.concatenate([field.v[:, i] for i in b_idx])

    return CollocationSet(
        x_f=xs_f.ravel(),
        t_f=ts_f.ravel(),
        x_bc=x_bc,
        t_bc=t_bc,
        P_bc=P_bc,
        v_bc=v_bc,
        x_ic=field.xs[interior].copy(),
        t_ic=np.full(interior.size, field.ts[0]),
        P_ic=field.P[0, interior].copy(),
        v_ic=field.v[0, interior].copy(),
    )


# --- residual cores (operands: numpy arrays or tape Vars) -------------------

def momentum_residual_pv(P_x, v, v_x, v_t, c: PhysicsCoefficients):
    return (c.rho_g_over_1e6 * v_t + c.rho_g_over_1e6 * (v * v_x)
            + c.gravity * P_x + c.friction_pv * (v * abs(v)))


def continuity_residual_pv(P_t, P_x, v, v_x, c: PhysicsCoefficients):
    return P_t + v * P_x + c.rho_a2_over_1e6 * v_x


def momentum_residual_hv(h_x, v, v_x, v_t, c: PhysicsCoefficients):
    return v_t + v * v_x + c.gravity * h_x + c.friction_hv * (v * abs(v))


def continuity_residual_hv(h_t, h_x, v, v_x, c: PhysicsCoefficients):
    return h_t + v * h_x + c.a2_over_g * v_x


def _mean(r):
    return r.mean() if isinstance(r, Var) else float(np.mean(r))


def _mean_sq(r):
    return _mean(r * r)


def data_misfit(P_pred, v_pred, P_obs, v_obs, form: str):
    """Eq-style data loss: averaged-residual ('paper') or per-variable sum ('split')."""
    if form not in BC_LOSS_FORMS:
        raise ConfigError(f"unknown bc_loss_form {form!r}")
    e1 = P_pred - P_obs
    e2 = v_pred - v_obs
    if form == "paper":
        r = (e1 + e2) * 0.5
        return _mean_sq(r)
    return _mean_sq(e1) + _mean_sq(e2)


def data_misfit_terms(P_pred, v_pred, P_obs, v_obs):
    """Per-variable mean squared errors (diagnostics and the split form)."""
    return _mean_sq(P_pred - P_obs), _mean_sq(v_pred - v_obs)


# --- evaluation API (numpy in / float out) -----------------------------------

def residuals(spec: NetSpec, params, coeffs: PhysicsCoefficients, x, t):
    """(G_mo, G_con) arrays at the given points, per the net's output mode."""
    y1, v, y1x, y1t, vx, vt = forward_with_input_tangents(spec, params, x, t)
    if spec.output_mode == "pressure-velocity":
        g_mo = momentum_residual_pv(y1x, v, vx, vt, coeffs)
        g_con = continuity_residual_pv(y1t, y1x, v, vx, coeffs)
    else:
        g_mo = momentum_residual_hv(y1x, v, vx, vt, coeffs)
        g_con = continuity_residual_hv(y1t, y1x, v, vx, coeffs)
    return g_mo, g_con


def residual_mo(spec, params, coeffs, x, t):
    return residuals(spec, params, coeffs, x, t)[0]


def residual_con(spec, params, coeffs, x, t):
    return residuals(spec, params, coeffs, x, t)[1]


def _require_points(n: int, family: str):
    if n < 1:
        raise DomainError(f"{family} loss needs at least one point")


def loss_mo(colloc: CollocationSet, spec, params, coeffs) -> float:
    _require_points(colloc.n_f, "momentum")
    return _mean_sq(residual_mo(spec, params, coeffs, colloc.x_f, colloc.t_f))


def loss_con(colloc: CollocationSet, spec, params, coeffs) -> float:
    _require_points(colloc.n_f, "continuity")
    return _mean_sq(residual_con(spec, params, coeffs, colloc.x_f, colloc.t_f))


def _observed_first_channel(P_obs, spec: NetSpec, coeffs: PhysicsCoefficients):
    """Targets for the first output channel (pressure or head)."""
    if spec.output_mode == "head-velocity":
        return P_obs * coeffs.head_per_mpa
    return P_obs


def loss_bc(colloc: CollocationSet, spec, params, coeffs,
            form: str = "paper") -> float:
    _require_points(colloc.n_bc, "boundary")
    y1, v = net_forward(spec, params, colloc.x_bc, colloc.t_bc)
    obs = _observed_first_channel(colloc.P_bc, spec, coeffs)
    return data_misfit(y1, v, obs, colloc.v_bc, form)


def loss_ic(colloc: CollocationSet, spec, params, coeffs,
            form: str = "paper") -> float:
    _require_points(colloc.n_ic, "initial")
    y1, v = net_forward(spec, params, colloc.x_ic, colloc.t_ic)
    obs = _observed_first_channel(colloc.P_ic, spec, coeffs)
    return data_misfit(y1, v, obs, colloc.v_ic, form)


def coupled_loss(weights: LossWeights, colloc: CollocationSet, spec, params,
                 coeffs, form: str = "paper") -> float:
    """Weighted sum: bc*L_bc + ic*L_ic + con*L_con + mo*L_mo."""
    _require_points(colloc.n_f, "collocation")
    g_mo, g_con = residuals(spec, params, coeffs, colloc.x_f, colloc.t_f)
    return (weights.bc * loss_bc(colloc, spec, params, coeffs, form)
            + weights.ic * loss_ic(colloc, spec, params, coeffs, form)
            + weights.con * _mean_sq(g_con)
            + weights.mo * _mean_sq(g_mo))


# --- taped API (for training) -------------------------------------------------

def taped_data_loss(spec: NetSpec, param_vars, x, t, P_obs, v_obs,
                    coeffs: PhysicsCoefficients, form: str):
    """Data loss Var plus per-variable diagnostic values."""
    y1, v = taped_forward(spec, param_vars, x, t)
    obs = _observed_first_channel(P_obs, spec, coeffs)
    loss = data_misfit(y1, v, obs, v_obs, form)
    m1, m2 = data_misfit_terms(y1.value, v.value, obs, v_obs)
    return loss, (m1, m2)


def taped_physics_losses(spec: NetSpec, param_vars, x, t,
                         coeffs: PhysicsCoefficients):
    """(L_con, L_mo) Vars at collocation points."""
    y1, v, y1x, y1t, vx, vt = taped_forward(spec, param_vars, x, t,
                                            with_tangents=True)
    if spec.output_mode == "pressure-velocity":
        g_mo = momentum_residual_pv(y1x, v, vx, vt, coeffs)
        g_con = continuity_residual_pv(y1t, y1x, v, vx, coeffs)
    else:
        g_mo = momentum_residual_hv(y1x, v, vx, vt, coeffs)
        g_con = continuity_residual_hv(y1t, y1x, v, vx, coeffs)
    return _mean_sq(g_con), _mean_sq(g_mo)
