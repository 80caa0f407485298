"""Adam optimization and the three-stage hierarchical training schedule.

Stage one fits the boundary data (split per-variable loss), stage two the
initial-condition data starting from the stage-one parameters, and stage
three the full weighted coupled loss starting from the stage-two
parameters. Baselines reuse the same machinery: `pinn` runs one coupled
stage with head-channel outputs and the unconverted residual operators;
`dnn` runs one data-only stage (standard per-variable MSE).

Each stage returns the best parameters seen on its own objective,
evaluated on fixed full/eval point sets at the stage boundaries and every
`EVAL_EVERY` iterations, so a stage can never hand off parameters worse
than the ones it received.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalBlowupError, TrainingDivergedError
from .losses import (
    CollocationSet,
    LossWeights,
    PhysicsCoefficients,
    data_misfit,
    data_misfit_terms,
    residuals,
    taped_data_loss,
    taped_physics_losses,
    _observed_first_channel,
)
from .network import (
    InputScaler,
    NetSpec,
    init_params,
    net_forward,
    params_copy,
    params_to_vars,
    params_zeros_like,
)
from .autodiff.tape import Tape

BASELINES = ("kih", "pinn", "dnn")
EVAL_EVERY = 250
EVAL_COLLOCATION_POINTS = 2048

TRACE_CSV_HEADER = "stage,iter,loss_bc,loss_ic,loss_con,loss_mo,loss_total"


@dataclass(frozen=True)
class TrainConfig:
    baseline: str = "kih"
    hidden_layers: int = 10
    width: int = 50
    activation: str = "softplus"
    stage_iterations: tuple[int, int, int] = (2000, 2000, 16000)
    iterations: int | None = None  # single-stage baselines; defaults to the stage sum
    batch_size: int = 128
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    bc_loss_form: str = "paper"
    bc_retention_factor: float = 10.0
    divergence_threshold: float = 1e6
    lr_decay: float = 1.0  # per-iteration multiplicative factor; 1.0 = constant rate

    def __post_init__(self):
        if self.baseline not in BASELINES:
            raise ConfigError(f"unknown baseline {self.baseline!r}; expected {BASELINES}")
        if len(self.stage_iterations) != 3 or any(n < 0 for n in self.stage_iterations):
            raise ConfigError("stage_iterations must be three non-negative counts")
        if self.iterations is not None and self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.bc_loss_form not in ("paper", "split"):
            raise ConfigError("bc_loss_form must be 'paper' or 'split'")

    @property
    def total_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return sum(self.stage_iterations)

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "network": {
                "hidden_layers": self.hidden_layers,
                "width": self.width,
                "activation": self.activation,
            },
            "stage_iterations": list(self.stage_iterations),
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "adam": {"beta1": self.beta1, "beta2": self.beta2, "eps": self.eps},
            "seed": self.seed,
            "weights": {"bc": self.weights.bc, "ic": self.weights.ic,
                        "con": self.weights.con, "mo": self.weights.mo},
            "bc_loss_form": self.bc_loss_form,
            "bc_retention_factor": self.bc_retention_factor,
            "divergence_threshold": self.divergence_threshold,
            "lr_decay": self.lr_decay,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        net = d.get("network", {})
        adam = d.get("adam", {})
        w = d.get("weights", {})
        kwargs = dict(
            baseline=d.get("baseline", "kih"),
            hidden_layers=int(net.get("hidden_layers", 10)),
            width=int(net.get("width", 50)),
            activation=net.get("activation", "softplus"),
            batch_size=int(d.get("batch_size", 128)),
            learning_rate=float(d.get("learning_rate", 1e-4)),
            beta1=float(adam.get("beta1", 0.9)),
            beta2=float(adam.get("beta2", 0.999)),
            eps=float(adam.get("eps", 1e-8)),
            seed=int(d.get("seed", 0)),
            weights=LossWeights(
                bc=float(w.get("bc", 1.0)), ic=float(w.get("ic", 1.0)),
                con=float(w.get("con", 1.0)), mo=float(w.get("mo", 1.0)),
            ),
            bc_loss_form=d.get("bc_loss_form", "paper"),
            bc_retention_factor=float(d.get("bc_retention_factor", 10.0)),
            divergence_threshold=float(d.get("divergence_threshold", 1e6)),
            lr_decay=float(d.get("lr_decay", 1.0)),
        )
        if "stage_iterations" in d:
            kwargs["stage_iterations"] = tuple(int(n) for n in d["stage_iterations"])
        if d.get("iterations") is not None:
            kwargs["iterations"] = int(d["iterations"])
        return cls(**kwargs)


def load_train_config(path) -> TrainConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"train config {path} is not valid JSON: {exc}") from exc
    return TrainConfig.from_dict(data)


def output_mode_for(baseline: str) -> str:
    return "pressure-velocity" if baseline == "kih" else "head-velocity"


@dataclass
class TrainingData:
    """Everything a training run reads: point families plus physics constants."""

    colloc: CollocationSet
    coeffs: PhysicsCoefficients
    scaler: InputScaler

    @classmethod
    def from_dataset(cls, field_grid, meta) -> "TrainingData":
        from .losses import collocation_from_field

        colloc = collocation_from_field(field_grid, meta.pipe.length, meta.offtake_x)
        coeffs = PhysicsCoefficients.from_specs(meta.fluid, meta.pipe, meta.wave_speed)
        scaler = InputScaler(
            x_min=float(field_grid.xs[0]), x_max=float(field_grid.xs[-1]),
            t_min=float(field_grid.ts[0]),
            t_max=float(field_grid.ts[-1]) if field_grid.ts[-1] > field_grid.ts[0]
            else float(field_grid.ts[0]) + 1.0,
        )
        return cls(colloc=colloc, coeffs=coeffs, scaler=scaler)


@dataclass
class TraceRow:
    stage: int
    iteration: int
    loss_bc: float
    loss_ic: float
    loss_con: float
    loss_mo: float
    loss_total: float
    bc_first: float  # per-channel BC diagnostics (pressure or head channel)
    bc_velocity: float


@dataclass
class StageSummary:
    stage: int
    objective_start: float
    objective_end: float


@dataclass
class TrainTrace:
    rows: list = field(default_factory=list)
    stage_summaries: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        lines = [TRACE_CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.stage},{r.iteration},{r.loss_bc:.10e},{r.loss_ic:.10e},"
                f"{r.loss_con:.10e},{r.loss_mo:.10e},{r.loss_total:.10e}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros(cls, params) -> "AdamState":
        return cls(m=params_zeros_like(params), v=params_zeros_like(params))


def adam_step(params, grads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """Standard Adam update with bias correction; mutates params and state."""
    for gw, gb in grads:
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NumericalBlowupError("non-finite gradient in Adam step")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(params, grads, state.m, state.v):
        for arr, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            arr -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


class _FamilyBatcher:
    """Uniform sampling without replacement per epoch; full family if small."""

    def __init__(self, n: int, batch: int, rng: np.random.Generator):
        self.n = n
        self.batch = min(batch, n)
        self.rng = rng
        self._perm = None
        self._pos = 0

    def next(self) -> np.ndarray:
        if self.batch == self.n:
            return np.arange(self.n)
        if self._perm is None or self._pos >= self.n:
            self._perm = self.rng.permutation(self.n)
            self._pos = 0
        idx = self._perm[self._pos:self._pos + self.batch]
        self._pos += self.batch
        return idx


def _eval_data_loss(spec, params, x, t, P_obs, v_obs, coeffs, form) -> float:
    y1, v = net_forward(spec, params, x, t)
    obs = _observed_first_channel(P_obs, spec, coeffs)
    return float(data_misfit(y1, v, obs, v_obs, form))


def _eval_physics_losses(spec, params, x, t, coeffs) -> tuple[float, float]:
    from .losses import _mean_sq

    g_mo, g_con = residuals(spec, params, coeffs, x, t)
    return float(_mean_sq(g_con)), float(_mean_sq(g_mo))


@dataclass
class _StageContext:
    """Fixed evaluation sets and batchers for one stage (seeded per stage)."""

    bc_batcher: _FamilyBatcher
    ic_batcher: _FamilyBatcher
    f_batcher: _FamilyBatcher
    f_eval_idx: np.ndarray


def _stage_context(cfg: TrainConfig, data: TrainingData, stage_id: int) -> _StageContext:
    seq = np.random.SeedSequence((cfg.seed, stage_id))
    s_bc, s_ic, s_f, s_eval = [np.random.default_rng(s) for s in seq.spawn(4)]
    n_f = data.colloc.n_f
    n_eval = min(EVAL_COLLOCATION_POINTS, n_f)
    f_eval_idx = np.sort(s_eval.choice(n_f, size=n_eval, replace=False))
    return _StageContext(
        bc_batcher=_FamilyBatcher(data.colloc.n_bc, cfg.batch_size, s_bc),
        ic_batcher=_FamilyBatcher(data.colloc.n_ic, cfg.batch_size, s_ic),
        f_batcher=_FamilyBatcher(n_f, cfg.batch_size, s_f),
        f_eval_idx=f_eval_idx,
    )


def _stage_objective(kind: str, cfg: TrainConfig, spec, params,
                     data: TrainingData, ctx: _StageContext, form: str) -> float:
    """Full-set (eval-subset for collocation) value of the stage objective."""
    c = data.colloc
    if kind == "bc":
        return _eval_data_loss(spec, params, c.x_bc, c.t_bc, c.P_bc, c.v_bc,
                               data.coeffs, "split")
    if kind == "ic":
        return _eval_data_loss(spec, params, c.x_ic, c.t_ic, c.P_ic, c.v_ic,
                               data.coeffs, "split")
    bc = _eval_data_loss(spec, params, c.x_bc, c.t_bc, c.P_bc, c.v_bc,
                         data.coeffs, form)
    ic = _eval_data_loss(spec, params, c.x_ic, c.t_ic, c.P_ic, c.v_ic,
                         data.coeffs, form)
    if kind == "data":
        return cfg.weights.bc * bc + cfg.weights.ic * ic
    idx = ctx.f_eval_idx
    con, mo = _eval_physics_losses(spec, params, c.x_f[idx], c.t_f[idx], data.coeffs)
    w = cfg.weights
    return w.bc * bc + w.ic * ic + w.con * con + w.mo * mo


def _run_stage(stage_id: int, kind: str, iterations: int, cfg: TrainConfig,
               spec: NetSpec, params, data: TrainingData, trace: TrainTrace,
               start_iteration: int, form: str | None = None,
               log_every: int = 0, log=print):
    """Optimize one stage objective; returns (best_params, next_iteration).

    kind: 'bc' | 'ic' | 'coupled' | 'data'. All kinds draw batches from all
    three families each iteration (terms outside the objective are recorded
    tape-free for the trace), so traces are comparable across stages.
    """
    ctx = _stage_context(cfg, data, stage_id)
    c = data.colloc
    w = cfg.weights
    if form is None:
        form = cfg.bc_loss_form

    start_obj = _stage_objective(kind, cfg, spec, params, data, ctx, form)
    best_obj = start_obj
    best_params = params_copy(params)
    adam = AdamState.zeros(params)
    lr = cfg.learning_rate

    it = start_iteration
    for k in range(iterations):
        bc_idx = ctx.bc_batcher.next()
        ic_idx = ctx.ic_batcher.next()
        f_idx = ctx.f_batcher.next()

        tape = Tape()
        pvars = params_to_vars(tape, params)
        flat_vars = [v for pair in pvars for v in pair]

        bc_args = (c.x_bc[bc_idx], c.t_bc[bc_idx], c.P_bc[bc_idx], c.v_bc[bc_idx])
        ic_args = (c.x_ic[ic_idx], c.t_ic[ic_idx], c.P_ic[ic_idx], c.v_ic[ic_idx])
        f_args = (c.x_f[f_idx], c.t_f[f_idx])

        if kind == "bc":
            loss_var, (d1, d2) = taped_data_loss(
                spec, pvars, bc_args[0], bc_args[1], bc_args[2], bc_args[3],
                data.coeffs, "split")
            bc_val = float(loss_var.value)
            ic_val = _eval_data_loss(spec, params, *ic_args, data.coeffs, "split")
            con_val, mo_val = _eval_physics_losses(spec, params, *f_args, data.coeffs)
        elif kind == "ic":
            loss_var, _ = taped_data_loss(
                spec, pvars, ic_args[0], ic_args[1], ic_args[2], ic_args[3],
                data.coeffs, "split")
            ic_val = float(loss_var.value)
            bc_val, (d1, d2) = _eval_data_loss_terms(spec, params, bc_args,
                                                     data.coeffs, "split")
            con_val, mo_val = _eval_physics_losses(spec, params, *f_args, data.coeffs)
        elif kind in ("coupled", "data"):
            bc_var, (d1, d2) = taped_data_loss(
                spec, pvars, bc_args[0], bc_args[1], bc_args[2], bc_args[3],
                data.coeffs, form)
            ic_var, _ = taped_data_loss(
                spec, pvars, ic_args[0], ic_args[1], ic_args[2], ic_args[3],
                data.coeffs, form)
            bc_val = float(bc_var.value)
            ic_val = float(ic_var.value)
            if kind == "coupled":
                con_var, mo_var = taped_physics_losses(spec, pvars, *f_args,
                                                       data.coeffs)
                con_val = float(con_var.value)
                mo_val = float(mo_var.value)
                loss_var = (w.bc * bc_var + w.ic * ic_var
                            + w.con * con_var + w.mo * mo_var)
            else:
                con_val, mo_val = _eval_physics_losses(spec, params, *f_args,
                                                       data.coeffs)
                loss_var = w.bc * bc_var + w.ic * ic_var
        else:
            raise ConfigError(f"unknown stage kind {kind!r}")

        total = float(loss_var.value)
        if not np.isfinite(total) or total > cfg.divergence_threshold:
            raise TrainingDivergedError(
                f"stage {stage_id} diverged at iteration {it}: loss={total:.4g} "
                f"(bc={bc_val:.4g}, ic={ic_val:.4g}, con={con_val:.4g}, "
                f"mo={mo_val:.4g})",
                trace=trace,
            )

        flat_grads = tape.gradients(loss_var, flat_vars)
        grads = [(flat_grads[2 * i], flat_grads[2 * i + 1])
                 for i in range(len(pvars))]
        try:
            adam_step(params, grads, adam, lr, cfg.beta1, cfg.beta2, cfg.eps)
        except NumericalBlowupError as exc:
            terms = {"bc": bc_val, "ic": ic_val, "con": con_val, "mo": mo_val}
            bad = [name for name, val in terms.items() if not np.isfinite(val)]
            raise NumericalBlowupError(
                f"stage {stage_id} iteration {it}: {exc}; "
                f"non-finite loss terms: {bad or 'none (gradient only)'}"
            ) from exc
        if cfg.lr_decay != 1.0:
            lr *= cfg.lr_decay

        trace.rows.append(TraceRow(
            stage=stage_id, iteration=it,
            loss_bc=bc_val, loss_ic=ic_val, loss_con=con_val, loss_mo=mo_val,
            loss_total=total, bc_first=float(d1), bc_velocity=float(d2),
        ))
        it += 1

        if (k + 1) % EVAL_EVERY == 0 or k + 1 == iterations:
            obj = _stage_objective(kind, cfg, spec, params, data, ctx, form)
            if obj < best_obj:
                best_obj = obj
                best_params = params_copy(params)
        if log_every and (k + 1) % log_every == 0:
            log(f"stage {stage_id} iter {k + 1}/{iterations} "
                f"total={total:.4e} bc={bc_val:.4e} ic={ic_val:.4e} "
                f"con={con_val:.4e} mo={mo_val:.4e}")

    trace.stage_summaries.append(
        StageSummary(stage=stage_id, objective_start=start_obj,
                     objective_end=best_obj))
    return best_params, it


def _eval_data_loss_terms(spec, params, args, coeffs, form):
    x, t, P_obs, v_obs = args
    y1, v = net_forward(spec, params, x, t)
    obs = _observed_first_channel(P_obs, spec, coeffs)
    total = float(data_misfit(y1, v, obs, v_obs, form))
    m1, m2 = data_misfit_terms(y1, v, obs, v_obs)
    return total, (m1, m2)


def _make_spec(cfg: TrainConfig, data: TrainingData, output_mode: str) -> NetSpec:
    return NetSpec(
        hidden_layers=cfg.hidden_layers,
        width=cfg.width,
        activation=cfg.activation,
        scaler=data.scaler,
        output_mode=output_mode,
    )


def train_stage_one(cfg: TrainConfig, data: TrainingData, trace: TrainTrace,
                    log_every: int = 0, log=print):
    """Boundary-data fit from random initialization; returns (spec, params, it)."""
    spec = _make_spec(cfg, data, output_mode_for(cfg.baseline))
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    params = init_params(spec, rng)
    params, it = _run_stage(1, "bc", cfg.stage_iterations[0], cfg, spec, params,
                            data, trace, 0, log_every=log_every, log=log)
    return spec, params, it


def train_stage_two(cfg: TrainConfig, data: TrainingData, spec: NetSpec, params,
                    trace: TrainTrace, start_iteration: int = 0,
                    log_every: int = 0, log=print):
    """Initial-condition fit from the stage-one parameters."""
    c = data.colloc
    bc_before = _eval_data_loss(spec, params, c.x_bc, c.t_bc, c.P_bc, c.v_bc,
                                data.coeffs, "split")
    params, it = _run_stage(2, "ic", cfg.stage_iterations[1], cfg, spec, params,
                            data, trace, start_iteration,
                            log_every=log_every, log=log)
    bc_after = _eval_data_loss(spec, params, c.x_bc, c.t_bc, c.P_bc, c.v_bc,
                               data.coeffs, "split")
    if bc_after > cfg.bc_retention_factor * max(bc_before, 1e-300):
        trace.warnings.append(
            f"stage 2 grew the boundary loss {bc_after / max(bc_before, 1e-300):.1f}x "
            f"(from {bc_before:.3e} to {bc_after:.3e})"
        )
    return params, it


def train_stage_three(cfg: TrainConfig, data: TrainingData, spec: NetSpec, params,
                      trace: TrainTrace, start_iteration: int = 0,
                      log_every: int = 0, log=print):
    """Coupled-loss fit from the stage-two parameters."""
    params, it = _run_stage(3, "coupled", cfg.stage_iterations[2], cfg, spec,
                            params, data, trace, start_iteration,
                            log_every=log_every, log=log)
    return params, it


def train(cfg: TrainConfig, data: TrainingData, log_every: int = 0, log=print):
    """Dispatch on the baseline tag; returns (spec, params, trace)."""
    trace = TrainTrace()
    if cfg.baseline == "kih":
        spec, params, it = train_stage_one(cfg, data, trace, log_every, log)
        params, it = train_stage_two(cfg, data, spec, params, trace, it,
                                     log_every, log)
        params, _ = train_stage_three(cfg, data, spec, params, trace, it,
                                      log_every, log)
        return spec, params, trace

    spec = _make_spec(cfg, data, output_mode_for(cfg.baseline))
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    params = init_params(spec, rng)
    kind = "coupled" if cfg.baseline == "pinn" else "data"
    form = cfg.bc_loss_form if cfg.baseline == "pinn" else "split"
    params, _ = _run_stage(1, kind, cfg.total_iterations, cfg, spec, params,
                           data, trace, 0, form=form,
                           log_every=log_every, log=log)
    return spec, params, trace
