"""The surrogate network: a fully connected MLP over normalized (x, t).

Inputs are min-max normalized to [0, 1]; raw outputs are interpreted
directly in physical units, either (pressure [MPa], velocity [m/s]) or
(head [m], velocity [m/s]) depending on the output mode. Derivative-aware
forwards apply the normalization chain-rule factors so returned
derivatives are with respect to physical x [m] and t [s].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .autodiff.dual import Dual, dual_softplus, softplus
from .autodiff.tape import Tape, Var, tape_softplus, tape_softplus_sigmoid
from .errors import ConfigError, DomainError

OUTPUT_MODES = ("pressure-velocity", "head-velocity")
ACTIVATIONS = ("softplus", "identity")

CHECKPOINT_FORMAT = "hydropinn-checkpoint/1"

# params are a list of (weights, bias) per layer; gradients share the layout
NetParams = list


@dataclass(frozen=True)
class InputScaler:
    """Min-max bounds mapping physical (x, t) onto the unit square."""

    x_min: float
    x_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.t_min < self.t_max):
            raise DomainError("input scaler requires min < max on both axes")

    def normalize(self, x, t):
        u = (np.asarray(x, dtype=float) - self.x_min) / (self.x_max - self.x_min)
        s = (np.asarray(t, dtype=float) - self.t_min) / (self.t_max - self.t_min)
        return u, s

    @property
    def dx_factor(self) -> float:
        return 1.0 / (self.x_max - self.x_min)

    @property
    def dt_factor(self) -> float:
        return 1.0 / (self.t_max - self.t_min)


@dataclass(frozen=True)
class NetSpec:
    hidden_layers: int = 10
    width: int = 50
    activation: str = "softplus"
    scaler: InputScaler = field(
        default_factory=lambda: InputScaler(0.0, 1.0, 0.0, 1.0)
    )
    output_mode: str = "pressure-velocity"

    def __post_init__(self):
        if self.hidden_layers < 1 or self.width < 1:
            raise DomainError("need at least one hidden layer of width >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.output_mode not in OUTPUT_MODES:
            raise ConfigError(f"unknown output mode {self.output_mode!r}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [2] + [self.width] * self.hidden_layers + [2]
        return list(zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {
            "hidden_layers": self.hidden_layers,
            "width": self.width,
            "activation": self.activation,
            "output_mode": self.output_mode,
            "scaler": {
                "x_min": self.scaler.x_min,
                "x_max": self.scaler.x_max,
                "t_min": self.scaler.t_min,
                "t_max": self.scaler.t_max,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetSpec":
        sc = d["scaler"]
        return cls(
            hidden_layers=int(d["hidden_layers"]),
            width=int(d["width"]),
            activation=d["activation"],
            output_mode=d["output_mode"],
            scaler=InputScaler(
                float(sc["x_min"]), float(sc["x_max"]),
                float(sc["t_min"]), float(sc["t_max"]),
            ),
        )

    def with_scaler(self, scaler: InputScaler) -> "NetSpec":
        return replace(self, scaler=scaler)


SOFTPLUS_INIT_GAIN = 1.2
FIRST_LAYER_GAIN = 2.0


def init_params(spec: NetSpec, seed: int | np.random.Generator = 0,
                gain: float = SOFTPLUS_INIT_GAIN,
                first_layer_gain: float = FIRST_LAYER_GAIN) -> NetParams:
    """He-style initialization (variance gain^2 * 2/fan_in), zero biases
    except for the first layer.

    Two corrections to plain He, both needed because training runs at a
    small constant learning rate:

    * softplus damps the input-dependent signal by roughly half per layer,
      so deep stacks collapse to a near-constant function at init; the
      default gain restores O(1) output spread through ten layers
      (measured empirically);
    * with zero first-layer biases every unit's activation kink crosses
      the origin of the normalized input square, and features localized
      elsewhere (a wavefront arriving mid-run) are slow to form. The first
      layer therefore gets a larger gain and biases placed so each kink
      falls at a random point of the unit square.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = []
    for li, (n_in, n_out) in enumerate(spec.layer_dims):
        g = first_layer_gain if li == 0 else gain
        w = rng.standard_normal((n_in, n_out)) * g * np.sqrt(2.0 / n_in)
        if li == 0:
            anchors = rng.uniform(0.0, 1.0, (n_in, n_out))
            b = -np.sum(w * anchors, axis=0)
        else:
            b = np.zeros(n_out)
        params.append((w, b))
    return params


def params_copy(params: NetParams) -> NetParams:
    return [(w.copy(), b.copy()) for w, b in params]


def params_zeros_like(params: NetParams) -> NetParams:
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]


def _stack_inputs(spec: NetSpec, x, t) -> np.ndarray:
    u, s = spec.scaler.normalize(np.atleast_1d(x), np.atleast_1d(t))
    return np.column_stack([u, s])


def net_forward(spec: NetSpec, params: NetParams, x, t):
    """Plain forward pass; returns the two output channels as 1-d arrays."""
    a = _stack_inputs(spec, x, t)
    act = softplus if spec.activation == "softplus" else None
    for w, b in params[:-1]:
        z = a @ w + b
        a = act(z) if act is not None else z
    w, b = params[-1]
    y = a @ w + b
    return y[:, 0], y[:, 1]


def forward_with_input_tangents(spec: NetSpec, params: NetParams, x, t):
    """Outputs plus exact physical-space derivatives via forward-mode duals.

    Returns (P, v, dP/dx, dP/dt, dv/dx, dv/dt); in head-velocity mode the
    first channel is head. Derivative exactness is machine precision --
    these are derivatives of the network function itself.
    """
    a0 = _stack_inputs(spec, x, t)
    n = a0.shape[0]
    dx0 = np.zeros_like(a0)
    dx0[:, 0] = spec.scaler.dx_factor
    dt0 = np.zeros_like(a0)
    dt0[:, 1] = spec.scaler.dt_factor
    a = Dual(a0, dx0, dt0)
    use_softplus = spec.activation == "softplus"
    for w, b in params[:-1]:
        z = (a @ w) + b
        a = dual_softplus(z) if use_softplus else z
    w, b = params[-1]
    y = (a @ w) + b
    return (
        y.value[:, 0], y.value[:, 1],
        y.tangent_x[:, 0], y.tangent_t[:, 0],
        y.tangent_x[:, 1], y.tangent_t[:, 1],
    )


def params_to_vars(tape: Tape, params: NetParams) -> list:
    return [(tape.leaf(w), tape.leaf(b)) for w, b in params]


def taped_forward(spec: NetSpec, param_vars: list, x, t,
                  with_tangents: bool = False):
    """Forward pass recorded on the tape of `param_vars`.

    Without tangents returns (P, v) Vars; with tangents additionally
    returns (Px, Pt, vx, vt) Vars whose parameter adjoints carry the
    second-order cross terms the PDE losses need.
    """
    a0 = _stack_inputs(spec, x, t)
    use_softplus = spec.activation == "softplus"
    if not with_tangents:
        a = a0
        for wv, bv in param_vars[:-1]:
            z = _mm(a, wv) + bv
            a = tape_softplus(z) if use_softplus else z
        wv, bv = param_vars[-1]
        y = _mm(a, wv) + bv
        return y.column(0), y.column(1)

    ax = np.zeros_like(a0)
    ax[:, 0] = spec.scaler.dx_factor
    at = np.zeros_like(a0)
    at[:, 1] = spec.scaler.dt_factor
    a, dax, dat = a0, ax, at
    for wv, bv in param_vars[:-1]:
        z = _mm(a, wv) + bv
        zx = _mm(dax, wv)
        zt = _mm(dat, wv)
        if use_softplus:
            a, s = tape_softplus_sigmoid(z)
            dax = s * zx
            dat = s * zt
        else:
            a, dax, dat = z, zx, zt
    wv, bv = param_vars[-1]
    y = _mm(a, wv) + bv
    yx = _mm(dax, wv)
    yt = _mm(dat, wv)
    return (y.column(0), y.column(1),
            yx.column(0), yt.column(0),
            yx.column(1), yt.column(1))


def _mm(a, w: Var) -> Var:
    """a @ w where a is a constant array or a Var."""
    if isinstance(a, Var):
        return a @ w
    return w.__rmatmul__(a)


def save_checkpoint(path, spec: NetSpec, params: NetParams,
                    label: str | None = None) -> None:
    arrays = {}
    for i, (w, b) in enumerate(params):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    meta = {
        "format": CHECKPOINT_FORMAT,
        "spec": spec.to_dict(),
        "n_layers": len(params),
        "label": label,
    }
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.asarray(json.dumps(meta)), **arrays)


def load_checkpoint(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        try:
            meta = json.loads(str(data["meta"]))
        except (KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path} is not a hydropinn checkpoint") from exc
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError(f"unsupported checkpoint format {meta.get('format')!r}")
        spec = NetSpec.from_dict(meta["spec"])
        params = [
            (data[f"W{i}"].astype(float), data[f"b{i}"].astype(float))
            for i in range(int(meta["n_layers"]))
        ]
    expected = spec.layer_dims
    got = [(w.shape[0], w.shape[1]) for w, _ in params]
    if got != expected:
        raise ConfigError(f"checkpoint layer shapes {got} do not match spec {expected}")
    return spec, params, meta.get("label")
