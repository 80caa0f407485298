"""Dataset files: field CSV plus a JSON metadata sidecar.

CSV schema (one row per grid point, t-major):

    x_m,t_s,pressure_mpa,velocity_mps

Floats are written with 17 significant digits so a write/read cycle is
bitwise exact. The sidecar ``<dataset>.meta.json`` records the pipe/fluid
specs, the frozen friction factor, and the effective wave speed of the
generating run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .hydraulics import FluidSpec, PipelineSpec
from .moc import FieldGrid
from .scenario import fluid_from_dict, fluid_to_dict, pipe_from_dict, pipe_to_dict

CSV_HEADER = "x_m,t_s,pressure_mpa,velocity_mps"
META_FORMAT = "hydropinn-dataset/1"


@dataclass(frozen=True)
class DatasetMeta:
    pipe: PipelineSpec
    fluid: FluidSpec
    wave_speed: float  # effective (grid) wave speed of the generating solver
    offtake_x: float | None = None

    def to_dict(self) -> dict:
        return {
            "format": META_FORMAT,
            "pipe": pipe_to_dict(self.pipe),
            "fluid": fluid_to_dict(self.fluid),
            "wave_speed_mps": self.wave_speed,
            "offtake_position_m": self.offtake_x,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetMeta":
        if d.get("format") != META_FORMAT:
            raise ConfigError(f"unsupported dataset metadata format: {d.get('format')!r}")
        off = d.get("offtake_position_m")
        return cls(
            pipe=pipe_from_dict(d["pipe"]),
            fluid=fluid_from_dict(d["fluid"]),
            wave_speed=float(d["wave_speed_mps"]),
            offtake_x=None if off is None else float(off),
        )


def meta_path(dataset_path) -> Path:
    return Path(str(dataset_path) + ".meta.json")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_dataset(field: FieldGrid, meta: DatasetMeta, path) -> None:
    path = Path(path)
    lines = [CSV_HEADER]
    for j, t in enumerate(field.ts):
        ts_s = _fmt(t)
        for i, x in enumerate(field.xs):
            lines.append(
                f"{_fmt(x)},{ts_s},{_fmt(field.P[j, i])},{_fmt(field.v[j, i])}"
            )
    path.write_text("\n".join(lines) + "\n")
    meta_path(path).write_text(json.dumps(meta.to_dict(), indent=2) + "\n")


def read_dataset(path) -> tuple[FieldGrid, DatasetMeta]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ConfigError(f"{path} is not a dataset CSV (expected header '{CSV_HEADER}')")
    rows = np.array(
        [[float(cell) for cell in line.split(",")] for line in lines[1:] if line],
        dtype=float,
    )
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise ConfigError(f"{path} has malformed rows")
    xs = np.unique(rows[:, 0])
    nx = xs.size
    if rows.shape[0] % nx != 0:
        raise ConfigError(f"{path} is not a complete rectangular grid")
    nt = rows.shape[0] // nx
    # rows are t-major: positions repeat within each time block
    if not np.array_equal(rows[:nx, 0], np.sort(rows[:nx, 0])):
        raise ConfigError(f"{path} rows are not x-sorted within time blocks")
    xs = rows[:nx, 0]
    ts = rows[::nx, 1]
    field = FieldGrid(
        xs=xs,
        ts=ts,
        P=rows[:, 2].reshape(nt, nx),
        v=rows[:, 3].reshape(nt, nx),
    )
    mpath = meta_path(path)
    try:
        meta = DatasetMeta.from_dict(json.loads(mpath.read_text()))
    except FileNotFoundError:
        raise FileNotFoundError(f"dataset metadata sidecar missing: {mpath}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{mpath} is not valid JSON: {exc}") from exc
    return field, meta
