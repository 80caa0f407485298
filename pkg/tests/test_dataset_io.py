import json

import numpy as np
import pytest

from hydropinn.dataset import DatasetMeta, meta_path, read_dataset, write_dataset
from hydropinn.errors import ConfigError
from hydropinn.moc import FieldGrid
from hydropinn.scenario import (
    Offtake,
    PiecewiseSignal,
    Scenario,
    load_scenario,
    save_scenario,
)


class TestDatasetCsv:
    def _random_field(self, rng):
        xs = np.linspace(0.0, 50_000.0, 11)
        ts = np.linspace(0.0, 600.0, 7)
        # adversarial float values: many digits, tiny and large magnitudes
        P = rng.standard_normal((7, 11)) * np.logspace(-8, 2, 11)
        v = rng.standard_normal((7, 11)) / 3.0
        return FieldGrid(xs=xs, ts=ts, P=P, v=v)

    def test_bitwise_round_trip(self, tmp_path, rng, fluid, pipe):
        field = self._random_field(rng)
        meta = DatasetMeta(pipe=pipe.with_friction(0.0221), fluid=fluid,
                           wave_speed=1190.476, offtake_x=None)
        path = tmp_path / "ds.csv"
        write_dataset(field, meta, path)
        back, meta2 = read_dataset(path)
        assert np.array_equal(back.xs, field.xs)
        assert np.array_equal(back.ts, field.ts)
        assert np.array_equal(back.P, field.P)
        assert np.array_equal(back.v, field.v)
        assert meta2.pipe == meta.pipe
        assert meta2.fluid == meta.fluid
        assert meta2.wave_speed == meta.wave_speed

    def test_write_read_write_is_stable(self, tmp_path, rng, fluid, pipe):
        field = self._random_field(rng)
        meta = DatasetMeta(pipe=pipe.with_friction(0.0221), fluid=fluid,
                           wave_speed=1190.476)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_dataset(field, meta, p1)
        back, meta2 = read_dataset(p1)
        write_dataset(back, meta2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n1,2,3,4\n")
        with pytest.raises(ConfigError):
            read_dataset(path)

    def test_missing_sidecar(self, tmp_path, rng, fluid, pipe):
        field = self._random_field(rng)
        meta = DatasetMeta(pipe=pipe.with_friction(0.0221), fluid=fluid,
                           wave_speed=1190.0)
        path = tmp_path / "ds.csv"
        write_dataset(field, meta, path)
        meta_path(path).unlink()
        with pytest.raises(FileNotFoundError):
            read_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_dataset(tmp_path / "absent.csv")


class TestScenarioFiles:
    def test_round_trip(self, tmp_path, fluid, pipe):
        sc = Scenario(
            pipe=pipe, fluid=fluid, duration=600.0,
            inlet_pressure=PiecewiseSignal.from_breakpoints([[0, 1.48], [600, 1.6]]),
            outlet_flowrate=PiecewiseSignal.from_breakpoints(
                [[0, 0.0428], [120, 0.0428], [180, 0.0333]]),
            offtake=Offtake(position=25_000.0,
                            flowrate=PiecewiseSignal.from_breakpoints(
                                [[0, 0.0], [60, 0.005]])),
        )
        path = tmp_path / "sc.json"
        save_scenario(sc, path)
        back = load_scenario(path)
        assert back.pipe == sc.pipe
        assert back.fluid == sc.fluid
        assert back.duration == sc.duration
        ts = np.linspace(0, 600, 41)
        assert np.array_equal(back.inlet_pressure(ts), sc.inlet_pressure(ts))
        assert np.array_equal(back.outlet_flowrate(ts), sc.outlet_flowrate(ts))
        assert back.offtake.position == 25_000.0

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario(path)

    def test_missing_keys(self, tmp_path):
        path = tmp_path / "part.json"
        path.write_text(json.dumps({"pipe": {"length_m": 1000, "diameter_m": 0.25}}))
        with pytest.raises(ConfigError):
            load_scenario(path)

    def test_signal_validation(self):
        with pytest.raises(ConfigError):
            PiecewiseSignal.from_breakpoints([[0.0, 1.0], [0.0, 2.0]])
        with pytest.raises(ConfigError):
            PiecewiseSignal.from_breakpoints([])
        with pytest.raises(ConfigError):
            PiecewiseSignal.from_breakpoints([[0.0, np.nan]])

    def test_signal_holds_outside_breakpoints(self):
        s = PiecewiseSignal.from_breakpoints([[10.0, 2.0], [20.0, 4.0]])
        assert s(0.0) == 2.0
        assert s(15.0) == 3.0
        assert s(100.0) == 4.0

    def test_offtake_must_start_shut(self, fluid, pipe):
        with pytest.raises(ConfigError):
            Scenario(
                pipe=pipe, fluid=fluid, duration=100.0,
                inlet_pressure=PiecewiseSignal.constant(1.48),
                outlet_flowrate=PiecewiseSignal.constant(0.04),
                offtake=Offtake(position=25_000.0,
                                flowrate=PiecewiseSignal.constant(0.01)),
            )

    def test_offtake_position_inside_pipe(self, fluid, pipe):
        with pytest.raises(ConfigError):
            Scenario(
                pipe=pipe, fluid=fluid, duration=100.0,
                inlet_pressure=PiecewiseSignal.constant(1.48),
                outlet_flowrate=PiecewiseSignal.constant(0.04),
                offtake=Offtake(position=60_000.0,
                                flowrate=PiecewiseSignal.constant(0.0)),
            )
