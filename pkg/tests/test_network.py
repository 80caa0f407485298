import numpy as np
import pytest

from hydropinn.errors import ConfigError, DomainError
from hydropinn.network import (
    InputScaler,
    NetSpec,
    init_params,
    load_checkpoint,
    net_forward,
    save_checkpoint,
)


class TestSpecs:
    def test_layer_dims(self):
        spec = NetSpec(hidden_layers=10, width=50,
                       scaler=InputScaler(0, 1, 0, 1))
        dims = spec.layer_dims
        assert dims[0] == (2, 50)
        assert dims[-1] == (50, 2)
        assert len(dims) == 11
        assert sum(i * o + o for i, o in dims) == 23_202

    def test_validation(self):
        with pytest.raises(DomainError):
            NetSpec(hidden_layers=0, width=50, scaler=InputScaler(0, 1, 0, 1))
        with pytest.raises(ConfigError):
            NetSpec(activation="relu", scaler=InputScaler(0, 1, 0, 1))
        with pytest.raises(ConfigError):
            NetSpec(output_mode="pressure", scaler=InputScaler(0, 1, 0, 1))
        with pytest.raises(DomainError):
            InputScaler(1.0, 1.0, 0.0, 1.0)

    def test_init_shapes_and_determinism(self):
        spec = NetSpec(hidden_layers=3, width=7, scaler=InputScaler(0, 1, 0, 1))
        p1 = init_params(spec, 42)
        p2 = init_params(spec, 42)
        p3 = init_params(spec, 43)
        for (w1, b1), (w2, b2), (i, o) in zip(p1, p2, spec.layer_dims):
            assert w1.shape == (i, o) and b1.shape == (o,)
            assert np.array_equal(w1, w2)
            assert np.all(b1 == 0.0)
        assert not np.array_equal(p1[0][0], p3[0][0])


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        spec = NetSpec(hidden_layers=4, width=12,
                       scaler=InputScaler(0.0, 50_000.0, 0.0, 600.0),
                       output_mode="head-velocity")
        params = init_params(spec, 5)
        path = tmp_path / "model.npz"
        save_checkpoint(path, spec, params, label="pinn")
        spec2, params2, label = load_checkpoint(path)
        assert spec2 == spec
        assert label == "pinn"
        for (w1, b1), (w2, b2) in zip(params, params2):
            assert np.array_equal(w1, w2)
            assert np.array_equal(b1, b2)
        # identical predictions
        x = np.linspace(0, 50_000, 5)
        t = np.linspace(0, 600, 5)
        for a, b in zip(net_forward(spec, params, x, t),
                        net_forward(spec2, params2, x, t)):
            assert np.array_equal(a, b)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent.npz")

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "junk.npz"
        np.savez(path, foo=np.zeros(3))
        with pytest.raises(ConfigError):
            load_checkpoint(path)
