import numpy as np
import pytest

from hydropinn.errors import DomainError, GridError
from hydropinn.hydraulics import (
    flowrate_to_velocity,
    friction_factor,
    pressure_to_head,
    steady_profile,
    wave_speed,
)
from hydropinn.moc import (
    FieldGrid,
    build_grid,
    export_grid,
    interior_column_indices,
    moc_step,
    run,
    run_details,
    sample,
)
from hydropinn.scenario import Offtake, PiecewiseSignal, Scenario

from conftest import Q_START, Q_END, make_ramp_scenario


class TestBuildGrid:
    def test_desk_scale(self, fluid, pipe):
        grid = build_grid(pipe, fluid, 0.5)
        assert grid.node_count == 85
        assert grid.dx == pytest.approx(50_000 / 84)
        # wave speed rescaled by well under 1%
        assert grid.wave_speed == pytest.approx(wave_speed(fluid, pipe), rel=0.01)

    def test_exact_fit_no_adjustment(self, fluid):
        from hydropinn.hydraulics import PipelineSpec

        a = wave_speed(fluid, PipelineSpec(length=1000.0, diameter=0.25))
        dt = 1.0
        probe = PipelineSpec(length=a * dt * 10, diameter=0.25)
        grid = build_grid(probe, fluid, dt)
        assert grid.node_count == 11
        assert grid.wave_speed == pytest.approx(a, rel=1e-12)

    def test_too_coarse(self, fluid, pipe):
        with pytest.raises(GridError):
            build_grid(pipe, fluid, 30.0)  # a*dt > L/2


class TestMocStep:
    def _steady_state(self, fluid, pipe, dt):
        grid = build_grid(pipe, fluid, dt)
        q = Q_START
        v = float(flowrate_to_velocity(q, pipe.diameter))
        f = friction_factor(fluid, v, pipe.diameter)
        prof = steady_profile(pipe.with_friction(f), fluid, 1.48, q,
                              positions=grid.positions)
        H = np.asarray(pressure_to_head(prof.pressure, fluid.density))
        V = np.full(grid.node_count, v)
        B = grid.wave_speed / pipe.gravity
        R = f * dt / (2 * pipe.diameter)
        return H, V, B, R

    def test_steady_state_is_fixed_point(self, fluid, pipe):
        H, V, B, R = self._steady_state(fluid, pipe, 0.5)
        Hn, Vn = moc_step(H, V, H[0], V[-1], B, R)
        assert np.max(np.abs(Hn - H)) < 1e-9
        assert np.max(np.abs(Vn - V)) < 1e-9

    def test_joukowsky_first_step(self, fluid, pipe):
        # frictionless instant closure: first-step head rise a*v0/g at the outlet
        grid = build_grid(pipe, fluid, 0.5)
        v0 = 0.8714617
        H = np.full(grid.node_count, 100.0)
        V = np.full(grid.node_count, v0)
        B = grid.wave_speed / pipe.gravity
        Hn, Vn = moc_step(H, V, H[0], 0.0, B, 0.0)
        expected = grid.wave_speed * v0 / pipe.gravity
        assert Hn[-1] - H[-1] == pytest.approx(expected, rel=1e-12)
        # as a pressure: rho*a*dv, within 2% of the unadjusted-wave-speed value
        dp = fluid.density * pipe.gravity * (Hn[-1] - H[-1]) / 1e6
        assert dp == pytest.approx(
            fluid.density * wave_speed(fluid, pipe) * v0 / 1e6, rel=0.02)

    def test_sign_mirror(self, fluid, pipe, rng):
        # negating state and boundary values negates the solution exactly
        grid = build_grid(pipe, fluid, 0.5)
        n = grid.node_count
        H = 100.0 + rng.normal(0, 5.0, n)
        V = 0.9 + rng.normal(0, 0.1, n)
        B = grid.wave_speed / pipe.gravity
        R = 0.022 * 0.5 / (2 * pipe.diameter)
        H1, V1 = moc_step(H, V, 120.0, 0.8, B, R)
        H2, V2 = moc_step(-H, -V, -120.0, -0.8, B, R)
        assert np.allclose(H2, -H1, rtol=0, atol=1e-12)
        assert np.allclose(V2, -V1, rtol=0, atol=1e-12)


class TestRun:
    def test_zero_duration_returns_steady_slice(self, fluid, pipe):
        sc = Scenario(pipe=pipe, fluid=fluid, duration=0.0,
                      inlet_pressure=PiecewiseSignal.constant(1.48),
                      outlet_flowrate=PiecewiseSignal.constant(Q_START))
        field = run(sc, 0.5)
        assert field.ts.size == 1
        prof = steady_profile(pipe, fluid, 1.48, Q_START, positions=field.xs)
        assert np.allclose(field.P[0], prof.pressure, rtol=1e-12)

    def test_constant_boundaries_stay_steady(self, fluid, pipe):
        sc = Scenario(pipe=pipe, fluid=fluid, duration=600.0,
                      inlet_pressure=PiecewiseSignal.constant(1.48),
                      outlet_flowrate=PiecewiseSignal.constant(Q_START))
        field = run(sc, 0.5)  # 1200 steps
        prof = steady_profile(pipe, fluid, 1.48, Q_START, positions=field.xs)
        assert np.max(np.abs(field.P - prof.pressure[None, :])) <= 1e-6
        assert np.max(np.abs(field.v - prof.velocity)) <= 1e-8

    def test_ramp_response_arrives_after_transit_time(self, fluid, pipe):
        # outlet ramp at t=120 s cannot influence the inlet before one
        # wave transit L/a ~ 42 s later
        sc = make_ramp_scenario(pipe, fluid, with_offtake=False)
        field, grid, _ = run_details(sc, 0.5)
        transit = pipe.length / grid.wave_speed
        v_in = field.v[:, 0]
        quiet = field.ts < 120.0 + transit - 0.5
        assert np.max(np.abs(v_in[quiet] - v_in[0])) < 1e-9
        after = field.ts > 120.0 + transit + 1.0
        assert np.max(np.abs(v_in[after] - v_in[0])) > 1e-3

    def test_long_run_settles_to_new_darcy_profile(self, fluid, pipe):
        sc = make_ramp_scenario(pipe, fluid, with_offtake=False)
        field, grid, frozen = run_details(sc, 0.5)
        new_prof = steady_profile(frozen, fluid, 1.48, Q_END,
                                  positions=field.xs)
        head_drop = (new_prof.pressure[0] - new_prof.pressure[-1])
        dev = np.max(np.abs(field.P[-1] - new_prof.pressure))
        assert dev <= 1e-3 * head_drop

    def test_grid_refinement_changes_little(self, fluid, pipe):
        sc = make_ramp_scenario(pipe, fluid, with_offtake=False)
        xs, ts = export_grid(pipe.length, sc.duration, 1000.0, 0.5)
        coarse = sample(run(sc, 0.5), xs, ts)
        fine = sample(run(sc, 0.25), xs, ts)
        rms = np.sqrt(np.mean((coarse.P - fine.P) ** 2))
        scale = np.sqrt(np.mean(fine.P**2))
        assert rms / scale < 0.005

    def test_offtake_draw_splits_the_flow(self, fluid, pipe):
        # offtake ramping up: upstream flow increases above outlet flow
        sc = Scenario(
            pipe=pipe, fluid=fluid, duration=300.0,
            inlet_pressure=PiecewiseSignal.constant(2.0),
            outlet_flowrate=PiecewiseSignal.constant(Q_START),
            offtake=Offtake(position=25_000.0,
                            flowrate=PiecewiseSignal.from_breakpoints(
                                [[0.0, 0.0], [60.0, 0.01], [300.0, 0.01]])),
        )
        field = run(sc, 0.5)
        area = pipe.area
        # near the end, inflow carries outlet + offtake demand
        q_in = field.v[-1, 0] * area
        assert q_in == pytest.approx(Q_START + 0.01, rel=0.02)
        assert field.v[-1, -1] == pytest.approx(Q_START / area, rel=1e-6)

    def test_blowup_reports_step(self, fluid, pipe):
        from hydropinn.errors import NumericalBlowupError

        # unphysical flow demand (v ~ 200 m/s) makes the explicit friction
        # term diverge within a few steps
        sc = Scenario(pipe=pipe, fluid=fluid, duration=100.0,
                      inlet_pressure=PiecewiseSignal.constant(5.0),
                      outlet_flowrate=PiecewiseSignal.from_breakpoints(
                          [[0.0, Q_START], [1.0, 10.0]]))
        with pytest.raises(NumericalBlowupError) as exc_info:
            run(sc, 0.5)
        assert exc_info.value.step is not None

    def test_nan_state_rejected_by_step(self, fluid, pipe):
        from hydropinn.errors import NumericalBlowupError

        grid = build_grid(pipe, fluid, 0.5)
        H = np.full(grid.node_count, np.nan)
        V = np.zeros(grid.node_count)
        with pytest.raises(NumericalBlowupError):
            moc_step(H, V, 100.0, 0.0, grid.wave_speed / pipe.gravity, 0.0)


class TestSample:
    def _field(self):
        xs = np.array([0.0, 10.0, 20.0])
        ts = np.array([0.0, 1.0])
        P = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        v = P / 10.0
        return FieldGrid(xs=xs, ts=ts, P=P, v=v)

    def test_exact_at_nodes(self):
        f = self._field()
        out = sample(f, f.xs, f.ts)
        assert np.array_equal(out.P, f.P)
        assert np.array_equal(out.v, f.v)

    def test_midpoint_average(self):
        f = self._field()
        out = sample(f, np.array([5.0, 15.0]), np.array([0.0]))
        assert out.P[0, 0] == pytest.approx(1.5)
        assert out.P[0, 1] == pytest.approx(2.5)
        out2 = sample(f, np.array([0.0, 10.0]), np.array([0.5]))
        assert out2.P[0, 1] == pytest.approx((2.0 + 5.0) / 2)

    def test_out_of_bounds(self):
        f = self._field()
        with pytest.raises(DomainError):
            sample(f, np.array([5.0, 25.0]), np.array([0.0]))
        with pytest.raises(DomainError):
            sample(f, np.array([5.0, 10.0]), np.array([2.0]))

    def test_desk_grid_has_51_columns_and_48_interior(self, desk_dataset):
        field, meta = desk_dataset
        assert field.xs.size == 51
        interior = interior_column_indices(field.xs, meta.pipe.length,
                                           meta.offtake_x)
        assert interior.size == 48


def test_field_grid_validation():
    with pytest.raises(DomainError):
        FieldGrid(xs=np.array([0.0]), ts=np.array([0.0]),
                  P=np.zeros((1, 1)), v=np.zeros((1, 1)))
    with pytest.raises(DomainError):
        FieldGrid(xs=np.array([0.0, 1.0]), ts=np.array([0.0]),
                  P=np.zeros((2, 2)), v=np.zeros((2, 2)))
