import math

import numpy as np
import pytest

from src.errors import NonFiniteStateError, SimulationError
from src.road_map.geometry import project_onto_path
from src.road_map.models import PathRef
from src.vehicle_dynamics.bicycle import step_bicycle, wrap_angle
from src.vehicle_dynamics.controllers import find_leader, idm_velocity, pure_pursuit_steer
from src.vehicle_dynamics.models import ControlInput, IdmParams, VehicleParams, VehicleState
from src.vehicle_dynamics.prediction import predict_trajectory


def straight_path(length=5.0, step=0.05):
    xs = np.arange(0.0, length + step / 2, step)
    return PathRef.from_points([(x, 0.0) for x in xs])


class TestBicycleModel:
    """Kinematic bicycle integration."""

    def test_wrap_angle_range(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        assert wrap_angle(0.25) == 0.25

    def test_constant_steering_traces_a_circle(self):
        params = VehicleParams()
        v, delta = 0.5, 0.3
        radius = params.wheelbase / math.tan(delta)
        state = VehicleState(x=0.0, y=0.0, psi=0.0, v=v)
        n_steps = int(math.ceil(2 * math.pi * radius / v / 0.01))

        points = []
        for _ in range(n_steps):
            state = step_bicycle(state, ControlInput(v, delta), params, 0.01)
            points.append((state.x, state.y))

        # algebraic circle fit: x^2 + y^2 = 2ax + 2by + c
        xy = np.asarray(points)
        A = np.column_stack([2 * xy[:, 0], 2 * xy[:, 1], np.ones(len(xy))])
        a, b, c = np.linalg.lstsq(A, (xy ** 2).sum(axis=1), rcond=None)[0]
        fitted = math.sqrt(c + a * a + b * b)
        assert abs(fitted - radius) < 0.01 * radius
        assert state.v == pytest.approx(v)

    def test_speed_lag_converges_monotonically(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            v0, v_ref = rng.uniform(0.0, 0.5, size=2)
            params = VehicleParams(alpha=float(rng.uniform(0.5, 10.0)))
            state = VehicleState(0.0, 0.0, 0.0, float(v0))
            error = abs(v0 - v_ref)
            for _ in range(200):
                state = step_bicycle(state, ControlInput(float(v_ref), 0.0), params, 0.01)
                new_error = abs(state.v - v_ref)
                assert new_error <= error + 1e-12
                # no overshoot past the reference
                assert (state.v - v_ref) * (v0 - v_ref) >= -1e-12
                error = new_error

    def test_inputs_are_clamped(self):
        params = VehicleParams()
        state = step_bicycle(VehicleState(0.0, 0.0, 0.0, 0.5), ControlInput(5.0, 2.0), params, 0.01)
        expected_yaw = 0.01 * 0.5 * math.tan(params.delta_max) / params.wheelbase
        assert state.psi == pytest.approx(expected_yaw)
        assert state.v <= params.v_max

    def test_speed_never_negative(self):
        state = VehicleState(0.0, 0.0, 0.0, 0.01)
        state = step_bicycle(state, ControlInput(-1.0, 0.0), VehicleParams(alpha=200.0), 0.01)
        assert state.v >= 0.0

    def test_non_finite_state_rejected(self):
        with pytest.raises(NonFiniteStateError):
            step_bicycle(VehicleState(float("nan"), 0.0, 0.0, 0.1), ControlInput(0.5, 0.0), VehicleParams(), 0.01)

    def test_non_positive_dt_rejected(self):
        with pytest.raises(SimulationError):
            step_bicycle(VehicleState(0.0, 0.0, 0.0, 0.1), ControlInput(0.5, 0.0), VehicleParams(), 0.0)

    def test_invalid_params(self):
        with pytest.raises(SimulationError):
            VehicleParams(wheelbase=0.0)

    @pytest.mark.parametrize("psi", [0.0, 0.7, -2.0])
    def test_straight_line_has_no_lateral_drift(self, psi):
        params = VehicleParams()
        state = VehicleState(0.0, 0.0, psi, 0.5)
        for _ in range(300):
            state = step_bicycle(state, ControlInput(0.5, 0.0), params, 0.01)
        assert abs(-math.sin(psi) * state.x + math.cos(psi) * state.y) <= 1e-12
        assert state.psi == psi


class TestControllers:
    """Pure pursuit and IDM."""

    def test_on_path_heading_gives_zero_steering(self):
        command = pure_pursuit_steer(VehicleState(1.0, 0.0, 0.0, 0.5), straight_path(), 0.3, VehicleParams())
        assert command.delta == pytest.approx(0.0, abs=1e-12)
        assert not command.end_of_path
        assert command.arclength == pytest.approx(1.0)

    def test_steers_back_toward_path(self):
        params = VehicleParams()
        left_of_path = pure_pursuit_steer(VehicleState(1.0, 0.1, 0.0, 0.5), straight_path(), 0.3, params)
        right_of_path = pure_pursuit_steer(VehicleState(1.0, -0.1, 0.0, 0.5), straight_path(), 0.3, params)
        assert left_of_path.delta < 0.0 < right_of_path.delta
        assert abs(left_of_path.delta) <= params.delta_max

    def test_end_of_path(self):
        path = straight_path(1.0)
        command = pure_pursuit_steer(VehicleState(1.02, 0.0, 0.0, 0.5), path, 0.3, VehicleParams())
        assert command.end_of_path

    def test_tracks_path_in_closed_loop(self):
        params = VehicleParams()
        path = straight_path(4.0)
        state = VehicleState(0.0, 0.08, 0.0, 0.5)
        s = 0.0
        for _ in range(400):
            command = pure_pursuit_steer(state, path, 0.3, params, s)
            s = command.arclength
            state = step_bicycle(state, ControlInput(0.5, command.delta), params, 0.01)
        assert abs(state.y) < 0.01

    def test_idm_free_flow_fixed_point(self):
        p = IdmParams()
        assert idm_velocity(p.desired_speed, math.inf, 0.0, p, 0.1) == p.desired_speed

    def test_idm_accelerates_from_rest(self):
        p = IdmParams()
        assert idm_velocity(0.0, math.inf, 0.0, p, 0.1) == pytest.approx(p.max_accel * 0.1)

    def test_idm_brakes_behind_close_leader(self):
        p = IdmParams()
        assert idm_velocity(0.5, 0.1, 0.0, p, 0.1) < 0.5
        assert idm_velocity(0.5, 0.0, 0.0, p, 0.1) == 0.0

    @pytest.mark.parametrize("psi", [0.0, -0.1, 0.05])
    def test_steering_matches_pursuit_circle(self, psi):
        params = VehicleParams()
        command = pure_pursuit_steer(VehicleState(1.0, 0.1, psi, 0.5), straight_path(), 0.3, params)

        # target sits where the 0.3 m circle around the vehicle meets the path
        dx, dy = math.sqrt(0.3 ** 2 - 0.1 ** 2), -0.1
        lateral = -math.sin(psi) * dx + math.cos(psi) * dy
        curvature = 2.0 * lateral / 0.3 ** 2
        assert command.delta == pytest.approx(math.atan(params.wheelbase * curvature), abs=1e-9)

    def test_idm_value_behind_slower_leader(self):
        p = IdmParams()
        s_star = 0.3 + 0.5 * 1.0 + 0.5 * (0.5 - 0.2) / (2.0 * math.sqrt(0.5 * 0.5))
        accel = 0.5 * (1.0 - 1.0 - (s_star / 0.6) ** 2)
        assert idm_velocity(0.5, 0.6, 0.2, p, 0.1) == pytest.approx(0.5 + accel * 0.1, abs=1e-12)

    def test_find_leader_ahead_on_path(self):
        class Neighbor:
            def __init__(self, x, y, v):
                self.x, self.y, self.v = x, y, v

        params = VehicleParams()
        path = straight_path()
        neighbors = [Neighbor(2.0, 0.02, 0.3), Neighbor(1.5, 0.0, 0.2), Neighbor(0.5, 0.0, 0.4), Neighbor(1.2, 1.0, 0.1)]
        gap, leader_v = find_leader(1.0, path, neighbors, params)
        assert gap == pytest.approx(0.5 - params.length)
        assert leader_v == 0.2

    def test_find_leader_clear_lane(self):
        gap, leader_v = find_leader(1.0, straight_path(), [], VehicleParams())
        assert gap == math.inf
        assert leader_v == 0.0


class TestPrediction:
    """Constant-velocity prediction."""

    def test_predicted_poses_advance_along_path(self):
        poses = predict_trajectory(VehicleState(1.0, 0.05, 0.0, 0.5), straight_path(), 0.5, 4, 0.1)
        assert [p[0][0] for p in poses] == pytest.approx([1.0, 1.05, 1.1, 1.15])
        assert all(p[0][1] == pytest.approx(0.0) for p in poses)

    def test_prediction_holds_at_path_end(self):
        poses = predict_trajectory(VehicleState(0.9, 0.0, 0.0, 0.5), straight_path(1.0), 0.5, 5, 0.1)
        assert [p[0][0] for p in poses] == pytest.approx([0.9, 0.95, 1.0, 1.0, 1.0])

    def test_zero_speed_prediction_is_stationary(self):
        poses = predict_trajectory(VehicleState(1.0, 0.0, 0.0, 0.0), straight_path(), 0.0, 3, 0.1)
        assert len({p[0] for p in poses}) == 1

    def test_arclength_bookkeeping_on_curve(self):
        angles = np.linspace(0.0, math.pi / 2, 2000)
        arc = PathRef.from_points(np.column_stack([np.cos(angles), np.sin(angles)]))
        poses = predict_trajectory(VehicleState(1.0, 0.0, math.pi / 2, 0.5), arc, 0.5, 20, 0.1)

        for k, ((x, y), _) in enumerate(poses):
            s, offset = project_onto_path((x, y), arc)
            assert s == pytest.approx(k * 0.05, abs=1e-9)
            assert offset < 1e-9
            assert math.hypot(x, y) == pytest.approx(1.0, abs=1e-6)
        for ((x1, y1), _), ((x2, y2), _) in zip(poses, poses[1:]):
            assert math.hypot(x2 - x1, y2 - y1) <= 0.05 + 1e-12
