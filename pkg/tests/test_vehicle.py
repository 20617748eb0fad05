import numpy as np
import pytest

from hexsim import vehicle
from hexsim.geometry import quat_from_axis_angle
from hexsim.vehicle import GRAVITY


def test_default_params_values(params):
    assert params.mass == 2.95
    assert params.arm_length == 0.375
    assert params.tilt_angle == pytest.approx(np.deg2rad(30.0))
    assert params.w_min == pytest.approx(2 * np.pi * 8)
    assert params.w_max == pytest.approx(2 * np.pi * 100)
    assert params.c_tau == pytest.approx(0.016 * params.c_f)


def test_cf_thrust_to_weight_anchor(params):
    # all six rotors at w_max push 2.8x the weight vertically
    fz = 6 * params.c_f * params.w_max ** 2 * np.cos(params.tilt_angle)
    assert fz == pytest.approx(2.8 * params.mass * GRAVITY, rel=1e-12)


def test_unknown_override_rejected():
    with pytest.raises(TypeError):
        vehicle.default_params(bogus=1.0)


def test_bad_params_rejected():
    with pytest.raises(ValueError):
        vehicle.default_params(mass=-1.0)
    with pytest.raises(ValueError):
        vehicle.default_params(w_min=700.0)  # above w_max


def test_rotor_positions_hexagon(params):
    pos = params.rotor_positions
    assert pos.shape == (6, 3)
    np.testing.assert_allclose(np.linalg.norm(pos, axis=1),
                               params.arm_length, atol=1e-12)
    # 60 degree spacing
    angles = np.unwrap(np.arctan2(pos[:, 1], pos[:, 0]))
    np.testing.assert_allclose(np.diff(angles), np.pi / 3, atol=1e-12)


def test_effectiveness_full_rank(params, eff):
    stacked = np.vstack([eff.F1, eff.F2])
    assert np.linalg.matrix_rank(stacked) == 6
    assert eff.condition_number == pytest.approx(4.987, abs=0.01)


def test_effectiveness_column_matches_rotor_geometry(params, eff):
    # column i of F1/F2 is the unit-u wrench of rotor i mapped to the body
    for i in range(6):
        R_i = params.rotor_frame(i)
        f = params.c_f * R_i[:, 2]
        np.testing.assert_allclose(eff.F1[:, i], f, atol=1e-12)
        tau = (np.cross(params.rotor_positions[i], f)
               + params.rotor_spin_dirs[i] * params.c_tau * R_i[:, 2])
        np.testing.assert_allclose(eff.F2[:, i], tau, atol=1e-12)


def test_zero_tilt_degenerate():
    flat = vehicle.default_params(tilt_angle=0.0)
    with pytest.raises(vehicle.DegenerateGeometry):
        vehicle.build_effectiveness(flat)


def test_hover_trim_speed(params, eff, trim):
    # analytic trim: 6 c_f w^2 cos(tilt) = m g
    w_expected = np.sqrt(params.mass * GRAVITY
                         / (6 * params.c_f * np.cos(params.tilt_angle)))
    np.testing.assert_allclose(trim.w_cmd, w_expected, rtol=1e-9)
    assert not trim.saturated.any()
    assert np.all(trim.w_cmd > params.w_min)
    assert np.all(trim.w_cmd < params.w_max)


def test_allocate_round_trip(params, eff, rng):
    for _ in range(100):
        axis = rng.normal(size=3)
        q = quat_from_axis_angle(axis, rng.uniform(-0.4, 0.4))
        wrench = np.concatenate([
            params.mass * GRAVITY * np.array([0, 0, 1.0])
            + rng.uniform(-3, 3, 3),
            rng.uniform(-0.3, 0.3, 3)])
        cmd = vehicle.allocate(eff, q, wrench)
        if cmd.saturated.any():
            continue
        F = vehicle.assemble_F(eff, q)
        assert (np.linalg.norm(F @ cmd.u - wrench)
                < 1e-9 * np.linalg.norm(wrench))


def test_allocate_saturation_clamps(params, eff):
    heavy = np.array([0, 0, 10 * params.mass * GRAVITY, 0, 0, 0])
    cmd = vehicle.allocate(eff, np.array([1.0, 0, 0, 0]), heavy)
    assert cmd.saturated.all()
    np.testing.assert_allclose(cmd.u, params.w_max ** 2)
    np.testing.assert_allclose(cmd.w_cmd, params.w_max)


def test_allocate_negative_clamped_to_min(params, eff):
    pull_down = np.array([0, 0, -5 * params.mass * GRAVITY, 0, 0, 0])
    cmd = vehicle.allocate(eff, np.array([1.0, 0, 0, 0]), pull_down)
    # unidirectional rotors: commands clamp at the lower speed limit
    assert np.all(cmd.u >= params.w_min ** 2 - 1e-12)
    assert np.all(cmd.w_cmd >= params.w_min - 1e-12)


def test_lateral_force_without_attitude_change(params, eff):
    # full actuation: pure lateral force demand is feasible near hover
    wrench = np.array([2.0, 0, params.mass * GRAVITY, 0, 0, 0])
    cmd = vehicle.allocate(eff, np.array([1.0, 0, 0, 0]), wrench)
    assert not cmd.saturated.any()
    F = vehicle.assemble_F(eff, np.array([1.0, 0, 0, 0]))
    np.testing.assert_allclose(F @ cmd.u, wrench, atol=1e-9)


def test_with_cf_factor(params):
    half = vehicle.with_cf_factor(params, 0.5)
    assert half.c_f == pytest.approx(0.5 * params.c_f)
    assert half.c_tau == params.c_tau
