"""Fixed-step truth simulator: rigid-body motion, motor lag, disturbances
and sensor synthesis.

Translational dynamics are integrated in the world frame, rotational
dynamics in the body frame.  Rotor speeds follow a first-order lag toward
the commanded setpoints, evaluated inside the RK4 stages.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import E3, quat_derivative, quat_to_rotmat
from .vehicle import GRAVITY

SIM_DT = 5e-4  # 2 kHz truth rate; divides all controller frequencies evenly


class NonFiniteState(Exception):
    """Simulation diverged: a state component became non-finite."""


@dataclass
class RigidBodyState:
    p: np.ndarray          # m, world
    v: np.ndarray          # m/s, world
    q: np.ndarray          # unit quaternion body->world
    omega: np.ndarray      # rad/s, body
    rotor_w: np.ndarray    # rad/s, actual rotor speeds

    def copy(self):
        return RigidBodyState(self.p.copy(), self.v.copy(), self.q.copy(),
                              self.omega.copy(), self.rotor_w.copy())


@dataclass(frozen=True)
class DisturbanceSpec:
    kind: str = "none"                 # none | constant_load | gust
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))   # N, world
    moment: np.ndarray = field(default_factory=lambda: np.zeros(3))  # N m, body
    t_on: float = 0.0
    t_off: float = 0.0
    gust_std: float = 0.0              # N
    gust_corr_time: float = 0.5        # s

    def __post_init__(self):
        if self.kind not in ("none", "constant_load", "gust"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind != "none" and not self.t_on < self.t_off:
            raise ValueError("need t_on < t_off")
        if self.kind == "gust" and self.gust_corr_time <= 0:
            raise ValueError("gust_corr_time must be positive")


def sample_disturbance(spec, t, rng=None):
    """Stateless disturbance lookup for the non-gust kinds.

    Gusts carry colored-noise state; use DisturbanceSampler for those.
    With gust_std == 0 the gust degenerates to its mean force and this
    function handles it too.
    """
    zero = (np.zeros(3), np.zeros(3))
    if spec.kind == "none":
        return zero
    if not (spec.t_on <= t < spec.t_off):
        return zero
    if spec.kind == "gust" and spec.gust_std > 0.0:
        raise ValueError("stochastic gust needs a DisturbanceSampler")
    return spec.force.copy(), spec.moment.copy()


class DisturbanceSampler:
    """Per-run disturbance source; holds the colored-noise gust state.

    The gust force is the spec mean plus an Ornstein-Uhlenbeck process
    (std gust_std, correlation time gust_corr_time) updated once per
    simulation step, reproducible from the run RNG.
    """

    def __init__(self, spec, dt, rng):
        self.spec = spec
        self.dt = dt
        self.rng = rng
        self._ou = np.zeros(3)
        self._decay = np.exp(-dt / spec.gust_corr_time)
        self._diffusion = spec.gust_std * np.sqrt(1.0 - self._decay ** 2)

    def step(self, t):
        spec = self.spec
        if spec.kind == "gust":
            self._ou = (self._decay * self._ou
                        + self._diffusion * self.rng.standard_normal(3))
            if spec.t_on <= t < spec.t_off:
                return spec.force + self._ou, spec.moment.copy()
            return np.zeros(3), np.zeros(3)
        return sample_disturbance(spec, t)


def derivative(state, params, eff, w_cmd, dist_force, dist_moment):
    """Time derivative of the full state under the current rotor speeds.

    Returns (dp, dv, dq, domega, drotor).  Force balance in world frame,
    moment balance in body frame, rotor speeds lagging toward w_cmd.
    """
    u = state.rotor_w * np.abs(state.rotor_w)
    rot = quat_to_rotmat(state.q)
    j = params.inertia_diag
    om = state.omega
    jw = j * om
    gyroscopic = np.array([om[1] * jw[2] - om[2] * jw[1],
                           om[2] * jw[0] - om[0] * jw[2],
                           om[0] * jw[1] - om[1] * jw[0]])
    force_w = rot @ (eff.F1 @ u) - params.mass * GRAVITY * E3 + dist_force
    torque = eff.F2 @ u - gyroscopic + dist_moment
    return (
        state.v,
        force_w / params.mass,
        quat_derivative(state.q, state.omega),
        torque / j,
        (w_cmd - state.rotor_w) / params.motor_time_constant,
    )


def acceleration(state, params, eff, dist_force):
    """World-frame translational acceleration at the current state."""
    u = state.rotor_w * np.abs(state.rotor_w)
    force_w = (quat_to_rotmat(state.q) @ (eff.F1 @ u)
               - params.mass * GRAVITY * E3 + dist_force)
    return force_w / params.mass


def step(state, params, eff, cmd, dist_force, dist_moment, dt):
    """One RK4 step; disturbance held constant over the step.

    Raises NonFiniteState if any component diverges.
    """
    w_cmd = cmd.w_cmd

    def f(s):
        return derivative(s, params, eff, w_cmd, dist_force, dist_moment)

    def advance(s, k, h):
        return RigidBodyState(
            s.p + h * k[0], s.v + h * k[1], s.q + h * k[2],
            s.omega + h * k[3], s.rotor_w + h * k[4])

    k1 = f(state)
    k2 = f(advance(state, k1, 0.5 * dt))
    k3 = f(advance(state, k2, 0.5 * dt))
    k4 = f(advance(state, k3, dt))
    out = RigidBodyState(
        *(s + dt / 6.0 * (a + 2 * b + 2 * c + d)
          for s, a, b, c, d in zip(
              (state.p, state.v, state.q, state.omega, state.rotor_w),
              k1, k2, k3, k4)))
    out.q = out.q / np.linalg.norm(out.q)
    if not (np.isfinite(out.p).all() and np.isfinite(out.v).all()
            and np.isfinite(out.q).all() and np.isfinite(out.omega).all()
            and np.isfinite(out.rotor_w).all()):
        raise NonFiniteState("simulation state diverged")
    return out


@dataclass(frozen=True)
class NoiseSpec:
    gyro_sigma: float = 0.02     # rad/s
    accel_sigma: float = 0.05    # m/s^2
    rotor_sigma: float = 1.0     # rad/s
    scale: float = 0.0           # experiment factor applied to all sigmas


@dataclass
class SensorReadings:
    accel: np.ndarray         # specific force, body, m/s^2
    gyro: np.ndarray          # rad/s, body
    rotor_w_meas: np.ndarray  # rad/s
    pose_p: np.ndarray        # m, world
    pose_q: np.ndarray        # unit quaternion
    timestamp: float


def synthesize_sensors(state, accel_world, noise, t, rng):
    """Sensor outputs at the current truth state.

    accel is the specific force R(q)^T (p_ddot + g e3); gyro and rotor
    tachometers read the body rate and rotor speeds.  Per-channel white
    Gaussian noise with sigma * scale; pose passes through untouched.
    """
    rot = quat_to_rotmat(state.q)
    accel = rot.T @ (accel_world + GRAVITY * E3)
    s = noise.scale
    if s > 0.0:
        accel = accel + s * noise.accel_sigma * rng.standard_normal(3)
        gyro = state.omega + s * noise.gyro_sigma * rng.standard_normal(3)
        rotor = state.rotor_w + s * noise.rotor_sigma * rng.standard_normal(6)
    else:
        gyro = state.omega.copy()
        rotor = state.rotor_w.copy()
    return SensorReadings(accel=accel, gyro=gyro, rotor_w_meas=rotor,
                          pose_p=state.p.copy(), pose_q=state.q.copy(),
                          timestamp=t)
