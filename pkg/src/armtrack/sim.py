"""Closed-loop simulation: digital controller, continuous plant.

The controller runs at a fixed tick dt_control with zero-order hold: every
tick it reads a SensorSample, produces a torque (or a joint-velocity
command) and adaptation rates, and the plant is then integrated over the
tick with classical RK4 at dt_plant substeps.  Torques are held constant
across the tick; velocity commands are held constant while the simulated
joint servo recomputes its torque inside every substep, which is what
keeps a stiff servo stable.  Parameter estimates advance by explicit Euler
once per tick using the rates computed at that tick, and the kinematic
estimate is clamped to its box after every update.

Runs are deterministic: identical configs produce bit-identical logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .controllers import (MODES, TRANSPOSE_REFERENCE_MODES, VELOCITY_MODES,
                          ControlOutput, Gains, SensorSample,
                          SingularJacobianError, controller_step, project_box)

Array = np.ndarray

DIVERGENCE_LIMIT = 10.0


class SimulationAbort(RuntimeError):
    """Base class for aborted runs; carries the partial log."""

    def __init__(self, reason: str, log: "SimLog"):
        super().__init__(reason)
        self.reason = reason
        self.log = log


class SingularityAbort(SimulationAbort):
    """A matrix inversion hit the condition-number limit."""


class DivergenceAbort(SimulationAbort):
    """The task error exceeded the divergence limit."""


@dataclass
class DesiredTrajectory:
    """Circular task-space trajectory with closed-form derivatives."""

    center: Array
    radius: float
    angular_frequency: float

    def position(self, t: float) -> Array:
        w = self.angular_frequency
        return self.center + self.radius * np.array([np.cos(w * t), np.sin(w * t)])

    def velocity(self, t: float) -> Array:
        w = self.angular_frequency
        return self.radius * w * np.array([-np.sin(w * t), np.cos(w * t)])

    def acceleration(self, t: float) -> Array:
        w = self.angular_frequency
        return -self.radius * w * w * np.array([np.cos(w * t), np.sin(w * t)])


@dataclass
class ExperimentConfig:
    """Complete description of one closed-loop run."""

    mode: str
    gains: Gains
    a_k_true: Array
    a_d_true: Array
    a_k_hat0: Array
    a_d_hat0: Array
    trajectory: DesiredTrajectory
    t_end: float = 10.0
    dt_control: float = 0.005
    dt_plant: float = 0.001
    box_lower: Array = field(default_factory=lambda: np.array([0.5, 0.5, 0.1]))
    box_upper: Array = field(default_factory=lambda: np.array([6.0, 6.0, 3.0]))
    start_offset: Array = field(default_factory=lambda: np.array([0.05, -0.05]))
    start_velocity: str = "zero"   # zero | trajectory | reference
    q0: Array | None = None
    dq0: Array | None = None
    servo_gain: float = 200.0
    sensor_noise_std: Array = field(default_factory=lambda: np.zeros(2))
    seed: int = 0
    gravity_enabled: bool = True
    freeze_estimates: bool = False
    inertia_gain_floor: float = 0.0
    cond_limit: float = model.COND_LIMIT
    divergence_limit: float = DIVERGENCE_LIMIT
    label: str = ""

    @property
    def g0(self) -> float:
        return model.GRAVITY if self.gravity_enabled else 0.0

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {sorted(MODES)}, got {self.mode!r}")
        self.gains.validate()
        for name, arr, n in (("a_k_true", self.a_k_true, 3),
                             ("a_d_true", self.a_d_true, 4),
                             ("a_k_hat0", self.a_k_hat0, 3),
                             ("a_d_hat0", self.a_d_hat0, 4),
                             ("box_lower", self.box_lower, 3),
                             ("box_upper", self.box_upper, 3),
                             ("start_offset", self.start_offset, 2),
                             ("sensor_noise_std", self.sensor_noise_std, 2)):
            if np.asarray(arr, dtype=float).shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        if self.a_k_true[0] <= 0.0:
            raise ValueError("a_k_true[0] (first link length) must be positive")
        if np.any(self.box_lower >= self.box_upper):
            raise ValueError("projection box is empty (lower >= upper)")
        for name, arr in (("a_k_true", self.a_k_true), ("a_k_hat0", self.a_k_hat0)):
            if np.any(arr < self.box_lower) or np.any(arr > self.box_upper):
                raise ValueError(f"{name} must lie inside the projection box")
        w_min = model.inertia_min_eigenvalue(self.a_d_true)
        if w_min <= 0.0:
            raise ValueError(
                f"a_d_true is inadmissible: min inertia eigenvalue {w_min:.4g} <= 0")
        if self.t_end <= 0.0 or self.dt_control <= 0.0 or self.dt_plant <= 0.0:
            raise ValueError("t_end, dt_control, dt_plant must be positive")
        ratio = self.dt_control / self.dt_plant
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("dt_control must be an integer multiple of dt_plant")
        if self.start_velocity not in ("zero", "trajectory", "reference"):
            raise ValueError("start_velocity must be zero, trajectory, or reference")
        if self.mode in VELOCITY_MODES and self.servo_gain <= 0.0:
            raise ValueError("servo_gain must be positive in velocity-command modes")
        if self.mode == "inertia_gain" and self.gains.lambda_c <= 0.0:
            raise ValueError("inertia_gain mode requires gains.lambda_c > 0")
        if np.any(self.sensor_noise_std < 0.0):
            raise ValueError("sensor_noise_std must be nonnegative")
        if self.cond_limit <= 1.0 or self.divergence_limit <= 0.0:
            raise ValueError("cond_limit must exceed 1 and divergence_limit 0")
        if self.inertia_gain_floor < 0.0:
            raise ValueError("inertia_gain_floor must be nonnegative")

    def initial_state(self) -> tuple[Array, Array]:
        """Resolve (q0, dq0).  Unless given explicitly, q0 places the tip at
        x_d(0) + start_offset and dq0 follows start_velocity: zero, matched
        to the trajectory velocity, or matched to the reference velocity."""
        if self.q0 is not None:
            q0 = np.asarray(self.q0, dtype=float)
        else:
            target = self.trajectory.position(0.0) + self.start_offset
            q0 = model.inverse_kinematics(target, self.a_k_true)
        if self.dq0 is not None:
            return q0, np.asarray(self.dq0, dtype=float)
        if self.start_velocity == "zero":
            return q0, np.zeros(2)
        dx_d0 = self.trajectory.velocity(0.0)
        if self.start_velocity == "trajectory":
            j_true = model.jacobian(q0, self.a_k_true)
            return q0, np.linalg.solve(j_true, dx_d0)
        # "reference": spin up on the controller's own initial reference
        # velocity (per the configured mode and initial estimates), so the
        # run starts with s = 0
        x_err = (model.forward_kinematics(q0, self.a_k_true)
                 - self.trajectory.position(0.0))
        jhat = model.jacobian(q0, self.a_k_hat0)
        if self.mode in TRANSPOSE_REFERENCE_MODES:
            dq0 = np.linalg.solve(jhat, dx_d0) - self.gains.alpha * (jhat.T @ x_err)
        else:
            dq0 = np.linalg.solve(jhat, dx_d0 - self.gains.alpha * x_err)
        return q0, dq0


@dataclass
class SimLog:
    """Per-tick arrays from one run, plus the config that produced them."""

    t: Array
    q: Array
    dq: Array
    x: Array
    dx: Array
    x_d: Array
    dx_d: Array
    x_err: Array
    s: Array
    tau: Array
    a_k_hat: Array
    a_d_hat: Array
    v1: Array
    v2: Array
    v2_inc: Array
    kin_residual: Array
    cond_jhat: Array
    config: ExperimentConfig
    completed: bool = True
    abort_reason: str = ""

    def __len__(self) -> int:
        return len(self.t)


class _NonFiniteStateError(RuntimeError):
    """Plant state overflowed to inf/nan; converted to DivergenceAbort."""


def rk4_step(rhs, y: Array, dt: float) -> Array:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_plant(q: Array, dq: Array, tau: Array, a_d: Array, dt: float,
                    n_steps: int, g0: float = model.GRAVITY,
                    cond_limit: float = model.COND_LIMIT) -> tuple[Array, Array]:
    """Advance the arm by n_steps RK4 substeps of size dt under a held torque."""

    def rhs(y: Array) -> Array:
        if not np.all(np.isfinite(y)):
            raise _NonFiniteStateError()
        acc = model.forward_dynamics(y[:2], y[2:], tau, a_d, g0, cond_limit)
        return np.concatenate((y[2:], acc))

    y = np.concatenate((q, dq))
    for _ in range(n_steps):
        y = rk4_step(rhs, y, dt)
    return y[:2], y[2:]


def joint_servo_torque(q: Array, dq: Array, vel_cmd: Array, servo_gain: float,
                       a_d_true: Array, g0: float = model.GRAVITY) -> Array:
    """Gravity-compensated proportional velocity servo used by the
    velocity-command modes: tau = -servo_gain (dq - vel_cmd) + g(q)."""
    return -servo_gain * (dq - vel_cmd) + model.gravity(q, a_d_true, g0)


def integrate_plant_servo(q: Array, dq: Array, vel_cmd: Array, servo_gain: float,
                          a_d: Array, dt: float, n_steps: int,
                          g0: float = model.GRAVITY,
                          cond_limit: float = model.COND_LIMIT) -> tuple[Array, Array]:
    """Advance the arm under a held velocity command; the servo torque is
    re-evaluated inside every RK4 stage."""

    def rhs(y: Array) -> Array:
        if not np.all(np.isfinite(y)):
            raise _NonFiniteStateError()
        tau = joint_servo_torque(y[:2], y[2:], vel_cmd, servo_gain, a_d, g0)
        acc = model.forward_dynamics(y[:2], y[2:], tau, a_d, g0, cond_limit)
        return np.concatenate((y[2:], acc))

    y = np.concatenate((q, dq))
    for _ in range(n_steps):
        y = rk4_step(rhs, y, dt)
    return y[:2], y[2:]


def kinematic_loop_residual(sample: SensorSample, out: ControlOutput,
                            a_k_hat: Array, cfg: ExperimentConfig) -> float:
    """Residual of the task-error evolution identity for the active mode.

    Algebraically zero along any run whose sensor is consistent, so the
    logged value measures only sensor noise and round-off.
    """
    ak_err = a_k_hat - cfg.a_k_true
    if cfg.mode in ("transpose_reference", "velocity_transpose"):
        jhat = model.jacobian(sample.q, a_k_hat)
        r = (sample.dx_err + cfg.gains.alpha * (jhat @ (jhat.T @ sample.x_err))
             + model.kin_regressor(sample.q, sample.dq) @ ak_err - jhat @ out.s)
    else:
        j_true = model.jacobian(sample.q, cfg.a_k_true)
        r = (sample.dx_err + cfg.gains.alpha * sample.x_err
             + model.kin_regressor(sample.q, out.qr_dot) @ ak_err - j_true @ out.s)
    return float(np.max(np.abs(r)))


def run_experiment(cfg: ExperimentConfig) -> SimLog:
    """Run one closed-loop experiment.

    Raises SingularityAbort or DivergenceAbort with the partial log
    attached when the corresponding guard trips.
    """
    cfg.validate()
    gains = cfg.gains
    g0 = cfg.g0
    n_ticks = int(round(cfg.t_end / cfg.dt_control)) + 1
    n_sub = int(round(cfg.dt_control / cfg.dt_plant))
    rng = np.random.default_rng(cfg.seed)
    noisy = bool(np.any(cfg.sensor_noise_std > 0.0))

    q, dq = cfg.initial_state()
    a_k_hat = np.array(cfg.a_k_hat0, dtype=float)
    a_d_hat = np.array(cfg.a_d_hat0, dtype=float)
    inv_gamma_d = np.linalg.inv(gains.gamma_d)
    inv_gamma_k = np.linalg.inv(gains.gamma_k)
    transpose_family = cfg.mode in ("transpose_reference", "velocity_transpose")
    velocity_mode = cfg.mode in VELOCITY_MODES

    cols = {name: np.zeros((n_ticks, 2)) for name in
            ("q", "dq", "x", "dx", "x_d", "dx_d", "x_err", "s", "tau")}
    scalars = {name: np.zeros(n_ticks) for name in
               ("t", "v1", "v2", "v2_inc", "kin_residual", "cond_jhat")}
    ak_log = np.zeros((n_ticks, 3))
    ad_log = np.zeros((n_ticks, 4))

    reservoir = 0.0
    f_prev = 0.0
    w2_prev = 0.0

    def partial(n: int, reason: str) -> SimLog:
        return SimLog(t=scalars["t"][:n], q=cols["q"][:n], dq=cols["dq"][:n],
                      x=cols["x"][:n], dx=cols["dx"][:n], x_d=cols["x_d"][:n],
                      dx_d=cols["dx_d"][:n], x_err=cols["x_err"][:n],
                      s=cols["s"][:n], tau=cols["tau"][:n],
                      a_k_hat=ak_log[:n], a_d_hat=ad_log[:n],
                      v1=scalars["v1"][:n], v2=scalars["v2"][:n],
                      v2_inc=scalars["v2_inc"][:n],
                      kin_residual=scalars["kin_residual"][:n],
                      cond_jhat=scalars["cond_jhat"][:n], config=cfg,
                      completed=False, abort_reason=reason)

    # overflow/invalid warnings on a diverging trajectory are expected noise;
    # the finite-state guards below turn the blow-up into DivergenceAbort
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_ticks):
            t = i * cfg.dt_control
            x = model.forward_kinematics(q, cfg.a_k_true)
            dx = model.jacobian(q, cfg.a_k_true) @ dq
            if noisy:
                x = x + rng.normal(0.0, cfg.sensor_noise_std[0], 2)
                dx = dx + rng.normal(0.0, cfg.sensor_noise_std[1], 2)
            traj = cfg.trajectory
            sample = SensorSample(t=t, q=q, dq=dq, x=x, dx=dx,
                                  x_d=traj.position(t), dx_d=traj.velocity(t),
                                  ddx_d=traj.acceleration(t))

            # checked before the controller so a blown-up state cannot reach
            # the Jacobian/inertia factorizations
            err_norm = float(np.linalg.norm(sample.x_err))
            if not np.isfinite(err_norm) or err_norm > cfg.divergence_limit:
                reason = (f"task error {err_norm:.3g} m exceeded "
                          f"{cfg.divergence_limit:g} m at t={t:.3f}")
                raise DivergenceAbort(reason, partial(i, reason))

            try:
                out = controller_step(sample, a_k_hat, a_d_hat, gains, cfg.mode,
                                      g0=g0, cond_limit=cfg.cond_limit,
                                      inertia_gain_floor=cfg.inertia_gain_floor)
            except SingularJacobianError as exc:
                raise SingularityAbort(str(exc), partial(i, str(exc))) from exc

            tau = (joint_servo_torque(q, dq, out.vel_cmd, cfg.servo_gain,
                                      cfg.a_d_true, g0)
                   if velocity_mode else out.tau)

            # certificate monitors, evaluated with the true parameters
            ad_err = a_d_hat - cfg.a_d_true
            ak_err = a_k_hat - cfg.a_k_true
            m_true = model.inertia(q, cfg.a_d_true)
            v1 = 0.5 * out.s @ m_true @ out.s + 0.5 * ad_err @ inv_gamma_d @ ad_err
            if transpose_family:
                pos_part = 0.5 * sample.x_err @ sample.x_err
                f_cur = float(out.s @ out.s)
            else:
                pos_part = 0.5 * (1.0 - gains.beta) * (sample.x_err @ sample.x_err)
                j_true_s = model.jacobian(q, cfg.a_k_true) @ out.s
                f_cur = float(j_true_s @ j_true_s)
            pos_part += 0.5 * ak_err @ inv_gamma_k @ ak_err
            if i > 0:
                reservoir += 0.5 * cfg.dt_control * (f_prev + f_cur)
            w2 = pos_part - reservoir / (2.0 * gains.alpha)
            f_prev = f_cur

            scalars["t"][i] = t
            cols["q"][i] = q
            cols["dq"][i] = dq
            cols["x"][i] = x
            cols["dx"][i] = dx
            cols["x_d"][i] = sample.x_d
            cols["dx_d"][i] = sample.dx_d
            cols["x_err"][i] = sample.x_err
            cols["s"][i] = out.s
            cols["tau"][i] = tau
            ak_log[i] = a_k_hat
            ad_log[i] = a_d_hat
            scalars["v1"][i] = v1
            scalars["v2"][i] = w2
            scalars["v2_inc"][i] = 0.0 if i == 0 else w2 - w2_prev
            scalars["kin_residual"][i] = kinematic_loop_residual(sample, out,
                                                                 a_k_hat, cfg)
            scalars["cond_jhat"][i] = out.cond_jhat
            w2_prev = w2

            if i == n_ticks - 1:
                break

            try:
                if velocity_mode:
                    q, dq = integrate_plant_servo(q, dq, out.vel_cmd,
                                                  cfg.servo_gain, cfg.a_d_true,
                                                  cfg.dt_plant, n_sub,
                                                  g0, cfg.cond_limit)
                else:
                    q, dq = integrate_plant(q, dq, tau, cfg.a_d_true,
                                            cfg.dt_plant, n_sub,
                                            g0, cfg.cond_limit)
            except model.SingularInertiaError as exc:
                raise SingularityAbort(str(exc), partial(i + 1, str(exc))) from exc
            except _NonFiniteStateError:
                reason = (f"plant state became non-finite during the step "
                          f"from t={t:.3f}")
                raise DivergenceAbort(reason, partial(i + 1, reason)) from None

            if not cfg.freeze_estimates:
                a_k_hat = project_box(a_k_hat + cfg.dt_control * out.a_k_rate,
                                      cfg.box_lower, cfg.box_upper)
                a_d_hat = a_d_hat + cfg.dt_control * out.a_d_rate

    log = partial(n_ticks, "")
    log.completed = True
    return log
