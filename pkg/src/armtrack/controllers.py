"""Task-space tracking controllers for the planar arm.

All schemes share the same pattern: build a reference joint velocity from
the task error using the estimated Jacobian, form s = dq - qr_dot, and
drive s with feedback plus a regressor-based feedforward while adapting
both parameter vectors online.  The schemes differ in how the reference
velocity uses the Jacobian estimate and in the feedback shape:

inverse_jacobian    qr_dot = Jhat^-1 (dx_d - alpha*x_err), feedback -K s
transpose_reference qr_dot = Jhat^-1 dx_d - alpha*Jhat^T x_err, feedback -K s
inertia_gain        inverse_jacobian with K replaced by lambda_c * Mhat(q)
transpose_baseline  inverse_jacobian reference, feedback -Jhat^T K Jhat s
velocity_inverse    reference velocity only, executed by a joint servo
velocity_transpose  transpose_reference velocity only, same servo

Adaptation is driven by the task error for the kinematic parameters and by
s for the dynamic parameters; the kinematic estimate is clamped to a box
after every update so the estimated Jacobian stays invertible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (COND_LIMIT, GRAVITY, dyn_regressor, inertia, jacobian,
                    jacobian_rate, kin_regressor)

Array = np.ndarray

INVERSE_REFERENCE_MODES = ("inverse_jacobian", "inertia_gain",
                           "transpose_baseline", "velocity_inverse")
TRANSPOSE_REFERENCE_MODES = ("transpose_reference", "velocity_transpose")
VELOCITY_MODES = ("velocity_inverse", "velocity_transpose")
TORQUE_MODES = ("inverse_jacobian", "transpose_reference", "inertia_gain",
                "transpose_baseline")
MODES = TORQUE_MODES + VELOCITY_MODES

DEFAULT_BOX_LOWER = np.array([0.5, 0.5, 0.1])
DEFAULT_BOX_UPPER = np.array([6.0, 6.0, 3.0])


class SingularJacobianError(RuntimeError):
    """Estimated Jacobian condition number exceeded the inversion limit."""


@dataclass
class Gains:
    """Controller gains.  k, gamma_d, gamma_k are SPD matrices; scalars are
    promoted to scaled identities by the config layer."""

    k: Array
    alpha: float
    beta: float
    gamma_d: Array
    gamma_k: Array
    lambda_c: float = 0.0

    def validate(self) -> None:
        for name, mat, n in (("k", self.k, 2), ("gamma_d", self.gamma_d, 4),
                             ("gamma_k", self.gamma_k, 3)):
            m = np.asarray(mat, dtype=float)
            if m.shape != (n, n):
                raise ValueError(f"gains.{name} must be {n}x{n}, got {m.shape}")
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"gains.{name} must be symmetric")
            if np.linalg.eigvalsh(m)[0] <= 0.0:
                raise ValueError(f"gains.{name} must be positive definite")
        if self.alpha <= 0.0:
            raise ValueError("gains.alpha must be positive")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("gains.beta must lie in [0, 1)")
        if self.lambda_c < 0.0:
            raise ValueError("gains.lambda_c must be nonnegative")


@dataclass
class SensorSample:
    """One tick of measured data handed to the controller."""

    t: float
    q: Array
    dq: Array
    x: Array
    dx: Array
    x_d: Array
    dx_d: Array
    ddx_d: Array

    @property
    def x_err(self) -> Array:
        return self.x - self.x_d

    @property
    def dx_err(self) -> Array:
        return self.dx - self.dx_d


@dataclass
class ControlOutput:
    """Controller result for one tick.

    tau is None in the velocity-command modes, where vel_cmd carries the
    joint-velocity setpoint that the simulated servo tracks instead.
    """

    qr_dot: Array
    qr_ddot: Array
    s: Array
    a_k_rate: Array
    a_d_rate: Array
    cond_jhat: float
    tau: Array | None = None
    vel_cmd: Array | None = None
    k_eff: Array | None = field(default=None, repr=False)


def _checked_jacobian(q: Array, a_k_hat: Array, cond_limit: float) -> tuple[Array, float]:
    jhat = jacobian(q, a_k_hat)
    cond = float(np.linalg.cond(jhat))
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularJacobianError(
            f"estimated Jacobian nearly singular (cond={cond:.3g}) "
            f"at q={q!r}, a_k_hat={a_k_hat!r}")
    return jhat, cond


def reference_velocity_inverse(q: Array, x_err: Array, dx_d: Array,
                               a_k_hat: Array, alpha: float,
                               cond_limit: float = COND_LIMIT) -> Array:
    """qr_dot = Jhat^-1 (dx_d - alpha * x_err)."""
    jhat, _ = _checked_jacobian(q, a_k_hat, cond_limit)
    return np.linalg.solve(jhat, dx_d - alpha * x_err)


def reference_accel_inverse(q: Array, dq: Array, dx_err: Array, ddx_d: Array,
                            a_k_hat: Array, a_k_rate: Array, qr_dot: Array,
                            alpha: float, cond_limit: float = COND_LIMIT) -> Array:
    """Derivative of the inverse-Jacobian reference velocity.

    Solves Jhat qr_ddot = (ddx_d - alpha*dx_err) - Jhat_dot qr_dot, with
    Jhat_dot evaluated at the current adaptation rate.
    """
    jhat, _ = _checked_jacobian(q, a_k_hat, cond_limit)
    jhat_dot = jacobian_rate(q, dq, a_k_hat, a_k_rate)
    return np.linalg.solve(jhat, ddx_d - alpha * dx_err - jhat_dot @ qr_dot)


def reference_velocity_transpose(q: Array, x_err: Array, dx_d: Array,
                                 a_k_hat: Array, alpha: float,
                                 cond_limit: float = COND_LIMIT) -> Array:
    """qr_dot = Jhat^-1 dx_d - alpha * Jhat^T x_err."""
    jhat, _ = _checked_jacobian(q, a_k_hat, cond_limit)
    return np.linalg.solve(jhat, dx_d) - alpha * (jhat.T @ x_err)


def reference_accel_transpose(q: Array, dq: Array, x_err: Array, dx_err: Array,
                              dx_d: Array, ddx_d: Array, a_k_hat: Array,
                              a_k_rate: Array, alpha: float,
                              cond_limit: float = COND_LIMIT) -> Array:
    """Derivative of the transpose-reference velocity (product rule on both
    terms, using d/dt Jhat^-1 = -Jhat^-1 Jhat_dot Jhat^-1)."""
    jhat, _ = _checked_jacobian(q, a_k_hat, cond_limit)
    jhat_dot = jacobian_rate(q, dq, a_k_hat, a_k_rate)
    inv_dxd = np.linalg.solve(jhat, dx_d)
    return (-np.linalg.solve(jhat, jhat_dot @ inv_dxd)
            + np.linalg.solve(jhat, ddx_d)
            - alpha * (jhat_dot.T @ x_err + jhat.T @ dx_err))


def adapt_dynamic(q: Array, dq: Array, qr_dot: Array, qr_ddot: Array, s: Array,
                  gamma_d: Array, g0: float = GRAVITY) -> Array:
    """a_d_hat rate: -Gamma_d Y_d(q, dq, qr_dot, qr_ddot)^T s."""
    return -gamma_d @ (dyn_regressor(q, dq, qr_dot, qr_ddot, g0).T @ s)


def adapt_kinematic_filtered(q: Array, reg_vel: Array, x_err: Array,
                             dx_err: Array, gamma_k: Array, alpha: float,
                             beta: float) -> Array:
    """a_k_hat rate: Gamma_k Y_k(q, reg_vel)^T ((beta/alpha) dx_err + x_err).

    reg_vel is the reference velocity for the inverse-Jacobian scheme and
    the measured joint velocity for the transpose-feedback baseline.
    """
    u = (beta / alpha) * dx_err + x_err
    return gamma_k @ (kin_regressor(q, reg_vel).T @ u)


def adapt_kinematic_direct(q: Array, dq: Array, x_err: Array,
                           gamma_k: Array) -> Array:
    """a_k_hat rate for the transpose-reference scheme: Gamma_k Y_k(q, dq)^T x_err."""
    return gamma_k @ (kin_regressor(q, dq).T @ x_err)


def project_box(values: Array, lower: Array, upper: Array) -> Array:
    """Componentwise clamp of a parameter estimate into its admissible box."""
    return np.clip(values, lower, upper)


def inertia_feedback_gain(q: Array, a_d_hat: Array, lambda_c: float,
                          floor: float = 0.0) -> Array:
    """Feedback gain lambda_c * Mhat(q) (+ floor * I).

    Mhat uses the current estimate, so early in adaptation this gain can be
    small or indefinite; no clamping is applied beyond the optional floor.
    """
    k_eff = lambda_c * inertia(q, a_d_hat)
    if floor > 0.0:
        k_eff = k_eff + floor * np.eye(2)
    return k_eff


def controller_step(sample: SensorSample, a_k_hat: Array, a_d_hat: Array,
                    gains: Gains, mode: str, g0: float = GRAVITY,
                    cond_limit: float = COND_LIMIT,
                    inertia_gain_floor: float = 0.0) -> ControlOutput:
    """Evaluate one control tick: references, torque or velocity command,
    and both adaptation rates.  Pure function of its inputs."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    q, dq = sample.q, sample.dq
    x_err, dx_err = sample.x_err, sample.dx_err
    jhat, cond = _checked_jacobian(q, a_k_hat, cond_limit)

    if mode in INVERSE_REFERENCE_MODES:
        qr_dot = np.linalg.solve(jhat, sample.dx_d - gains.alpha * x_err)
        reg_vel = dq if mode == "transpose_baseline" else qr_dot
        a_k_rate = adapt_kinematic_filtered(q, reg_vel, x_err, dx_err,
                                            gains.gamma_k, gains.alpha, gains.beta)
        jhat_dot = jacobian_rate(q, dq, a_k_hat, a_k_rate)
        qr_ddot = np.linalg.solve(
            jhat, sample.ddx_d - gains.alpha * dx_err - jhat_dot @ qr_dot)
    else:
        inv_dxd = np.linalg.solve(jhat, sample.dx_d)
        qr_dot = inv_dxd - gains.alpha * (jhat.T @ x_err)
        a_k_rate = adapt_kinematic_direct(q, dq, x_err, gains.gamma_k)
        jhat_dot = jacobian_rate(q, dq, a_k_hat, a_k_rate)
        qr_ddot = (-np.linalg.solve(jhat, jhat_dot @ inv_dxd)
                   + np.linalg.solve(jhat, sample.ddx_d)
                   - gains.alpha * (jhat_dot.T @ x_err + jhat.T @ dx_err))

    s = dq - qr_dot
    out = ControlOutput(qr_dot=qr_dot, qr_ddot=qr_ddot, s=s,
                        a_k_rate=a_k_rate, a_d_rate=np.zeros(4),
                        cond_jhat=cond)

    if mode in VELOCITY_MODES:
        out.vel_cmd = qr_dot
        return out

    y_d = dyn_regressor(q, dq, qr_dot, qr_ddot, g0)
    if mode == "inertia_gain":
        k_eff = inertia_feedback_gain(q, a_d_hat, gains.lambda_c,
                                      inertia_gain_floor)
        # the adaptation regressor absorbs the inertia-weighted feedback
        y_d_star = dyn_regressor(q, dq, qr_dot, qr_ddot - gains.lambda_c * s, g0)
    elif mode == "transpose_baseline":
        k_eff = jhat.T @ gains.k @ jhat
        y_d_star = y_d
    else:
        k_eff = gains.k
        y_d_star = y_d

    out.tau = -k_eff @ s + y_d @ a_d_hat
    out.a_d_rate = -gains.gamma_d @ (y_d_star.T @ s)
    out.k_eff = k_eff
    return out
