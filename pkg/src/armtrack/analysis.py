"""Post-run metrics and certificate checks."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import model
from .sim import SimLog, integrate_plant

Array = np.ndarray

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass
class RunMetrics:
    """Summary numbers for one run; as_dict() feeds the flat JSON report."""

    steady_state_error: float
    settling_time: float
    settling_time_x: float
    settling_time_y: float
    fitted_decay_rate: float
    max_torque: float
    v1_max_uptick: float
    v2_max_uptick: float
    kin_residual_max: float
    s_squared_integral: float
    completed: bool
    abort_reason: str

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        for key, val in out.items():
            if isinstance(val, (np.floating, np.integer)):
                out[key] = float(val)
        return out


def error_norms(log: SimLog, ord: float = 2) -> Array:
    """Per-tick norm of the task error."""
    if ord == np.inf:
        return np.max(np.abs(log.x_err), axis=1)
    return np.linalg.norm(log.x_err, axis=1)


def steady_state_error(log: SimLog, t_start: float) -> float:
    """Largest per-axis task error over t >= t_start (infinity norm)."""
    mask = log.t >= t_start
    if not np.any(mask):
        raise ValueError(f"no samples at or after t = {t_start}")
    return float(np.max(np.abs(log.x_err[mask])))


def default_fit_window(log: SimLog) -> tuple[float, float]:
    """From the first tick until the error first drops below 1% of its
    initial value; raises if it never does."""
    norms = error_norms(log)
    if len(norms) == 0:
        raise ValueError("empty log")
    threshold = 0.01 * norms[0]
    below = np.nonzero(norms < threshold)[0]
    if norms[0] == 0.0 or len(below) == 0:
        raise ValueError("error never fell below 1% of its initial value; "
                         "pass an explicit window")
    return float(log.t[0]), float(log.t[below[0]])


def fit_decay_rate(log: SimLog, window: tuple[float, float] | None = None) -> float:
    """Exponential decay rate of the error norm: the negated least-squares
    slope of log ||x_err(t)|| over the window."""
    if window is None:
        window = default_fit_window(log)
    t0, t1 = window
    norms = error_norms(log)
    mask = (log.t >= t0) & (log.t <= t1) & (norms > 0.0)
    if np.count_nonzero(mask) < 3:
        raise ValueError("fit window contains fewer than 3 usable samples")
    slope = np.polyfit(log.t[mask], np.log(norms[mask]), 1)[0]
    return float(-slope)


def _settle(t: Array, err: Array, threshold: float) -> float:
    above = np.nonzero(err > threshold)[0]
    if len(above) == 0:
        return float(t[0])
    if above[-1] == len(t) - 1:
        return float("inf")
    return float(t[above[-1] + 1])


def settling_time(log: SimLog, frac: float = 0.05) -> float:
    """Earliest time after which ||x_err||_inf stays below frac times its
    initial value; inf if it never settles, nan on an empty log."""
    if len(log) == 0:
        return float("nan")
    err = np.max(np.abs(log.x_err), axis=1)
    return _settle(log.t, err, frac * err[0])


def settling_times_per_axis(log: SimLog, frac: float = 0.05) -> tuple[float, float]:
    if len(log) == 0:
        return float("nan"), float("nan")
    out = []
    for axis in range(2):
        err = np.abs(log.x_err[:, axis])
        out.append(_settle(log.t, err, frac * err[0]))
    return out[0], out[1]


def max_uptick(trace: Array) -> float:
    """Largest single-step rise of a trace relative to its current value,
    i.e. max over i of (v[i+1] - v[i]) / v[i] for a nonnegative decreasing
    certificate.

    The denominator is floored at 1e-12 of the trace maximum so a value
    that has decayed to round-off level cannot turn numerical dust into a
    huge ratio.
    """
    if len(trace) < 2:
        return 0.0
    v = np.asarray(trace, dtype=float)
    floor = 1e-12 * float(np.max(np.abs(v))) + 1e-300
    rel = np.diff(v) / np.maximum(v[:-1], floor)
    return max(0.0, float(np.max(rel)))


def lyapunov_audit(log: SimLog) -> tuple[float, float]:
    """Max single-step relative upticks of the two certificate traces.

    Both traces are nonincreasing along a healthy run of the adaptive
    torque controllers, up to integration tolerance; a positive drift
    flags a sign error or an unstable discretization.
    """
    return max_uptick(log.v1), max_uptick(log.v2)


def s_squared_integral(log: SimLog) -> float:
    """Integral of ||s||^2 over the run (trapezoid rule on the tick grid)."""
    return float(_trapz(np.sum(log.s ** 2, axis=1), log.t))


def kinematic_box_margin(log: SimLog) -> float:
    """Worst-case |det J(q; a_k)| over the logged joint path and the corners
    of the projection box.

    det J is linear in a_k, so checking the box corners bounds the whole
    box.  Returns 0 if any corner's determinant changes sign along the
    path (a singularity inside the box on this trajectory).
    """
    cfg = log.config
    q2 = log.q[:, 1]
    s2, c2 = np.sin(q2), np.cos(q2)
    worst = float("inf")
    for l1c, ac, bc in itertools.product(*zip(cfg.box_lower, cfg.box_upper)):
        dets = l1c * (ac * s2 + bc * c2)
        if dets.min() < 0.0 < dets.max():
            return 0.0
        worst = min(worst, float(np.min(np.abs(dets))))
    return worst


def compute_metrics(log: SimLog, steady_from: float = 6.0,
                    settle_frac: float = 0.05) -> RunMetrics:
    """Standard metric set for one run.  Metrics that need a complete run
    or a decaying error come back as nan/inf instead of raising."""
    try:
        sse = steady_state_error(log, steady_from)
    except ValueError:
        sse = float("nan")
    try:
        rate = fit_decay_rate(log)
    except ValueError:
        rate = float("nan")
    v1_up, v2_up = lyapunov_audit(log)
    tx, ty = settling_times_per_axis(log, settle_frac)
    return RunMetrics(
        steady_state_error=sse,
        settling_time=settling_time(log, settle_frac),
        settling_time_x=tx,
        settling_time_y=ty,
        fitted_decay_rate=rate,
        max_torque=float(np.max(np.abs(log.tau))) if len(log) else float("nan"),
        v1_max_uptick=v1_up,
        v2_max_uptick=v2_up,
        kin_residual_max=float(np.max(log.kin_residual)) if len(log) else float("nan"),
        s_squared_integral=s_squared_integral(log),
        completed=log.completed,
        abort_reason=log.abort_reason,
    )


@dataclass
class PropertyCheck:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    elapsed: float


def run_property_suite(n_samples: int = 1000, seed: int = 0,
                       kin_regressor_fn=model.kin_regressor,
                       dyn_regressor_fn=model.dyn_regressor) -> list[PropertyCheck]:
    """Randomized model certificates: regressor identities, passivity
    skew-symmetry, Jacobian finite differences, parameter linearity, and an
    integrator order study.

    The regressor functions are injectable so a deliberately perturbed
    regressor can serve as a negative control in tests.
    """
    rng = np.random.default_rng(seed)
    checks: list[PropertyCheck] = []

    def record(name: str, residual: float, tol: float, t0: float) -> None:
        checks.append(PropertyCheck(name, float(residual), tol,
                                    bool(residual < tol), time.perf_counter() - t0))

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_samples):
        q = rng.uniform(-np.pi, np.pi, 2)
        xi = rng.uniform(-3.0, 3.0, 2)
        a_k = rng.uniform(-5.0, 5.0, 3)
        r = model.jacobian(q, a_k) @ xi - kin_regressor_fn(q, xi) @ a_k
        worst = max(worst, float(np.max(np.abs(r))))
    record("kinematic-regressor-identity", worst, 1e-12, t0)

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_samples):
        q = rng.uniform(-np.pi, np.pi, 2)
        dq = rng.uniform(-3.0, 3.0, 2)
        z = rng.uniform(-3.0, 3.0, 2)
        dz = rng.uniform(-3.0, 3.0, 2)
        a_d = rng.uniform(-10.0, 10.0, 4)
        lhs = (model.inertia(q, a_d) @ dz + model.coriolis(q, dq, a_d) @ z
               + model.gravity(q, a_d))
        r = dyn_regressor_fn(q, dq, z, dz) @ a_d - lhs
        worst = max(worst, float(np.max(np.abs(r))))
    record("dynamic-regressor-identity", worst, 1e-9, t0)

    t0 = time.perf_counter()
    worst = 0.0
    h = 1e-6
    for _ in range(n_samples):
        q = rng.uniform(-np.pi, np.pi, 2)
        dq = rng.uniform(-1.0, 1.0, 2)
        v = rng.uniform(-1.0, 1.0, 2)
        a_d = rng.uniform(-5.0, 5.0, 4)
        m_dot = (model.inertia(q + h * dq, a_d) - model.inertia(q - h * dq, a_d)) / (2.0 * h)
        r = v @ (m_dot - 2.0 * model.coriolis(q, dq, a_d)) @ v
        worst = max(worst, abs(float(r)))
    record("passivity-skew-symmetry", worst, 1e-8, t0)

    t0 = time.perf_counter()
    worst = 0.0
    h = 1e-7
    for _ in range(n_samples):
        q = rng.uniform(-np.pi, np.pi, 2)
        a_k = rng.uniform(0.5, 5.0, 3)
        j = model.jacobian(q, a_k)
        fd = np.zeros((2, 2))
        for col in range(2):
            e = np.zeros(2)
            e[col] = h
            fd[:, col] = (model.forward_kinematics(q + e, a_k)
                          - model.forward_kinematics(q - e, a_k)) / (2.0 * h)
        rel = np.linalg.norm(fd - j) / np.linalg.norm(j)
        worst = max(worst, float(rel))
    record("jacobian-finite-difference", worst, 1e-6, t0)

    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_samples):
        q = rng.uniform(-np.pi, np.pi, 2)
        a1 = rng.uniform(-5.0, 5.0, 3)
        a2 = rng.uniform(-5.0, 5.0, 3)
        r1 = (model.forward_kinematics(q, a1 + a2)
              - model.forward_kinematics(q, a1) - model.forward_kinematics(q, a2))
        r2 = model.jacobian(q, a1 + a2) - model.jacobian(q, a1) - model.jacobian(q, a2)
        worst = max(worst, float(np.max(np.abs(r1))), float(np.max(np.abs(r2))))
    record("parameter-linearity", worst, 1e-12, t0)

    t0 = time.perf_counter()
    a_d = np.array([9.26, 3.66, 3.2, 3.2])
    q0 = np.array([0.6, 1.1])
    dq0 = np.array([0.3, -0.4])
    tau = np.array([5.0, -2.0])
    horizon = 0.2
    ends = []
    for n_steps in (8, 16, 32):
        qf, dqf = integrate_plant(q0, dq0, tau, a_d, horizon / n_steps, n_steps)
        ends.append(np.concatenate((qf, dqf)))
    e1 = np.linalg.norm(ends[0] - ends[1])
    e2 = np.linalg.norm(ends[1] - ends[2])
    order = float(np.log2(e1 / e2)) if e2 > 0.0 else float("inf")
    checks.append(PropertyCheck("integrator-order", order, 3.5,
                                bool(order >= 3.5), time.perf_counter() - t0))
    return checks
