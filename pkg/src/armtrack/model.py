"""Planar two-link arm with a rigidly grasped tool: kinematics and dynamics.

The tool tip is offset from the second joint by (a, b) in the link-2 frame,
so the kinematic parameter vector is a_k = [l1, a, b].  The rigid-body
dynamics are grouped into a_d = [th1, th2, th3, th4] with

    M11 = th1 + 2*th3*cos(q2)      M12 = M21 = th2 + th3*cos(q2)
    M22 = th2
    g1  = th4*g0*cos(q1) + (th3/L1_REF)*g0*cos(q1+q2)
    g2  = (th3/L1_REF)*g0*cos(q1+q2)

where L1_REF = 2.0 m is a fixed constant of the parameterization (the
gravity lever of the second body is tied to th3 through it).  Everything
here is a pure function of its arguments.
"""

from __future__ import annotations

import numpy as np

Array = np.ndarray

GRAVITY = 9.81
L1_REF = 2.0
COND_LIMIT = 1e8


class SingularInertiaError(ValueError):
    """Inertia matrix condition number exceeded the inversion limit."""


def forward_kinematics(q: Array, a_k: Array) -> Array:
    """Tool-tip position for joint angles q and kinematic parameters a_k.

    Parameters
    ----------
    q : (2,) array
        Joint angles [q1, q2] in radians.
    a_k : (3,) array
        Kinematic parameters [l1, a, b]: first link length and the tool
        offset in the link-2 frame.

    Returns
    -------
    (2,) array
        Tip position in the base frame.
    """
    l1, a, b = a_k
    c1, s1 = np.cos(q[0]), np.sin(q[0])
    c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
    return np.array([l1 * c1 + a * c12 - b * s12,
                     l1 * s1 + a * s12 + b * c12])


def jacobian(q: Array, a_k: Array) -> Array:
    """Task Jacobian d(tip)/dq, linear in a_k.

    det J = l1 * (a*sin(q2) + b*cos(q2)), so the arm is singular exactly
    where that combination vanishes.
    """
    l1, a, b = a_k
    c1, s1 = np.cos(q[0]), np.sin(q[0])
    c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
    u = a * s12 + b * c12
    v = a * c12 - b * s12
    return np.array([[-l1 * s1 - u, -u],
                     [l1 * c1 + v, v]])


def kin_regressor(q: Array, xi: Array) -> Array:
    """Kinematic regressor Y_k with J(q; a_k) @ xi == Y_k(q, xi) @ a_k.

    Valid for any velocity-like vector xi because J is linear in a_k.
    """
    c1, s1 = np.cos(q[0]), np.sin(q[0])
    c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
    w = xi[0] + xi[1]
    return np.array([[-s1 * xi[0], -s12 * w, -c12 * w],
                     [c1 * xi[0], c12 * w, -s12 * w]])


def jacobian_rate(q: Array, dq: Array, a_k: Array, da_k: Array) -> Array:
    """Total time derivative of jacobian(q, a_k) given dq and da_k.

    The configuration part is the chain rule through q; the parameter part
    is jacobian(q, da_k) by linearity.
    """
    l1, a, b = a_k
    c1, s1 = np.cos(q[0]), np.sin(q[0])
    c12, s12 = np.cos(q[0] + q[1]), np.sin(q[0] + q[1])
    w1 = dq[0]
    w12 = dq[0] + dq[1]
    du = (a * c12 - b * s12) * w12   # d/dt (a*s12 + b*c12)
    dv = (-a * s12 - b * c12) * w12  # d/dt (a*c12 - b*s12)
    config_part = np.array([[-l1 * c1 * w1 - du, -du],
                            [-l1 * s1 * w1 + dv, dv]])
    return config_part + jacobian(q, da_k)


def inertia(q: Array, a_d: Array) -> Array:
    """Joint-space inertia matrix M(q) for grouped parameters a_d."""
    t1, t2, t3, _ = a_d
    c2 = np.cos(q[1])
    m12 = t2 + t3 * c2
    return np.array([[t1 + 2.0 * t3 * c2, m12],
                     [m12, t2]])


def coriolis(q: Array, dq: Array, a_d: Array) -> Array:
    """Coriolis/centripetal matrix from the Christoffel symbols of M(q).

    This choice makes d/dt M - 2C skew-symmetric.
    """
    t3 = a_d[2]
    h = t3 * np.sin(q[1])
    return np.array([[-h * dq[1], -h * (dq[0] + dq[1])],
                     [h * dq[0], 0.0]])


def gravity(q: Array, a_d: Array, g0: float = GRAVITY) -> Array:
    """Gravity torque vector; pass g0=0 to run the arm in a horizontal plane."""
    _, _, t3, t4 = a_d
    c1 = np.cos(q[0])
    c12 = np.cos(q[0] + q[1])
    colp = (t3 / L1_REF) * g0 * c12
    return np.array([t4 * g0 * c1 + colp, colp])


def dyn_regressor(q: Array, dq: Array, z: Array, dz: Array,
                  g0: float = GRAVITY) -> Array:
    """Dynamic regressor Y_d with

        M(q) @ dz + C(q, dq) @ z + g(q) == Y_d(q, dq, z, dz) @ a_d

    for every parameter vector a_d.  z plays the role of the velocity the
    Coriolis term acts on and dz its derivative; the plant equation is the
    case z = dq, dz = ddq.
    """
    c2, s2 = np.cos(q[1]), np.sin(q[1])
    c1 = np.cos(q[0])
    c12 = np.cos(q[0] + q[1])
    gl = (g0 / L1_REF) * c12
    y13 = c2 * (2.0 * dz[0] + dz[1]) - s2 * (dq[1] * z[0] + (dq[0] + dq[1]) * z[1]) + gl
    y23 = c2 * dz[0] + s2 * dq[0] * z[0] + gl
    return np.array([[dz[0], dz[1], y13, g0 * c1],
                     [0.0, dz[0] + dz[1], y23, 0.0]])


def forward_dynamics(q: Array, dq: Array, tau: Array, a_d: Array,
                     g0: float = GRAVITY, cond_limit: float = COND_LIMIT) -> Array:
    """Joint accelerations from applied torque: solve M ddq = tau - C dq - g.

    Raises
    ------
    SingularInertiaError
        If cond(M) exceeds cond_limit.
    """
    M = inertia(q, a_d)
    if np.linalg.cond(M) > cond_limit:
        raise SingularInertiaError(
            f"inertia matrix nearly singular at q={q!r} (cond > {cond_limit:g})")
    rhs = tau - coriolis(q, dq, a_d) @ dq - gravity(q, a_d, g0)
    return np.linalg.solve(M, rhs)


def potential_energy(q: Array, a_d: Array, g0: float = GRAVITY) -> float:
    """Potential whose gradient is gravity(q, a_d, g0); used by energy tests."""
    _, _, t3, t4 = a_d
    return float(t4 * g0 * np.sin(q[0]) + (t3 / L1_REF) * g0 * np.sin(q[0] + q[1]))


def inertia_min_eigenvalue(a_d: Array, n_grid: int = 181) -> float:
    """Smallest eigenvalue of M(q) over a full elbow-angle sweep.

    M depends on q only through cos(q2), so a q2 grid covers the whole
    configuration space.  A positive return value certifies that a_d is an
    admissible (uniformly positive definite) parameter vector.
    """
    worst = np.inf
    for q2 in np.linspace(-np.pi, np.pi, n_grid):
        w = np.linalg.eigvalsh(inertia(np.array([0.0, q2]), a_d))[0]
        worst = min(worst, w)
    return float(worst)


def inverse_kinematics(x: Array, a_k: Array) -> Array:
    """Joint angles placing the tool tip at x, elbow branch with det J > 0.

    Raises
    ------
    ValueError
        If x lies outside the reachable annulus.
    """
    l1, a, b = a_k
    l2 = np.hypot(a, b)
    phi = np.arctan2(b, a)
    d2 = float(x[0] ** 2 + x[1] ** 2)
    c = (d2 - l1 ** 2 - l2 ** 2) / (2.0 * l1 * l2)
    if abs(c) > 1.0 + 1e-12:
        raise ValueError(f"target {x!r} outside the reachable workspace")
    t2p = np.arccos(np.clip(c, -1.0, 1.0))  # in [0, pi]: sin >= 0, det J >= 0
    q1 = np.arctan2(x[1], x[0]) - np.arctan2(l2 * np.sin(t2p), l1 + l2 * np.cos(t2p))
    return np.array([q1, t2p - phi])
