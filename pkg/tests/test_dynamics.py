"""Dynamic model terms against independent derivations.

The Coriolis matrix is rebuilt from the inertia matrix via Christoffel
symbols with sympy, gravity is rebuilt as the gradient of the potential,
and the whole triple is cross-checked by energy conservation along an
unforced trajectory.
"""

import numpy as np
import pytest
import sympy as sp

from armtrack import model
from armtrack.sim import integrate_plant

from conftest import A_D_TRUE, random_admissible_a_d


def _build_oracle():
    q1, q2, dq1, dq2 = sp.symbols("q1 q2 dq1 dq2", real=True)
    t1, t2, t3, t4, g0 = sp.symbols("t1 t2 t3 t4 g0", real=True)

    m = sp.Matrix([[t1 + 2 * t3 * sp.cos(q2), t2 + t3 * sp.cos(q2)],
                   [t2 + t3 * sp.cos(q2), t2]])
    qv = [q1, q2]
    dqv = [dq1, dq2]
    # Christoffel symbols of the first kind give the unique C with
    # dM/dt - 2C skew-symmetric
    c = sp.zeros(2, 2)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                c[i, j] += sp.Rational(1, 2) * (
                    sp.diff(m[i, j], qv[k]) + sp.diff(m[i, k], qv[j])
                    - sp.diff(m[j, k], qv[i])) * dqv[k]
    # gravity as the gradient of the potential
    pot = g0 * (t4 * sp.sin(q1) + (t3 / sp.Float(2.0)) * sp.sin(q1 + q2))
    grav = sp.Matrix([sp.diff(pot, q1), sp.diff(pot, q2)])

    theta = (t1, t2, t3, t4)
    return (
        sp.lambdify((q1, q2) + theta, m, "numpy"),
        sp.lambdify((q1, q2, dq1, dq2) + theta, c, "numpy"),
        sp.lambdify((q1, q2) + theta + (g0,), grav, "numpy"),
    )


M_ORACLE, C_ORACLE, G_ORACLE = _build_oracle()

RNG = np.random.default_rng(11)


def test_inertia_matches_symbolic():
    for _ in range(200):
        q = RNG.uniform(-np.pi, np.pi, 2)
        a_d = RNG.uniform(-10.0, 10.0, 4)
        assert np.allclose(model.inertia(q, a_d), M_ORACLE(*q, *a_d), atol=1e-13)


def test_coriolis_matches_christoffel():
    for _ in range(200):
        q = RNG.uniform(-np.pi, np.pi, 2)
        dq = RNG.uniform(-5.0, 5.0, 2)
        a_d = RNG.uniform(-10.0, 10.0, 4)
        want = np.asarray(C_ORACLE(*q, *dq, *a_d))
        assert np.allclose(model.coriolis(q, dq, a_d), want, atol=1e-12)


def test_gravity_matches_potential_gradient():
    for _ in range(200):
        q = RNG.uniform(-np.pi, np.pi, 2)
        a_d = RNG.uniform(-10.0, 10.0, 4)
        want = np.asarray(G_ORACLE(*q, *a_d, model.GRAVITY)).ravel()
        assert np.allclose(model.gravity(q, a_d), want, atol=1e-12)


def test_potential_energy_gradient_numeric():
    h = 1e-6
    for _ in range(50):
        q = RNG.uniform(-np.pi, np.pi, 2)
        a_d = random_admissible_a_d(RNG)
        grad = np.array([
            (model.potential_energy(q + [h, 0], a_d)
             - model.potential_energy(q - [h, 0], a_d)) / (2 * h),
            (model.potential_energy(q + [0, h], a_d)
             - model.potential_energy(q - [0, h], a_d)) / (2 * h),
        ])
        assert np.allclose(grad, model.gravity(q, a_d), atol=1e-7)


def test_frozen_values():
    m = model.inertia(np.array([0.3, 0.0]), A_D_TRUE)
    assert np.allclose(m, [[15.66, 6.86], [6.86, 3.66]])
    g = model.gravity(np.zeros(2), A_D_TRUE)
    assert np.allclose(g, [4.8 * 9.81, 1.6 * 9.81])


def test_dyn_regressor_identity():
    # Y(q, dq, z, dz) a_d == M(a_d) dz + C(q, dq, a_d) z + g(q, a_d)
    for _ in range(300):
        q = RNG.uniform(-np.pi, np.pi, 2)
        dq = RNG.uniform(-4.0, 4.0, 2)
        z = RNG.uniform(-4.0, 4.0, 2)
        dz = RNG.uniform(-4.0, 4.0, 2)
        a_d = RNG.uniform(-10.0, 10.0, 4)
        lhs = model.dyn_regressor(q, dq, z, dz) @ a_d
        rhs = (model.inertia(q, a_d) @ dz + model.coriolis(q, dq, a_d) @ z
               + model.gravity(q, a_d))
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_dyn_regressor_gravity_switch():
    q = np.array([0.4, 0.9])
    dq = np.array([1.0, -0.5])
    y0 = model.dyn_regressor(q, dq, dq, np.zeros(2), g0=0.0)
    assert np.allclose(y0 @ A_D_TRUE,
                       model.coriolis(q, dq, A_D_TRUE) @ dq)


def test_passivity_skew_symmetry():
    # v^T (dM/dt - 2C) v == 0 for every velocity
    h = 1e-6
    for _ in range(200):
        q = RNG.uniform(-np.pi, np.pi, 2)
        dq = RNG.uniform(-2.0, 2.0, 2)
        v = RNG.uniform(-2.0, 2.0, 2)
        a_d = RNG.uniform(-5.0, 5.0, 4)
        m_dot = (model.inertia(q + h * dq, a_d)
                 - model.inertia(q - h * dq, a_d)) / (2 * h)
        r = v @ (m_dot - 2.0 * model.coriolis(q, dq, a_d)) @ v
        assert abs(r) < 1e-8


def test_energy_conservation_unforced():
    # with zero torque, kinetic + potential energy is an invariant of the
    # plant flow; RK4 at a fine step must hold it to near round-off
    a_d = A_D_TRUE
    q = np.array([0.5, 1.2])
    dq = np.array([0.8, -0.6])

    def energy(q, dq):
        return (0.5 * dq @ model.inertia(q, a_d) @ dq
                + model.potential_energy(q, a_d))

    e0 = energy(q, dq)
    qf, dqf = integrate_plant(q, dq, np.zeros(2), a_d, 1e-4, 5000)
    assert abs(energy(qf, dqf) - e0) < 1e-8


def test_power_balance_forced():
    # dE/dt == dq . tau under constant torque
    a_d = A_D_TRUE
    q = np.array([0.2, 0.9])
    dq = np.array([0.1, 0.3])
    tau = np.array([3.0, -1.0])
    dt, n = 1e-4, 2000

    def energy(q, dq):
        return (0.5 * dq @ model.inertia(q, a_d) @ dq
                + model.potential_energy(q, a_d))

    e0 = energy(q, dq)
    work = 0.0
    for _ in range(n):
        q1, dq1 = integrate_plant(q, dq, tau, a_d, dt, 1)
        work += 0.5 * dt * (dq @ tau + dq1 @ tau)
        q, dq = q1, dq1
    assert abs((energy(q, dq) - e0) - work) < 1e-6


def test_admissibility_certificate():
    assert model.inertia_min_eigenvalue(A_D_TRUE) > 0.5
    for _ in range(20):
        assert model.inertia_min_eigenvalue(random_admissible_a_d(RNG)) > 0.0


def test_rejects_indefinite_parameter_vector():
    # negative theta2 makes M22 < 0 everywhere; this candidate must fail
    # the certificate and be refused by the config layer
    bad = np.array([7.9628, -0.9600, 19.2828, 10.1495])
    assert model.inertia_min_eigenvalue(bad) < 0.0

    from armtrack.config import default_config
    cfg = default_config()
    cfg.a_d_true = bad
    with pytest.raises(ValueError, match="inadmissible"):
        cfg.validate()


def test_forward_dynamics_consistency():
    for _ in range(50):
        q = RNG.uniform(-np.pi, np.pi, 2)
        dq = RNG.uniform(-2.0, 2.0, 2)
        tau = RNG.uniform(-10.0, 10.0, 2)
        a_d = random_admissible_a_d(RNG)
        ddq = model.forward_dynamics(q, dq, tau, a_d)
        back = (model.inertia(q, a_d) @ ddq
                + model.coriolis(q, dq, a_d) @ dq + model.gravity(q, a_d))
        assert np.allclose(back, tau, atol=1e-9)
