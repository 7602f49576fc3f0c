import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from energy_oracle import (arm_z, bias_fd, contact_x, gradient, kinetic, mass_matrix_fd,
                           potential, random_state, rotation)
from quadimpact.contact import ContactParams, evaluate_contacts
from quadimpact.dynamics_compliant import (CompliantState, arm_kinematics, bias_and_gravity,
                                           compliant_derivative, generalized_external_force,
                                           kinetic_energy, mass_matrix, potential_energy)
from quadimpact.dynamics_rigid import RigidState, rigid_derivative
from quadimpact.errors import GimbalLock, InvalidArmLength
from quadimpact.vehicle import ARM_DIRS, CompliantParams, RigidParams, inertia_of, mixer_rigid

SLIDER = CompliantParams(m_b=1.882, m_a=0.2)
FLIGHT = CompliantParams.from_total_inertia()
L = 0.19
G = 9.81
N_ORACLE = 1000


def state(p=(0, 0, 0), eta=(0, 0, 0), l=(L,) * 4, v=(0, 0, 0), eta_dot=(0, 0, 0),
          l_dot=(0,) * 4):
    return CompliantState(np.concatenate([p, eta, l]), np.concatenate([v, eta_dot, l_dot]))


def test_arm_kinematics_static_translation():
    k = arm_kinematics(state(v=(1.0, -2.0, 0.5)), SLIDER)
    np.testing.assert_allclose(k.v, np.tile([1.0, -2.0, 0.5], (4, 1)), atol=1e-15)


def test_arm_kinematics_position():
    k = arm_kinematics(state(), SLIDER)
    np.testing.assert_allclose(k.p[0], 0.19 * np.array([1, 1, 0]) / np.sqrt(2), rtol=1e-15)


def test_arm_kinematics_yaw_rate():
    l = (0.19, 0.17, 0.15, 0.13)
    k = arm_kinematics(state(l=l, eta_dot=(0, 0, 1)), SLIDER)
    np.testing.assert_allclose(np.linalg.norm(k.v, axis=1), l, rtol=1e-14)


def test_arm_kinematics_relation(rng):
    for _ in range(20):
        q, qd = random_state(rng)
        s = CompliantState(q, qd)
        k = arm_kinematics(s, FLIGHT)
        R = rotation(q[3:6])
        for j in range(4):
            np.testing.assert_allclose(k.p[j], q[:3] + q[6 + j] * R @ ARM_DIRS[j], atol=1e-14)


def test_kinetic_energy_zero():
    assert kinetic_energy(state(), SLIDER) == 0.0


def test_kinetic_energy_translation():
    T = kinetic_energy(state(v=(1, 0, 0)), SLIDER)
    assert T == pytest.approx(0.5 * (1.882 + 0.8), rel=1e-14)
    assert T == pytest.approx(1.341, rel=1e-12)


@given(st.floats(-np.pi, np.pi), st.integers(0, 2 ** 32 - 1))
def test_kinetic_energy_yaw_invariant(dpsi, seed):
    q, qd = random_state(np.random.default_rng(seed))
    Rz = rotation([0, 0, dpsi])
    q2, qd2 = q.copy(), qd.copy()
    q2[:3] = Rz @ q[:3]
    qd2[:3] = Rz @ qd[:3]
    q2[5] += dpsi
    T1 = kinetic_energy(CompliantState(q, qd), FLIGHT)
    T2 = kinetic_energy(CompliantState(q2, qd2), FLIGHT)
    assert T2 == pytest.approx(T1, rel=1e-12)


def test_potential_energy_examples():
    assert potential_energy(state(), SLIDER) == 0.0
    U = potential_energy(state(l=(L - 0.01, L, L, L)), SLIDER)
    assert U == pytest.approx(0.5 * 5000 * 1e-4, rel=1e-12)
    assert U == pytest.approx(0.25, rel=1e-12)
    dU = potential_energy(state(p=(0, 0, 1)), SLIDER) - potential_energy(state(), SLIDER)
    assert dU == pytest.approx((1.882 + 0.8) * G, rel=1e-14)


def test_mass_matrix_translation_block(rng):
    for _ in range(50):
        q, qd = random_state(rng)
        M = mass_matrix(CompliantState(q, qd), SLIDER)
        np.testing.assert_allclose(M[:3, :3], (1.882 + 0.8) * np.eye(3), rtol=1e-15)


def test_mass_matrix_symmetric_positive_definite(rng):
    for _ in range(N_ORACLE):
        q, qd = random_state(rng)
        M = mass_matrix(CompliantState(q, qd), FLIGHT)
        assert np.abs(M - M.T).max() < 1e-10
        assert np.linalg.eigvalsh(M).min() > 0


@pytest.mark.parametrize("params", [SLIDER, FLIGHT], ids=["slider", "flight"])
def test_finite_difference_oracle(params):
    rng = np.random.default_rng(2024)
    worst_M = worst_h = 0.0
    for _ in range(N_ORACLE):
        q, qd = random_state(rng)
        s = CompliantState(q, qd)
        M = mass_matrix(s, params)
        h = bias_and_gravity(s, params)
        M_fd = mass_matrix_fd(q, params)
        h_fd = bias_fd(q, qd, params)
        worst_M = max(worst_M, np.abs(M - M_fd).max() / np.abs(M_fd).max())
        worst_h = max(worst_h, np.abs(h - h_fd).max() / np.abs(h_fd).max())
    assert worst_M < 1e-5
    assert worst_h < 1e-5


def test_energy_functions_match_oracle(rng):
    for _ in range(100):
        q, qd = random_state(rng)
        s = CompliantState(q, qd)
        assert kinetic_energy(s, FLIGHT) == pytest.approx(kinetic(q, qd, FLIGHT), rel=1e-12)
        assert potential_energy(s, FLIGHT) == pytest.approx(potential(q, FLIGHT), rel=1e-12,
                                                            abs=1e-12)


def test_contact_generalized_force_oracle():
    rng = np.random.default_rng(7)
    wall = ContactParams(D=0.0, k_c=2e5, c_a=0.3)
    r0 = FLIGHT.r0
    checked = 0
    while checked < 200:
        q, qd = random_state(rng, pitch=1.0)
        xs = [contact_x(q, j, r0) for j in range(4)]
        q[0] -= max(xs) - rng.uniform(0.001, 0.02)
        s = CompliantState(q, qd)
        R = rotation(q[3:6])
        res = evaluate_contacts(q[:3], qd[:3], R, s.omega, q[6:], qd[6:], r0, wall)
        if not np.any(res.f_n > 0):
            continue
        checked += 1
        F = (generalized_external_force(s, np.zeros(4), wall, FLIGHT)
             - generalized_external_force(s, np.zeros(4), None, FLIGHT))
        oracle = np.zeros(10)
        for j in range(4):
            if res.f_n[j] == 0 and res.f_f[j, 2] == 0:
                continue
            jx = gradient(lambda x, j=j: contact_x(x, j, r0), q)
            jz = gradient(lambda x, j=j: arm_z(x, j), q)
            oracle += -res.f_n[j] * jx + res.f_f[j, 2] * jz
        np.testing.assert_allclose(F, oracle, atol=1e-5 * np.abs(oracle).max())
        np.testing.assert_allclose(F @ qd, res.power.sum(), rtol=1e-9, atol=1e-9)


def test_bias_static_gravity():
    h = bias_and_gravity(state(), SLIDER)
    expected = np.zeros(10)
    expected[2] = (1.882 + 0.8) * G
    np.testing.assert_allclose(h, expected, atol=1e-12)


def test_bias_compressed_arm_spring_sign():
    # M Q_ddot + h = F with U = k/2 (L - l)^2 gives h_l = dU/dl = -k (L - l).
    s = state(l=(L - 0.01, L, L, L))
    h = bias_and_gravity(s, SLIDER)
    assert h[6] == pytest.approx(-50.0, rel=1e-12)
    qdd = compliant_derivative(s, np.zeros(4), None, SLIDER).Qdd
    assert qdd[6] > 0


def test_damper_generalized_force():
    F = generalized_external_force(state(l_dot=(1, 0, 0, 0)), np.zeros(4), None, SLIDER)
    np.testing.assert_allclose(F[6:], [-90.0, 0, 0, 0])


def test_motor_generalized_force_hover():
    f = np.full(4, (1.882 + 0.8) * G / 4)
    F = generalized_external_force(state(), f, None, SLIDER)
    assert F[2] == pytest.approx(f.sum(), rel=1e-15)
    np.testing.assert_allclose(F[3:6], 0, atol=1e-15)


def test_motor_generalized_force_is_power_gradient(rng):
    for _ in range(50):
        q, qd = random_state(rng)
        s = CompliantState(q, qd)
        f = rng.uniform(0, 8, 4)
        F = generalized_external_force(s, f, None, FLIGHT) \
            - generalized_external_force(s, np.zeros(4), None, FLIGHT)
        R = rotation(q[3:6])
        levers = q[6:] / np.sqrt(2)
        tau = np.array([levers @ (f * [1, -1, -1, 1]), levers @ (f * [-1, -1, 1, 1]),
                        FLIGHT.c_tau * (f @ [-1, 1, -1, 1])])
        power = f.sum() * R[:, 2] @ qd[:3] + tau @ s.omega
        assert F @ qd == pytest.approx(power, rel=1e-10, abs=1e-10)
        np.testing.assert_allclose(F[:3], f.sum() * R[:, 2], rtol=1e-12, atol=1e-12)


def test_symmetric_two_arm_contact_no_roll_yaw():
    wall = ContactParams(D=1.0)
    x = 1.0 - (L + FLIGHT.r0) / np.sqrt(2) + 0.004
    s = state(p=(x, 0, 1), v=(1.0, 0, 0))
    F = generalized_external_force(s, np.zeros(4), wall, FLIGHT)
    assert F[0] < 0
    assert abs(F[3]) < 1e-12 and abs(F[5]) < 1e-12


def test_hover_equilibrium():
    f = np.full(4, (FLIGHT.m_b + 4 * FLIGHT.m_a) * G / 4)
    d = compliant_derivative(state(p=(0, 0, 1)), f, None, FLIGHT)
    np.testing.assert_allclose(d.Qdd, 0, atol=1e-9)


def test_free_fall():
    d = compliant_derivative(state(p=(0, 0, 5)), np.zeros(4), None, FLIGHT)
    expected = np.zeros(10)
    expected[2] = -G
    np.testing.assert_allclose(d.Qdd, expected, atol=1e-12)


def test_frozen_arm_matches_rigid_derivative(rng):
    rp = RigidParams(m=FLIGHT.m_b + 4 * FLIGHT.m_a,
                     inertia=tuple(np.diag(inertia_of(np.full(4, L), FLIGHT))),
                     L=L, c_tau=FLIGHT.c_tau)
    free = np.array([True] * 6 + [False] * 4)
    for _ in range(100):
        q, qd = random_state(rng)
        q[6:] = L
        qd[6:] = 0
        s = CompliantState(q, qd)
        f = rng.uniform(0, 8, 4)
        d = compliant_derivative(s, f, None, FLIGHT, free=free)
        rs = RigidState(q[:3], qd[:3], s.R, s.omega)
        rd = rigid_derivative(rs, mixer_rigid(f, rp), rp)
        np.testing.assert_allclose(d.Qdd[:3], rd.v_dot, atol=1e-9)
        # body angular acceleration from Euler-angle accelerations
        h = 1e-7
        om_next = CompliantState(q + h * qd, qd + h * d.Qdd).omega
        om_prev = CompliantState(q - h * qd, qd - h * d.Qdd).omega
        np.testing.assert_allclose((om_next - om_prev) / (2 * h), rd.omega_dot,
                                   atol=1e-5 * (1 + np.abs(rd.omega_dot).max()))


def test_invalid_states():
    with pytest.raises(InvalidArmLength):
        kinetic_energy(state(l=(0.0, L, L, L)), SLIDER)
    with pytest.raises(InvalidArmLength):
        mass_matrix(state(l=(L + 0.01, L, L, L)), SLIDER)
    with pytest.raises(GimbalLock):
        mass_matrix(state(eta=(0, np.pi / 2, 0)), SLIDER)
