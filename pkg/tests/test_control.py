import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadimpact.control import (FAILED, HOVER, RECOVER, TRACK, CollisionEvent, ControllerGains,
                                PhaseState, RecoveryParams, Setpoint, attitude_controller,
                                attitude_error, controller, desired_force,
                                detect_collision_compliant, detect_collision_rigid,
                                flight_phase_step, position_controller, recovery_setpoint)
from quadimpact.errors import DegenerateThrust, RecoveryTimeout
from quadimpact.experiments import collision_trial
from quadimpact.geom3 import euler_to_rotation

G = 9.81
M = 1.234
S = 1 / np.sqrt(2)
GAINS = ControllerGains()
small = st.floats(-1, 1)
vec3 = st.tuples(small, small, small).map(np.array)


def test_hover_output_exact():
    for psi in (0.0, 0.7):
        out = controller(np.zeros(3), np.zeros(3), euler_to_rotation([0, 0, psi]), np.zeros(3),
                         Setpoint(np.zeros(3), psi_des=psi), GAINS, M)
        assert out.f_T_des == pytest.approx(M * G, rel=1e-15)
        np.testing.assert_allclose(out.R_des, euler_to_rotation([0, 0, psi]), atol=1e-15)
        np.testing.assert_allclose(out.tau, 0, atol=1e-15)


def test_position_error_example():
    gains = ControllerGains(k_p=(4, 4, 4), k_v=(4, 4, 4))
    sp = Setpoint(np.array([1.0, 0, 0]))
    F = desired_force(np.zeros(3), np.zeros(3), sp, gains, M)
    np.testing.assert_allclose(F, M * np.array([4, 0, G]), rtol=1e-15)
    fT, Rd = position_controller(np.zeros(3), np.zeros(3), np.eye(3), sp, gains, M)
    assert fT == pytest.approx(M * G, rel=1e-15)
    np.testing.assert_allclose(Rd[:, 2], F / np.linalg.norm(F), rtol=1e-14)
    assert Rd[0, 2] > 0


def test_degenerate_thrust():
    sp = Setpoint(np.zeros(3), a_des=np.array([0, 0, -G]))
    with pytest.raises(DegenerateThrust):
        position_controller(np.zeros(3), np.zeros(3), np.eye(3), sp, GAINS, M)


@given(vec3, vec3, st.floats(-np.pi, np.pi))
def test_desired_attitude_is_rotation(p_err, v, psi):
    sp = Setpoint(p_err, psi_des=psi)
    fT, Rd = position_controller(np.zeros(3), v, np.eye(3), sp, GAINS, M)
    np.testing.assert_allclose(Rd @ Rd.T, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(Rd) - 1) < 1e-12
    F = desired_force(np.zeros(3), v, sp, GAINS, M)
    assert Rd[:, 2] @ F > 0


def test_attitude_aligned():
    R = euler_to_rotation([0.2, -0.1, 0.5])
    np.testing.assert_allclose(attitude_controller(R, np.zeros(3), R, GAINS), 0, atol=1e-15)


def test_attitude_yaw_error():
    tau = attitude_controller(euler_to_rotation([0, 0, 0.1]), np.zeros(3), np.eye(3), GAINS)
    np.testing.assert_allclose(tau, [0, 0, -0.4], atol=1e-3)
    assert tau[2] < 0


@given(st.tuples(small, small, small), st.tuples(small, small, small))
def test_attitude_error_antisymmetric(a, b):
    Ra, Rb = euler_to_rotation(a), euler_to_rotation(b)
    np.testing.assert_allclose(attitude_error(Ra, Rb), -attitude_error(Rb, Ra), atol=1e-12)


def test_detect_compliant_examples():
    assert detect_collision_compliant(np.full(4, 0.19)) is None
    ev = detect_collision_compliant([0.18, 0.18, 0.19, 0.19])
    np.testing.assert_allclose(ev.f_c0, [1, 0, 0], atol=1e-15)
    assert ev.channel == "arm-compression"
    ev = detect_collision_compliant([0.184, 0.19, 0.19, 0.19])
    np.testing.assert_allclose(ev.f_c0, [S, S, 0], atol=1e-15)


def test_detect_compliant_below_threshold():
    assert detect_collision_compliant([0.186, 0.19, 0.19, 0.19], threshold=5e-3) is None


def test_detect_rigid_examples():
    assert detect_collision_rigid([0.1, -0.2, 0.05]) is None
    ev = detect_collision_rigid([-150.0, 0, 0], v=[3.5, 0, 0])
    np.testing.assert_allclose(ev.f_c0, [1, 0, 0])
    assert ev.channel == "acceleration"
    assert detect_collision_rigid([0, 0, 50.0]) is None


def _event(p_c, f_c0):
    return CollisionEvent(0.0, np.array(p_c, float), np.array(f_c0, float), "arm-compression")


def test_recovery_setpoint_examples():
    sp = recovery_setpoint(_event([2.75, 0, 1], [1, 0, 0]), 0.1)
    np.testing.assert_allclose(sp.p_des, [2.65, 0, 1])
    np.testing.assert_array_equal(sp.v_des, 0)
    np.testing.assert_array_equal(sp.a_des, 0)
    sp = recovery_setpoint(_event([2.75, 0, 1], [1, 0, 0]), 0.0)
    np.testing.assert_array_equal(sp.p_des, [2.75, 0, 1])
    sp = recovery_setpoint(_event([0, 0, 0], [0.707, 0.707, 0]), 0.1)
    np.testing.assert_allclose(sp.p_des, [-0.0707, -0.0707, 0])


@given(vec3, vec3)
def test_recovery_setpoint_translation_equivariant(p, shift):
    a = recovery_setpoint(_event(p, [1, 0, 0])).p_des
    b = recovery_setpoint(_event(p + shift, [1, 0, 0])).p_des
    np.testing.assert_allclose(b - a, shift, atol=1e-12)


def test_phase_machine():
    rec = RecoveryParams()
    ps = PhaseState()
    ps = flight_phase_step(ps, 0.0, 1.0, 2.0)
    assert ps.phase == TRACK
    ps = flight_phase_step(ps, 1.0, 1.0, 3.5, event=_event([0, 0, 0], [1, 0, 0]))
    assert ps.phase == RECOVER
    ps = flight_phase_step(ps, 1.5, 0.01, 0.01)
    assert ps.phase == RECOVER
    ps = flight_phase_step(ps, 1.5 + rec.hold + 1e-9, 0.01, 0.01)
    assert ps.phase == HOVER


def test_phase_machine_timeout():
    rec = RecoveryParams(timeout=2.0)
    ps = flight_phase_step(PhaseState(), 0.0, 1.0, 3.0, event=_event([0, 0, 0], [1, 0, 0]),
                           rec=rec)
    ps = flight_phase_step(ps, 2.5, 1.0, 1.0, rec=rec)
    assert ps.phase == FAILED
    with pytest.raises(RecoveryTimeout):
        flight_phase_step(PhaseState(RECOVER, -1.0, 0.0), 2.5, 1.0, 1.0, rec=rec,
                          raise_on_timeout=True)


def test_gains_validation():
    with pytest.raises(ValueError):
        ControllerGains(k_p=(1, 0, 1))


@pytest.mark.parametrize("kind", ["rigid", "compliant"])
def test_detection_latency_after_first_penetration(kind):
    latency = {v: collision_trial(kind, v, c_a=0.43, duration=2.75).latency
               for v in (1.0, 2.0, 3.5)}
    assert all(0.0 <= lat <= 2e-3 for lat in latency.values()), latency
