"""Geometric tracking controller, collision detection and recovery logic.

The position loop turns a tracking error into a desired force and attitude.
The attitude loop is a quaternion-error PD law. After a collision the
setpoint is moved back from the contact estimate along the contact
direction. A small phase machine then tracks settling.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .errors import DegenerateThrust, RecoveryTimeout
from .geom3 import _cross
from .vehicle import ARM_DIRS

TRACK, RECOVER, HOVER, FAILED = 0, 1, 2, 3
PHASE_NAMES = ("TrackTrajectory", "Recover", "Hover", "RecoveryTimeout")

CHANNEL_ARM = "arm-compression"
CHANNEL_ACC = "acceleration"


@dataclass(frozen=True)
class ControllerGains:
    """Per-axis gains of the position and attitude loops.

    Attributes
    ----------
    k_p : tuple
        Position gains (1/s^2).
    k_v : tuple
        Velocity gains (1/s).
    k_R : tuple
        Attitude gains (N m per rad of error).
    k_w : tuple
        Angular-rate gains (N m s/rad).
    """

    k_p: tuple = (12.0, 12.0, 12.0)
    k_v: tuple = (6.0, 6.0, 6.0)
    k_R: tuple = (10.0, 10.0, 4.0)
    k_w: tuple = (0.6, 0.6, 0.5)

    def __post_init__(self):
        for name in ("k_p", "k_v", "k_R", "k_w"):
            vals = getattr(self, name)
            if len(vals) != 3 or min(vals) <= 0:
                raise ValueError(f"{name} must be three positive values")

    def pack(self):
        return np.array([*self.k_p, *self.k_v, *self.k_R, *self.k_w], dtype=float)

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class RecoveryParams:
    """Collision detection and recovery settings.

    Attributes
    ----------
    arm_threshold : float
        Arm compression that counts as a collision (m).
    acc_threshold : float
        Horizontal acceleration that counts as a collision (m/s^2).
    setback : float
        Distance of the recovery setpoint behind the contact estimate (m).
    pos_tol, speed_tol, hold : float
        Settling band (m, m/s) and how long it must hold (s).
    timeout : float
        Time after detection allowed for settling (s).
    """

    arm_threshold: float = 3e-3
    acc_threshold: float = 3.0 * 9.81
    setback: float = 0.1
    pos_tol: float = 0.05
    speed_tol: float = 0.1
    hold: float = 0.5
    timeout: float = 10.0

    def pack(self):
        return np.array([self.arm_threshold, self.acc_threshold, self.setback,
                         self.pos_tol, self.speed_tol, self.hold, self.timeout])


@dataclass
class Setpoint:
    """Desired position, velocity, acceleration (inertial) and yaw."""

    p_des: np.ndarray
    v_des: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_des: np.ndarray = field(default_factory=lambda: np.zeros(3))
    psi_des: float = 0.0


class ControlOutput(NamedTuple):
    """Desired total thrust (N), attitude and body torque (N m)."""

    f_T_des: float
    R_des: np.ndarray
    tau: np.ndarray


@dataclass
class CollisionEvent:
    """A detected collision.

    Attributes
    ----------
    t : float
        Detection time (s).
    p_c : ndarray, shape (3,)
        Reference position for the recovery setpoint: the body position at
        detection.
    f_c0 : ndarray, shape (3,)
        Unit contact direction, from the robot towards the obstacle.
    channel : str
        ``"arm-compression"`` or ``"acceleration"``.
    contact_point : ndarray or None
        Estimated cage contact point, when available.
    """

    t: float
    p_c: np.ndarray
    f_c0: np.ndarray
    channel: str
    contact_point: Optional[np.ndarray] = None


@njit(cache=True)
def _position_ctrl(p, v, R, pd, vd, ad, psi, gains, m, g):
    """Desired force, thrust and attitude. ``ok`` is False if ``|F| < 0.1 m g``."""
    F = np.empty(3)
    for i in range(3):
        F[i] = m * (ad[i] + gains[i] * (pd[i] - p[i]) + gains[3 + i] * (vd[i] - v[i]))
    F[2] += m * g
    nF = np.sqrt(F @ F)
    ok = nF >= 0.1 * m * g
    b3 = np.array([0.0, 0.0, 1.0])
    if ok:
        b3 = F / nF
    xc = np.array([np.cos(psi), np.sin(psi), 0.0])
    b2 = _cross(b3, xc)
    nb2 = np.sqrt(b2 @ b2)
    if nb2 < 1e-9:
        b2 = np.array([-np.sin(psi), np.cos(psi), 0.0])
    else:
        b2 = b2 / nb2
    b1 = _cross(b2, b3)
    Rd = np.empty((3, 3))
    Rd[:, 0] = b1
    Rd[:, 1] = b2
    Rd[:, 2] = b3
    fT = F[0] * R[0, 2] + F[1] * R[1, 2] + F[2] * R[2, 2]
    return max(fT, 0.0), Rd, F, ok


@njit(cache=True)
def _quat_vec(R):
    """Quaternion ``(w, x, y, z)`` of a rotation matrix, with ``w >= 0``."""
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    q = np.empty(4)
    if tr > 0.0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q[0] = 0.25 * s
        q[1] = (R[2, 1] - R[1, 2]) / s
        q[2] = (R[0, 2] - R[2, 0]) / s
        q[3] = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q[0] = (R[2, 1] - R[1, 2]) / s
        q[1] = 0.25 * s
        q[2] = (R[0, 1] + R[1, 0]) / s
        q[3] = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q[0] = (R[0, 2] - R[2, 0]) / s
        q[1] = (R[0, 1] + R[1, 0]) / s
        q[2] = 0.25 * s
        q[3] = (R[1, 2] + R[2, 1]) / s
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q[0] = (R[1, 0] - R[0, 1]) / s
        q[1] = (R[0, 2] + R[2, 0]) / s
        q[2] = (R[1, 2] + R[2, 1]) / s
        q[3] = 0.25 * s
    if q[0] < 0.0:
        q = -q
    return q


@njit(cache=True)
def _attitude_error(R, Rd):
    q = _quat_vec(Rd.T @ R)
    return 2.0 * q[1:4]


@njit(cache=True)
def _attitude_ctrl(R, om, Rd, gains):
    eR = _attitude_error(R, Rd)
    tau = np.empty(3)
    for i in range(3):
        tau[i] = -gains[6 + i] * eR[i] - gains[9 + i] * om[i]
    return tau


@njit(cache=True)
def _phase_step(phase, t, err, speed, detected, settle_start, t_event, rec):
    """Advance the flight phase. Returns ``(phase, settle_start)``."""
    if phase == TRACK:
        if detected:
            return RECOVER, -1.0
        return TRACK, -1.0
    if phase == RECOVER:
        if err < rec[3] and speed < rec[4]:
            if settle_start < 0.0:
                settle_start = t
            if t - settle_start >= rec[5] - 1e-12:
                return HOVER, settle_start
        else:
            settle_start = -1.0
        if t - t_event > rec[6]:
            return FAILED, settle_start
        return RECOVER, settle_start
    return phase, settle_start


def _gains_array(gains):
    return gains.pack() if isinstance(gains, ControllerGains) else np.asarray(gains, float)


def position_controller(p, v, R, sp, gains, mass, g=9.81):
    """Desired total thrust and attitude for a setpoint.

    Parameters
    ----------
    p, v : array_like, shape (3,)
    R : array_like, shape (3, 3)
    sp : Setpoint
    gains : ControllerGains
    mass : float
    g : float

    Returns
    -------
    f_T_des : float
        Desired force projected on the current body z axis (N).
    R_des : ndarray, shape (3, 3)

    Raises
    ------
    DegenerateThrust
        If the desired force is below ``0.1 m g``.
    """
    fT, Rd, F, ok = _position_ctrl(np.asarray(p, float), np.asarray(v, float),
                                   np.asarray(R, float), np.asarray(sp.p_des, float),
                                   np.asarray(sp.v_des, float), np.asarray(sp.a_des, float),
                                   float(sp.psi_des), _gains_array(gains), float(mass), float(g))
    if not ok:
        raise DegenerateThrust(f"desired force {F} below 0.1 m g")
    return fT, Rd


def desired_force(p, v, sp, gains, mass, g=9.81):
    """Desired force vector of the position loop (N)."""
    _, _, F, _ = _position_ctrl(np.asarray(p, float), np.asarray(v, float), np.eye(3),
                                np.asarray(sp.p_des, float), np.asarray(sp.v_des, float),
                                np.asarray(sp.a_des, float), float(sp.psi_des),
                                _gains_array(gains), float(mass), float(g))
    return F


def attitude_error(R, R_des):
    """Quaternion-vector attitude error ``2 sign(w) vec(q(R_des^T R))``."""
    return _attitude_error(np.asarray(R, float), np.asarray(R_des, float))


def attitude_controller(R, omega, R_des, gains):
    """Body torque ``-k_R e_R - k_w omega`` (N m)."""
    return _attitude_ctrl(np.asarray(R, float), np.asarray(omega, float),
                          np.asarray(R_des, float), _gains_array(gains))


def controller(p, v, R, omega, sp, gains, mass, g=9.81):
    """Full controller step returning :class:`ControlOutput`."""
    fT, Rd = position_controller(p, v, R, sp, gains, mass, g)
    return ControlOutput(fT, Rd, attitude_controller(R, omega, Rd, gains))


def _horizontal_unit(vec):
    h = np.array([vec[0], vec[1], 0.0])
    n = np.linalg.norm(h)
    if n < 1e-12:
        return None
    return h / n


def detect_collision_compliant(l, threshold=5e-3, L=0.19, R=None, p=None, t=0.0):
    """Collision event from arm compression, or ``None``.

    Parameters
    ----------
    l : array_like, shape (4,)
        Arm lengths (m).
    threshold : float
        Compression ``L - l_j`` that triggers detection (m).
    L : float
        Free arm length (m).
    R : array_like, shape (3, 3), optional
        Attitude; identity if omitted.
    p : array_like, shape (3,), optional
        Body position used as the recovery reference; origin if omitted.
    t : float
        Time stamp for the event.
    """
    l = np.asarray(l, dtype=float)
    R = np.eye(3) if R is None else np.asarray(R, dtype=float)
    p = np.zeros(3) if p is None else np.asarray(p, dtype=float)
    hit = (L - l) > threshold
    if not np.any(hit):
        return None
    d = _horizontal_unit((R @ ARM_DIRS[hit].T).sum(axis=1))
    if d is None:
        return None
    tips = [p + l[j] * (R @ ARM_DIRS[j]) for j in np.nonzero(hit)[0]]
    return CollisionEvent(t, p.copy(), d, CHANNEL_ARM, np.mean(tips, axis=0))


def detect_collision_rigid(a, threshold=3.0 * 9.81, v=None, p=None, t=0.0):
    """Collision event from horizontal body acceleration, or ``None``.

    The direction is the horizontal velocity at impact when ``v`` is given,
    otherwise the direction opposite to the acceleration.
    """
    a = np.asarray(a, dtype=float)
    if np.hypot(a[0], a[1]) <= threshold:
        return None
    d = _horizontal_unit(v) if v is not None else None
    if d is None:
        d = _horizontal_unit(-a)
    p = np.zeros(3) if p is None else np.asarray(p, dtype=float)
    return CollisionEvent(t, p.copy(), d, CHANNEL_ACC)


def recovery_setpoint(ev, delta=0.1, psi_des=0.0):
    """Hover setpoint ``p_c - delta f_c0`` with zero velocity."""
    return Setpoint(np.asarray(ev.p_c, float) - delta * np.asarray(ev.f_c0, float),
                    np.zeros(3), np.zeros(3), psi_des)


@dataclass
class PhaseState:
    """Flight phase bookkeeping for :func:`flight_phase_step`."""

    phase: int = TRACK
    settle_start: float = -1.0
    t_event: float = -1.0


def flight_phase_step(ps, t, pos_error, speed, event=None, rec=RecoveryParams(),
                      raise_on_timeout=False):
    """Advance the flight phase machine by one step.

    Track until a collision event, then Recover until the position error and
    speed stay inside the settling band for ``rec.hold`` seconds, then
    Hover. Missing the band for ``rec.timeout`` seconds after the event
    gives the RecoveryTimeout phase.

    Returns
    -------
    PhaseState
        Updated copy.

    Raises
    ------
    RecoveryTimeout
        Only when ``raise_on_timeout`` is set.
    """
    t_event = ps.t_event
    if ps.phase == TRACK and event is not None:
        t_event = t
    phase, settle = _phase_step(ps.phase, float(t), float(pos_error), float(speed),
                                event is not None, ps.settle_start, t_event, rec.pack())
    out = PhaseState(int(phase), float(settle), float(t_event))
    if out.phase == FAILED and raise_on_timeout:
        raise RecoveryTimeout(f"not settled {rec.timeout} s after collision at t={t_event}")
    return out
