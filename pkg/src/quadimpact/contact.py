"""Wall contact: cage contact point, Hunt-Crossley normal force, friction.

The wall is the plane ``x = D`` with the robot approaching from ``x < D``.
Each arm carries a circular cage of radius ``r0`` in the body x-y plane,
centred on the motor. The contact point of arm ``j`` sits ahead of the arm
tip along ``e_X`` by ``r0 * o_j(R)``:

* ``"formula"``: ``o_j = (R e_j) . e_X``, the projection of the cage
  radius along the arm.
* ``"geometric"``: ``o_j = |P (R^T e_X)|``, the in-plane extent of the cage
  circle towards the wall.

Both variants give ``d o_j / dt = g_j . omega`` with ``g_j`` from
:func:`_offset_geometry`. That keeps the contact-point velocity the exact
time derivative of the contact-point position, so the force law and its
generalized forces share one Jacobian.
"""

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .geom3 import _cross, _euler_to_rot
from .vehicle import ARM_DIRS

GEOMETRY_MODES = ("formula", "geometric")


@dataclass(frozen=True)
class ContactParams:
    """Surface parameters of the wall.

    Attributes
    ----------
    D : float
        Wall position along ``e_X`` (m).
    k_c : float
        Stiffness (N/m^n).
    n : float
        Force exponent.
    c_a : float
        Damping factor; ``b_c = 1.5 * c_a * k_c``.
    mu : float
        Kinetic friction coefficient.
    v_eps : float
        Tangential regularization speed (m/s).
    geometry : str
        Contact-point offset rule, ``"formula"`` or ``"geometric"``.
    """

    D: float = 1.0
    k_c: float = 2e5
    n: float = 1.5
    c_a: float = 0.3
    mu: float = 0.8
    v_eps: float = 1e-3
    geometry: str = "formula"

    def __post_init__(self):
        if self.k_c <= 0:
            raise ValueError("k_c must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.c_a < 0:
            raise ValueError("c_a must be non-negative")
        if self.mu < 0 or self.v_eps <= 0:
            raise ValueError("mu must be >= 0 and v_eps > 0")
        if self.geometry not in GEOMETRY_MODES:
            raise ValueError(f"geometry must be one of {GEOMETRY_MODES}")

    @property
    def b_c(self):
        """Hunt-Crossley damping ``1.5 c_a k_c``."""
        return 1.5 * self.c_a * self.k_c

    def pack(self):
        """Flat float array consumed by the numba kernels."""
        return np.array([self.D, self.k_c, self.n, self.b_c, self.mu, self.v_eps,
                         float(GEOMETRY_MODES.index(self.geometry))])

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass
class ContactResult:
    """Per-arm contact quantities, arrays indexed by arm.

    Attributes
    ----------
    delta, delta_dot : ndarray, shape (4,)
        Penetration (m) and its rate (m/s); negative means clear of the wall.
    p_c, v_c : ndarray, shape (4, 3)
        Contact point and its velocity (inertial).
    f_n : ndarray, shape (4,)
        Normal force magnitude (N), acting along ``-e_X`` on the robot.
    f_f : ndarray, shape (4, 3)
        Friction force (N, inertial), along ``e_Z`` only.
    power : ndarray, shape (4,)
        Power delivered to the robot by each contact (W).
    """

    delta: np.ndarray
    delta_dot: np.ndarray
    p_c: np.ndarray
    v_c: np.ndarray
    f_n: np.ndarray
    f_f: np.ndarray
    power: np.ndarray

    @property
    def force(self):
        """Total contact force on each arm, shape (4, 3)."""
        out = self.f_f.copy()
        out[:, 0] -= self.f_n
        return out

    @property
    def active(self):
        return self.delta >= 0.0


@njit(cache=True)
def _offset_geometry(R, e, mode):
    """Cage offset factor ``o`` and its rate gradient ``g`` (``do/dt = g.omega``)."""
    r = R[0, :].copy()
    if mode == 0:
        return r[0] * e[0] + r[1] * e[1] + r[2] * e[2], _cross(e, r)
    s = np.sqrt(r[0] ** 2 + r[1] ** 2)
    g = np.zeros(3)
    if s > 1e-12:
        ex = np.array([1.0, 0.0, 0.0])
        ey = np.array([0.0, 1.0, 0.0])
        g = (r[0] * _cross(ex, r) + r[1] * _cross(ey, r)) / s
    return s, g


@njit(cache=True)
def _hc_normal(delta, delta_dot, k, n, b):
    if delta < 0.0:
        return 0.0
    dn = delta ** n
    return max(0.0, dn * (k + b * delta_dot))


@njit(cache=True)
def _friction_scale(f_n, v_t, mu, v_eps):
    """Friction along the tangential axis for scalar tangential speed ``v_t``."""
    return -mu * f_n * v_t / max(abs(v_t), v_eps)


@njit(cache=True)
def _arm_contact(p, v, R, omega, l, ld, e, r0, mode):
    """Contact point, its velocity and the offset rate gradient for one arm."""
    u = R @ e
    ve = R @ _cross(omega, e)
    o, g = _offset_geometry(R, e, mode)
    pc = p + l * u
    pc[0] += r0 * o
    vc = v + ld * u + l * ve
    vc[0] += r0 * (g[0] * omega[0] + g[1] * omega[1] + g[2] * omega[2])
    return pc, vc, g


@njit(cache=True)
def _eval_contacts(p, v, R, omega, l, ld, r0, kp, share):
    """Forces on all four arms.

    Returns
    -------
    out : ndarray, shape (4, 6)
        Columns ``delta, delta_dot, f_n, f_fz, power, v_cz``.
    gs : ndarray, shape (4, 3)
        Offset rate gradients.
    """
    out = np.zeros((4, 6))
    gs = np.zeros((4, 3))
    mode = int(kp[6])
    for j in range(4):
        pc, vc, g = _arm_contact(p, v, R, omega, l[j], ld[j], ARM_DIRS[j], r0, mode)
        d = pc[0] - kp[0]
        fn = _hc_normal(d, vc[0], share * kp[1], kp[2], share * kp[3])
        ff = _friction_scale(fn, vc[2], kp[4], kp[5])
        out[j, 0] = d
        out[j, 1] = vc[0]
        out[j, 2] = fn
        out[j, 3] = ff
        out[j, 4] = -fn * vc[0] + ff * vc[2]
        out[j, 5] = vc[2]
        gs[j] = g
    return out, gs


def contact_point_velocity(j, p_j, v_j, R, omega, r0, geometry="formula"):
    """Contact point and contact-point velocity of arm ``j`` (0-based).

    Parameters
    ----------
    j : int
        Arm index 0..3.
    p_j, v_j : array_like, shape (3,)
        Arm-tip position and velocity (inertial).
    R : array_like, shape (3, 3)
        Body attitude.
    omega : array_like, shape (3,)
        Body angular velocity (body frame).
    r0 : float
        Cage radius (m).
    geometry : str
        ``"formula"`` or ``"geometric"``.

    Returns
    -------
    p_c, v_c : ndarray, shape (3,)
    """
    R = np.asarray(R, dtype=float)
    omega = np.asarray(omega, dtype=float)
    o, g = _offset_geometry(R, ARM_DIRS[j], GEOMETRY_MODES.index(geometry))
    p_c = np.array(p_j, dtype=float)
    v_c = np.array(v_j, dtype=float)
    p_c[0] += r0 * o
    v_c[0] += r0 * float(g @ omega)
    return p_c, v_c


def velocity_components(v_c):
    """Split a contact velocity into wall-normal (X) and vertical (Z) parts.

    The lateral Y component is dropped; tangential motion is vertical only.
    """
    v_c = np.asarray(v_c, dtype=float)
    return np.array([v_c[0], 0.0, 0.0]), np.array([0.0, 0.0, v_c[2]])


def normal_force(delta, delta_dot, cp):
    """Hunt-Crossley normal force magnitude (N).

    ``f_n = max(0, delta^n (k_c + b_c * delta_dot))`` for ``delta >= 0``,
    zero otherwise. ``delta_dot > 0`` means the penetration deepens, so the
    damping term always removes energy.
    """
    return float(_hc_normal(float(delta), float(delta_dot), cp.k_c, cp.n, cp.b_c))


def friction_force(f_n, v_t, mu, v_eps=1e-3):
    """Regularized kinetic friction opposing the tangential velocity.

    Returns ``-mu f_n v_t / max(|v_t|, v_eps)``.
    """
    v_t = np.asarray(v_t, dtype=float)
    return -mu * f_n * v_t / max(float(np.linalg.norm(v_t)), v_eps)


def contact_power(f_n, f_f, v_c):
    """Power delivered to the robot by each contact and in total (W).

    Parameters
    ----------
    f_n : array_like, shape (k,)
    f_f : array_like, shape (k, 3)
    v_c : array_like, shape (k, 3)

    Returns
    -------
    per_arm : ndarray, shape (k,)
    total : float
    """
    f_n = np.atleast_1d(np.asarray(f_n, dtype=float))
    f_f = np.atleast_2d(np.asarray(f_f, dtype=float))
    v_c = np.atleast_2d(np.asarray(v_c, dtype=float))
    per = f_f[:, 2] * v_c[:, 2] - f_n * v_c[:, 0]
    return per, float(per.sum())


def evaluate_contacts(p, v, R, omega, l, l_dot, r0, cp, share=1.0):
    """Contact results for all four arms.

    Parameters
    ----------
    p, v : array_like, shape (3,)
        Body position and velocity (inertial).
    R : array_like, shape (3, 3)
    omega : array_like, shape (3,)
    l, l_dot : array_like, shape (4,)
        Arm lengths and rates.
    r0 : float
    cp : ContactParams
    share : float
        Scale applied to stiffness and damping for each contact.

    Returns
    -------
    ContactResult
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    R = np.asarray(R, dtype=float)
    omega = np.asarray(omega, dtype=float)
    l = np.asarray(l, dtype=float)
    l_dot = np.asarray(l_dot, dtype=float)
    out, _ = _eval_contacts(p, v, R, omega, l, l_dot, float(r0), cp.pack(), float(share))
    mode = GEOMETRY_MODES.index(cp.geometry)
    p_c = np.zeros((4, 3))
    v_c = np.zeros((4, 3))
    for j in range(4):
        p_c[j], v_c[j], _ = _arm_contact(p, v, R, omega, l[j], l_dot[j], ARM_DIRS[j],
                                         float(r0), mode)
    f_f = np.zeros((4, 3))
    f_f[:, 2] = out[:, 3]
    return ContactResult(delta=out[:, 0].copy(), delta_dot=out[:, 1].copy(), p_c=p_c,
                         v_c=v_c, f_n=out[:, 2].copy(), f_f=f_f, power=out[:, 4].copy())


def detect_active_arms(state, D, params, geometry="formula"):
    """Arms whose cage contact point has reached the wall plane.

    Parameters
    ----------
    state : CompliantState or RigidState
    D : float
        Wall position (m).
    params : CompliantParams or RigidParams
    geometry : str

    Returns
    -------
    set of int
        0-based arm indices with ``delta >= 0``.
    """
    if hasattr(state, "Q"):
        q = np.asarray(state.Q, dtype=float)
        p, R, l = q[:3], _euler_to_rot(q[3], q[4], q[5]), q[6:]
    else:
        p, R, l = np.asarray(state.p, dtype=float), np.asarray(state.R, dtype=float), \
            np.full(4, params.L)
    mode = GEOMETRY_MODES.index(geometry)
    active = set()
    for j in range(4):
        o, _ = _offset_geometry(R, ARM_DIRS[j], mode)
        x = p[0] + l[j] * (R @ ARM_DIRS[j])[0] + params.r0 * o
        if x - D >= 0.0:
            active.add(j)
    return active


__all__ = [
    "ContactParams", "ContactResult", "contact_point_velocity", "velocity_components",
    "normal_force", "friction_force", "contact_power", "evaluate_contacts",
    "detect_active_arms", "GEOMETRY_MODES",
]
