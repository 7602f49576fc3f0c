"""Newton-Euler dynamics of the rigid quadrotor, with optional wall contact.

Contact acts on the four cages with arm lengths frozen at ``L``. The body
wrench of each cage force ``F`` is ``J_c^T F`` for the contact-point
velocity Jacobian ``J_c``: force ``F`` and body torque
``L e_j x (R^T F) + r0 F_X g_j`` (see :mod:`quadimpact.contact` for
``g_j``). This form makes the contact power equal ``F . v_c`` exactly.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .contact import _eval_contacts
from .geom3 import _cross, _hat
from .vehicle import ARM_DIRS, _mixer_matrix


@dataclass
class RigidState:
    """Position, velocity (inertial), attitude and body angular velocity."""

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).copy()
        self.v = np.asarray(self.v, dtype=float).copy()
        self.R = np.asarray(self.R, dtype=float).copy()
        self.omega = np.asarray(self.omega, dtype=float).copy()

    def pack(self):
        """Flat vector ``[p, v, R (row-major), omega]`` of length 18."""
        return np.concatenate([self.p, self.v, self.R.ravel(), self.omega])

    @classmethod
    def unpack(cls, y):
        return cls(y[0:3], y[3:6], y[6:15].reshape(3, 3), y[15:18])


@dataclass
class RigidDerivative:
    """Time derivatives of a :class:`RigidState`."""

    p_dot: np.ndarray
    v_dot: np.ndarray
    R_dot: np.ndarray
    omega_dot: np.ndarray


@njit(cache=True)
def _rigid_contact_wrench(p, v, R, om, rp, kp):
    """Total contact force, body torque, contact power and per-arm forces."""
    L, r0, share = rp[4], rp[8], rp[9]
    lv = np.full(4, L)
    out, gs = _eval_contacts(p, v, R, om, lv, np.zeros(4), r0, kp, share)
    f = np.zeros(3)
    tau = np.zeros(3)
    power = 0.0
    for j in range(4):
        fn = out[j, 2]
        ff = out[j, 3]
        if fn == 0.0 and ff == 0.0:
            continue
        Fv = np.array([-fn, 0.0, ff])
        f += Fv
        tau += L * _cross(ARM_DIRS[j], R.T @ Fv) + r0 * Fv[0] * gs[j]
        power += out[j, 4]
    return f, tau, power, out


@njit(cache=True)
def _rigid_rhs(y, rp, thrust, kp, contact_on, slider):
    """Derivative of ``[p, v, R, omega]`` plus diagnostics.

    Returns
    -------
    dy : ndarray, shape (18,)
    diag : ndarray, shape (11,)
        ``f_n[4], f_fz[4], P_motor, 0, P_contact`` (the damper slot is kept
        for a common layout with the compliant model).
    """
    m, L, ctau, g = rp[0], rp[4], rp[5], rp[7]
    I = rp[1:4]
    p = y[0:3]
    v = y[3:6]
    R = y[6:15].copy().reshape(3, 3)
    om = y[15:18]
    w = _mixer_matrix(np.full(4, L), ctau) @ thrust
    fth = R[:, 2] * w[0]
    tau = w[1:].copy()
    diag = np.zeros(11)
    fext = np.zeros(3)
    if contact_on:
        fext, text, pc, out = _rigid_contact_wrench(p, v, R, om, rp, kp)
        tau += text
        diag[10] = pc
        for j in range(4):
            diag[j] = out[j, 2]
            diag[4 + j] = out[j, 3]
    diag[8] = fth @ v + w[1:] @ om
    dy = np.zeros(18)
    vdot = (fth + fext) / m
    vdot[2] -= g
    omdot = (tau - _cross(om, I * om)) / I
    Rdot = R @ _hat(om)
    if slider:
        vdot[1] = 0.0
        vdot[2] = 0.0
        omdot[:] = 0.0
        Rdot[:, :] = 0.0
    dy[0:3] = v
    dy[3:6] = vdot
    dy[6:15] = Rdot.ravel()
    dy[15:18] = omdot
    return dy, diag


@njit(cache=True)
def _rigid_energy(y, rp):
    m, g = rp[0], rp[7]
    I = rp[1:4]
    v = y[3:6]
    om = y[15:18]
    return 0.5 * m * (v @ v) + 0.5 * (om @ (I * om)), m * g * y[2]


def rigid_derivative(s, w, p, f_ext=None, tau_ext=None):
    """Newton-Euler derivative of a rigid state.

    Parameters
    ----------
    s : RigidState
    w : BodyWrench
        Total thrust (N) and body torque (N m).
    p : RigidParams
    f_ext : array_like, shape (3,), optional
        External inertial force (N).
    tau_ext : array_like, shape (3,), optional
        External body torque (N m).

    Returns
    -------
    RigidDerivative
    """
    f_ext = np.zeros(3) if f_ext is None else np.asarray(f_ext, dtype=float)
    tau_ext = np.zeros(3) if tau_ext is None else np.asarray(tau_ext, dtype=float)
    I = np.asarray(p.inertia, dtype=float)
    v_dot = (w[0] * s.R[:, 2] + f_ext) / p.m - np.array([0.0, 0.0, p.g])
    om = s.omega
    om_dot = (np.asarray(w[1], dtype=float) + tau_ext - np.cross(om, I * om)) / I
    return RigidDerivative(s.v.copy(), v_dot, s.R @ _hat(om), om_dot)


def rigid_contact_wrench(s, p, wall):
    """External force (inertial) and torque (body) from cage contacts.

    Parameters
    ----------
    s : RigidState
    p : RigidParams
    wall : ContactParams

    Returns
    -------
    f_ext, tau_ext : ndarray, shape (3,)
    """
    f, tau, _, _ = _rigid_contact_wrench(s.p, s.v, s.R, s.omega, p.pack(), wall.pack())
    return f, tau


def rigid_energy(s, p):
    """Kinetic and gravitational potential energy (J)."""
    T, U = _rigid_energy(s.pack(), p.pack())
    return float(T), float(U)
