"""Ten-coordinate Euler-Lagrange model of the compliant quadrotor.

Generalized coordinates ``Q = [x, y, z, phi, theta, psi, l1, l2, l3, l4]``.
The main body is a rigid body with body-only inertia ``I_b``. Each arm is a
point mass ``m_a`` sliding along ``e_j`` at distance ``l_j`` and held by a
Kelvin-Voigt spring-damper with rest length ``L``.

With ``omega = W(eta) eta_dot`` and arm points ``p_j = p + l_j R e_j`` the
arm velocity is linear in ``Q_dot``::

    v_j = p_dot + A_j eta_dot + (R e_j) l_j_dot,   A_j = -l_j R hat(e_j) W

so ``T = 1/2 Q_dot^T M(Q) Q_dot`` and the equations read
``M(Q) Q_ddot + h(Q, Q_dot) = F_ext``. ``h`` collects velocity-product,
gravity and spring terms. The closed forms are assembled in
:func:`_compliant_system`. The test suite checks them against finite
differences of the plain energy functions defined here.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .contact import _eval_contacts
from .errors import GimbalLock, InvalidArmLength, SingularMass
from .geom3 import GIMBAL_MARGIN, _cross, _euler_to_rot, _hat, _rate_bias, _rate_map
from .vehicle import ARM_DIRS, _mixer_matrix, inertia_of

NQ = 10

#: Condition number above which the mass matrix counts as singular.
MASS_COND_LIMIT = 1e10


@dataclass
class CompliantState:
    """Generalized coordinates and rates.

    Attributes
    ----------
    Q : ndarray, shape (10,)
        ``[x, y, z, phi, theta, psi, l1..l4]`` in m, rad, m.
    Qd : ndarray, shape (10,)
        Time derivative of ``Q``.
    """

    Q: np.ndarray
    Qd: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float).copy()
        self.Qd = np.asarray(self.Qd, dtype=float).copy()
        if self.Q.shape != (NQ,) or self.Qd.shape != (NQ,):
            raise ValueError("Q and Qd must have shape (10,)")

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0), eta=(0.0, 0.0, 0.0), L=0.19, v=(0.0, 0.0, 0.0)):
        """State with free-length arms and optional translational velocity."""
        Q = np.concatenate([p, eta, np.full(4, L)])
        Qd = np.zeros(NQ)
        Qd[:3] = v
        return cls(Q, Qd)

    @property
    def p(self):
        return self.Q[:3]

    @property
    def eta(self):
        return self.Q[3:6]

    @property
    def l(self):
        return self.Q[6:]

    @property
    def R(self):
        return _euler_to_rot(self.Q[3], self.Q[4], self.Q[5])

    @property
    def omega(self):
        return _rate_map(self.Q[3], self.Q[4]) @ self.Qd[3:6]


@dataclass
class ArmKinematics:
    """Arm-tip positions and velocities (inertial), shape (4, 3) each."""

    p: np.ndarray
    v: np.ndarray


@njit(cache=True)
def _compliant_system(q, qd, cp, thrust, kp, contact_on):
    """Mass matrix, bias, generalized force and power diagnostics.

    Parameters
    ----------
    q, qd : ndarray, shape (10,)
    cp : ndarray
        Packed :class:`CompliantParams`.
    thrust : ndarray, shape (4,)
        Motor thrusts (N).
    kp : ndarray
        Packed :class:`ContactParams`.
    contact_on : bool

    Returns
    -------
    M : ndarray, shape (10, 10)
    h : ndarray, shape (10,)
    F : ndarray, shape (10,)
    diag : ndarray, shape (11,)
        ``f_n[4], f_fz[4], P_motor, P_damper, P_contact``.
    """
    mb, ma, L, r0, kl, bl = cp[0], cp[1], cp[2], cp[3], cp[4], cp[5]
    Ib = cp[6:9]
    ctau, g = cp[9], cp[11]
    phi, th = q[3], q[4]
    R = _euler_to_rot(phi, th, q[5])
    W = _rate_map(phi, th)
    v = qd[0:3]
    ed = qd[3:6]
    om = W @ ed
    al0 = _rate_bias(phi, th, ed[0], ed[1], ed[2])

    M = np.zeros((NQ, NQ))
    h = np.zeros(NQ)
    mt = mb + 4.0 * ma
    for i in range(3):
        M[i, i] = mt
    Mee = W.T @ (Ib.reshape(3, 1) * W)
    Ibom = Ib * om
    h_eta = W.T @ (Ib * al0 + _cross(om, Ibom))
    h[2] = mt * g
    Mpe = np.zeros((3, 3))
    for j in range(4):
        e = ARM_DIRS[j]
        lj = q[6 + j]
        u = R @ e
        A = -lj * (R @ _hat(e) @ W)
        oxe = _cross(om, e)
        a = R @ (2.0 * qd[6 + j] * oxe + lj * _cross(al0, e) + lj * _cross(om, oxe))
        ag = a.copy()
        ag[2] += g
        Mpe += ma * A
        Mee += ma * (A.T @ A)
        for i in range(3):
            M[i, 6 + j] = ma * u[i]
            M[6 + j, i] = ma * u[i]
            h[i] += ma * a[i]
        M[6 + j, 6 + j] = ma
        h_eta += ma * (A.T @ ag)
        h[6 + j] = ma * (u[0] * ag[0] + u[1] * ag[1] + u[2] * ag[2]) - kl * (L - lj)
    M[0:3, 3:6] = Mpe
    M[3:6, 0:3] = Mpe.T
    M[3:6, 3:6] = 0.5 * (Mee + Mee.T)
    h[3:6] = h_eta

    F = np.zeros(NQ)
    diag = np.zeros(11)
    wrench = _mixer_matrix(q[6:10], ctau) @ thrust
    fz = R[:, 2] * wrench[0]
    F[0:3] += fz
    F[3:6] += W.T @ wrench[1:]
    diag[8] = fz[0] * v[0] + fz[1] * v[1] + fz[2] * v[2] \
        + wrench[1] * om[0] + wrench[2] * om[1] + wrench[3] * om[2]
    for j in range(4):
        F[6 + j] -= bl * qd[6 + j]
        diag[9] -= bl * qd[6 + j] ** 2
    if contact_on:
        out, gs = _eval_contacts(q[0:3], v, R, om, q[6:10], qd[6:10], r0, kp, 1.0)
        for j in range(4):
            fn = out[j, 2]
            ff = out[j, 3]
            if fn == 0.0 and ff == 0.0:
                continue
            e = ARM_DIRS[j]
            Fv = np.array([-fn, 0.0, ff])
            tb = q[6 + j] * _cross(e, R.T @ Fv) + r0 * Fv[0] * gs[j]
            F[0:3] += Fv
            F[3:6] += W.T @ tb
            u = R @ e
            F[6 + j] += u[0] * Fv[0] + u[2] * Fv[2]
            diag[j] = fn
            diag[4 + j] = ff
            diag[10] += out[j, 4]
    return M, h, F, diag


@njit(cache=True)
def _solve_free(M, rhs, free):
    """Accelerations of the free coordinates, zero for the locked ones."""
    idx = np.nonzero(free)[0]
    k = idx.size
    Mf = np.empty((k, k))
    bf = np.empty(k)
    for a in range(k):
        bf[a] = rhs[idx[a]]
        for b in range(k):
            Mf[a, b] = M[idx[a], idx[b]]
    xf = np.linalg.solve(Mf, bf)
    out = np.zeros(rhs.size)
    for a in range(k):
        out[idx[a]] = xf[a]
    return out


@njit(cache=True)
def _compliant_accel(q, qd, cp, thrust, kp, contact_on, free):
    M, h, F, diag = _compliant_system(q, qd, cp, thrust, kp, contact_on)
    return _solve_free(M, F - h, free), M, diag


@njit(cache=True)
def _potential(q, cp):
    mb, ma, L, kl, g = cp[0], cp[1], cp[2], cp[4], cp[11]
    R = _euler_to_rot(q[3], q[4], q[5])
    U = mb * g * q[2]
    for j in range(4):
        zj = q[2] + q[6 + j] * (R[2, :] @ ARM_DIRS[j])
        U += ma * g * zj + 0.5 * kl * (L - q[6 + j]) ** 2
    return U


@njit(cache=True)
def _kinetic(q, qd, cp):
    """Kinetic energy summed body by body (independent of the mass matrix)."""
    mb, ma = cp[0], cp[1]
    Ib = cp[6:9]
    R = _euler_to_rot(q[3], q[4], q[5])
    om = _rate_map(q[3], q[4]) @ qd[3:6]
    v = qd[0:3]
    T = 0.5 * mb * (v @ v) + 0.5 * (om @ (Ib * om))
    for j in range(4):
        e = ARM_DIRS[j]
        vj = v + qd[6 + j] * (R @ e) + q[6 + j] * (R @ _cross(om, e))
        T += 0.5 * ma * (vj @ vj)
    return T


def _check_state(s, p):
    if not isinstance(s, CompliantState):
        s = CompliantState(*s)
    l = s.Q[6:]
    if np.any(l <= 0) or np.any(l > p.L + 1e-9):
        raise InvalidArmLength(f"arm lengths {l} outside (0, {p.L}]")
    if abs(s.Q[4]) >= np.pi / 2 - GIMBAL_MARGIN:
        raise GimbalLock(f"pitch {s.Q[4]:.9f} rad at the rate-map singularity")
    return s


_NO_CONTACT = np.array([1e9, 1.0, 1.5, 0.0, 0.0, 1e-3, 0.0])


def arm_kinematics(s, params):
    """Arm-tip positions ``p + l_j R e_j`` and their inertial velocities."""
    s = _check_state(s, params)
    R, om = s.R, s.omega
    pj = np.zeros((4, 3))
    vj = np.zeros((4, 3))
    for j in range(4):
        e = ARM_DIRS[j]
        pj[j] = s.p + s.Q[6 + j] * (R @ e)
        vj[j] = s.Qd[:3] + s.Qd[6 + j] * (R @ e) + s.Q[6 + j] * (R @ np.cross(om, e))
    return ArmKinematics(pj, vj)


def kinetic_energy(s, params):
    """Kinetic energy (J) of the body and the four arm masses.

    Rotation enters only through ``1/2 omega^T I_b omega``; the arms'
    rotational share is carried by their point-mass velocities.
    """
    s = _check_state(s, params)
    return float(_kinetic(s.Q, s.Qd, params.pack()))


def potential_energy(s, params):
    """Gravity plus spring potential energy (J)."""
    s = _check_state(s, params)
    return float(_potential(s.Q, params.pack()))


def mass_matrix(s, params):
    """Generalized mass matrix ``M(Q)``, shape (10, 10)."""
    s = _check_state(s, params)
    M, _, _, _ = _compliant_system(s.Q, s.Qd, params.pack(), np.zeros(4), _NO_CONTACT, False)
    return M


def bias_and_gravity(s, params):
    """Velocity-product, gravity and spring terms ``h(Q, Q_dot)``."""
    s = _check_state(s, params)
    _, h, _, _ = _compliant_system(s.Q, s.Qd, params.pack(), np.zeros(4), _NO_CONTACT, False)
    return h


def generalized_external_force(s, f, contact, params):
    """Generalized force from motors, arm dampers and wall contact.

    Parameters
    ----------
    s : CompliantState
    f : array_like, shape (4,)
        Motor thrusts (N).
    contact : ContactParams or None
        Wall to evaluate; ``None`` disables contact.
    params : CompliantParams

    Returns
    -------
    ndarray, shape (10,)
    """
    s = _check_state(s, params)
    kp = _NO_CONTACT if contact is None else contact.pack()
    _, _, F, _ = _compliant_system(s.Q, s.Qd, params.pack(), np.asarray(f, dtype=float),
                                   kp, contact is not None)
    return F


@dataclass
class CompliantDerivative:
    """Generalized accelerations with diagnostics.

    Attributes
    ----------
    Qdd : ndarray, shape (10,)
    body_acc : ndarray, shape (3,)
        Main-body acceleration (m/s^2).
    f_n, f_fz : ndarray, shape (4,)
        Per-arm normal and vertical friction force (N).
    power : dict
        ``motor``, ``damper``, ``contact`` power (W).
    """

    Qdd: np.ndarray
    body_acc: np.ndarray
    f_n: np.ndarray
    f_fz: np.ndarray
    power: dict


def compliant_derivative(s, f, wall, params, free=None):
    """Solve ``M Q_ddot = F_ext - h`` for the accelerations.

    Parameters
    ----------
    s : CompliantState
    f : array_like, shape (4,)
        Motor thrusts (N).
    wall : ContactParams or None
    params : CompliantParams
    free : array_like of bool, shape (10,), optional
        Coordinates allowed to move; the rest are held with zero
        acceleration. Defaults to all free.

    Raises
    ------
    SingularMass
        If the (reduced) mass matrix condition number exceeds 1e10.
    """
    s = _check_state(s, params)
    free = np.ones(NQ, dtype=np.bool_) if free is None else np.asarray(free, dtype=np.bool_)
    kp = _NO_CONTACT if wall is None else wall.pack()
    M, h, F, diag = _compliant_system(s.Q, s.Qd, params.pack(), np.asarray(f, dtype=float),
                                      kp, wall is not None)
    idx = np.nonzero(free)[0]
    if np.linalg.cond(M[np.ix_(idx, idx)]) > MASS_COND_LIMIT:
        raise SingularMass("generalized mass matrix is ill-conditioned")
    qdd = _solve_free(M, F - h, free)
    return CompliantDerivative(qdd, qdd[:3].copy(), diag[:4].copy(), diag[4:8].copy(),
                               {"motor": diag[8], "damper": diag[9], "contact": diag[10]})


def total_inertia(s, params):
    """Total inertia about the body centre at the state's arm lengths."""
    return inertia_of(s.Q[6:], params)
