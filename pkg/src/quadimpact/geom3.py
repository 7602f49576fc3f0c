"""Frame conventions and SO(3) utilities.

Inertial frame is North-West-Up, body frame is Forward-Left-Up. Euler
angles follow the ZYX (yaw-pitch-roll) convention, ``R = Rz(psi) Ry(theta)
Rx(phi)``, and ``R`` maps body-frame vectors into the inertial frame.

The ``_``-prefixed functions are numba kernels shared by the dynamics and
control modules. The public wrappers validate inputs and raise package
errors.
"""

import numpy as np
from numba import njit

from .errors import GimbalLock

#: Pitch margin from +-pi/2 where the rate map is considered singular.
GIMBAL_MARGIN = 1e-6

E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])


@njit(cache=True)
def _hat(a):
    m = np.zeros((3, 3))
    m[0, 1] = -a[2]
    m[0, 2] = a[1]
    m[1, 0] = a[2]
    m[1, 2] = -a[0]
    m[2, 0] = -a[1]
    m[2, 1] = a[0]
    return m


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _euler_to_rot(phi, theta, psi):
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    R = np.empty((3, 3))
    R[0, 0] = cp * ct
    R[0, 1] = cp * st * sf - sp * cf
    R[0, 2] = cp * st * cf + sp * sf
    R[1, 0] = sp * ct
    R[1, 1] = sp * st * sf + cp * cf
    R[1, 2] = sp * st * cf - cp * sf
    R[2, 0] = -st
    R[2, 1] = ct * sf
    R[2, 2] = ct * cf
    return R


@njit(cache=True)
def _rate_map(phi, theta):
    """Body rate map W with omega = W(eta) @ eta_dot."""
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    W = np.zeros((3, 3))
    W[0, 0] = 1.0
    W[0, 2] = -st
    W[1, 1] = cf
    W[1, 2] = sf * ct
    W[2, 1] = -sf
    W[2, 2] = cf * ct
    return W


@njit(cache=True)
def _rate_bias(phi, theta, dphi, dtheta, dpsi):
    """Velocity-product term dW/dt @ eta_dot of the body angular acceleration."""
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty(3)
    out[0] = -dpsi * dtheta * ct
    out[1] = -dtheta * dphi * sf + dpsi * (dphi * cf * ct - dtheta * sf * st)
    out[2] = -dtheta * dphi * cf + dpsi * (-dphi * sf * ct - dtheta * cf * st)
    return out


@njit(cache=True)
def _rot_to_euler(R):
    theta = -np.arcsin(min(1.0, max(-1.0, R[2, 0])))
    phi = np.arctan2(R[2, 1], R[2, 2])
    psi = np.arctan2(R[1, 0], R[0, 0])
    return phi, theta, psi


@njit(cache=True)
def _orthonormalize(R):
    """Nearest rotation (polar factor) and the Frobenius drift removed."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0.0:
        U[:, 2] = -U[:, 2]
        Q = U @ Vt
    return Q, np.sqrt(np.sum((Q - R) ** 2))


def _vec3(a):
    a = np.asarray(a, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def hat(a):
    """Skew-symmetric matrix of a 3-vector.

    Parameters
    ----------
    a : array_like, shape (3,)

    Returns
    -------
    ndarray, shape (3, 3)
        Matrix with ``hat(a) @ b == cross(a, b)``.
    """
    return _hat(_vec3(a))


def vee(m):
    """Inverse of :func:`hat` for a skew-symmetric matrix."""
    m = np.asarray(m, dtype=float)
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def euler_to_rotation(eta):
    """Rotation matrix from ZYX Euler angles ``(roll, pitch, yaw)``."""
    phi, theta, psi = _vec3(eta)
    return _euler_to_rot(phi, theta, psi)


def rotation_to_euler(R):
    """ZYX Euler angles ``(roll, pitch, yaw)`` of a rotation matrix.

    Raises
    ------
    GimbalLock
        If ``|R[2, 0]| > 1 - 1e-9``, where roll and yaw are not separable.
    """
    R = np.asarray(R, dtype=float)
    if abs(R[2, 0]) > 1.0 - 1e-9:
        raise GimbalLock(f"pitch at +-pi/2 (R[2,0] = {R[2, 0]:.12f})")
    return np.array(_rot_to_euler(R))


def _check_pitch(theta):
    if abs(theta) >= np.pi / 2 - GIMBAL_MARGIN:
        raise GimbalLock(f"pitch {theta:.9f} rad within {GIMBAL_MARGIN} of +-pi/2")


def euler_rate_map(eta):
    """Matrix ``W`` mapping Euler-angle rates to body angular velocity.

    Parameters
    ----------
    eta : array_like, shape (3,)
        Roll, pitch, yaw in rad.

    Returns
    -------
    ndarray, shape (3, 3)
        ``omega = W @ eta_dot`` with omega in the body frame.
    """
    phi, theta, _ = _vec3(eta)
    _check_pitch(theta)
    return _rate_map(phi, theta)


def euler_rate_bias(eta, eta_dot):
    """Term ``dW/dt @ eta_dot`` so that ``omega_dot = W @ eta_ddot + bias``."""
    phi, theta, _ = _vec3(eta)
    _check_pitch(theta)
    d = _vec3(eta_dot)
    return _rate_bias(phi, theta, d[0], d[1], d[2])


def rotation_derivative(R, omega):
    """Time derivative ``R @ hat(omega)`` for body-frame angular velocity."""
    return np.asarray(R, dtype=float) @ _hat(_vec3(omega))


def orthonormalize(R):
    """Project a near-rotation onto SO(3).

    Returns
    -------
    Q : ndarray, shape (3, 3)
        Closest rotation matrix in the Frobenius norm.
    drift : float
        Frobenius norm of the correction.
    """
    return _orthonormalize(np.asarray(R, dtype=float))
