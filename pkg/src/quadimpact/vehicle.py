"""Vehicle parameter sets, thrust mixers, allocation and arm-dependent inertia.

Both robots use the X layout. Motor ``j`` sits at ``l_j * e_j`` in the body
frame with the arm directions in :data:`ARM_DIRS`. Motors 1 and 3 spin one
way and motors 2 and 4 the other, which sets the yaw-torque signs in the
mixer.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import InvalidArmLength, SingularMixer

_S2 = np.sqrt(0.5)

#: Unit arm directions e_1..e_4 in the body frame (rows).
ARM_DIRS = np.array([
    [_S2, _S2, 0.0],
    [_S2, -_S2, 0.0],
    [-_S2, -_S2, 0.0],
    [-_S2, _S2, 0.0],
])

#: Total inertia diagonals (kg m^2) of the compliant and rigid airframes.
COMPLIANT_TOTAL_INERTIA = (0.0100, 0.0116, 0.0197)
RIGID_INERTIA = (0.0092, 0.0107, 0.0179)

#: Condition-number bound above which the mixer counts as singular.
MIXER_COND_LIMIT = 1e12


def arm_inertia(l, m_a):
    """Inertia of four point-mass arms at lengths ``l`` about the body centre."""
    l = np.asarray(l, dtype=float)
    out = np.zeros((3, 3))
    for j in range(4):
        e = ARM_DIRS[j]
        out += m_a * l[j] ** 2 * (np.eye(3) - np.outer(e, e))
    return out


@dataclass(frozen=True)
class RigidParams:
    """Single rigid body quadrotor.

    Attributes
    ----------
    m : float
        Total mass (kg).
    inertia : tuple of float
        Diagonal inertia ``(I_xx, I_yy, I_zz)`` (kg m^2).
    L : float
        Arm length from centre to motor (m).
    c_tau : float
        Yaw moment coefficient (m), torque per unit thrust.
    f_max : float
        Per-motor thrust limit (N).
    g : float
        Gravitational acceleration (m/s^2).
    r0 : float
        Cage radius around each motor (m).
    cage_share : float
        Fraction of the surface stiffness and damping carried by each cage
        contact. The default 0.5 lumps the two front cages of a frontal hit
        into one surface contact.
    """

    m: float = 1.244
    inertia: tuple = RIGID_INERTIA
    L: float = 0.19
    c_tau: float = 0.016
    f_max: float = 8.0
    g: float = 9.81
    r0: float = 0.11
    cage_share: float = 0.5

    def __post_init__(self):
        if self.m <= 0 or min(self.inertia) <= 0 or self.L <= 0 or self.r0 < 0:
            raise ValueError("masses, inertias and lengths must be positive")
        if not 0.0 < self.cage_share <= 1.0:
            raise ValueError("cage_share must lie in (0, 1]")

    @property
    def inertia_matrix(self):
        return np.diag(np.asarray(self.inertia, dtype=float))

    def pack(self):
        """Flat float array consumed by the numba kernels."""
        return np.array([self.m, *self.inertia, self.L, self.c_tau, self.f_max,
                         self.g, self.r0, self.cage_share], dtype=float)

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class CompliantParams:
    """Five-body compliant quadrotor: main body plus four prismatic arms.

    Attributes
    ----------
    m_b, m_a : float
        Main-body and per-arm mass (kg).
    L : float
        Free arm length, also the outer travel stop (m).
    r0 : float
        Cage radius (m).
    k_l, b_l : float
        Arm spring constant (N/m) and damping (N s/m).
    inertia_b : tuple of float
        Body-only inertia diagonal (kg m^2), arms excluded.
    c_tau, f_max, g : float
        As in :class:`RigidParams`.
    l_min : float
        Inner travel stop (m).
    travel_stops : bool
        Enforce the stops at ``l_min`` and ``L``. Disable to study the bare
        spring-mass model.
    """

    m_b: float = 1.234
    m_a: float = 0.05
    L: float = 0.19
    r0: float = 0.11
    k_l: float = 5e3
    b_l: float = 90.0
    inertia_b: tuple = (0.00639, 0.00799, 0.01248)
    c_tau: float = 0.016
    f_max: float = 8.0
    g: float = 9.81
    l_min: float = 0.12
    travel_stops: bool = True

    def __post_init__(self):
        if self.m_b <= 0 or self.m_a <= 0 or self.L <= 0 or self.r0 < 0:
            raise ValueError("masses and lengths must be positive")
        if self.k_l < 0 or self.b_l < 0:
            raise ValueError("k_l and b_l must be non-negative")
        if min(self.inertia_b) <= 0:
            raise ValueError(f"body inertia must be positive definite, got {self.inertia_b}")
        if not 0 < self.l_min < self.L:
            raise ValueError("l_min must lie in (0, L)")

    @classmethod
    def from_total_inertia(cls, total=COMPLIANT_TOTAL_INERTIA, **kw):
        """Back-solve the body-only inertia from the airframe's total inertia.

        The arms at free length contribute ``sum_j m_a L^2 (I - e_j e_j^T)``.

        Raises
        ------
        ValueError
            If the arm contribution exceeds ``total`` on any axis.
        """
        base = cls(**kw)
        arms = np.diag(arm_inertia(np.full(4, base.L), base.m_a))
        body = tuple(float(x) for x in np.asarray(total, dtype=float) - arms)
        return replace(base, inertia_b=body)

    @property
    def arm_dirs(self):
        """Unit arm directions e_1..e_4 (rows) in the body frame."""
        return ARM_DIRS.copy()

    @property
    def mass(self):
        """Total mass ``m_b + 4 m_a``."""
        return self.m_b + 4.0 * self.m_a

    @property
    def inertia_b_matrix(self):
        return np.diag(np.asarray(self.inertia_b, dtype=float))

    def pack(self):
        """Flat float array consumed by the numba kernels."""
        l_max = self.L if self.travel_stops else np.inf
        l_min = self.l_min if self.travel_stops else -np.inf
        return np.array([self.m_b, self.m_a, self.L, self.r0, self.k_l, self.b_l,
                         *self.inertia_b, self.c_tau, self.f_max, self.g,
                         l_min, l_max], dtype=float)

    def rigid_equivalent(self):
        """Rigid parameters with matching mass and free-length inertia."""
        inertia = np.diag(inertia_of(np.full(4, self.L), self))
        return RigidParams(m=self.mass, inertia=tuple(float(x) for x in inertia),
                           L=self.L, c_tau=self.c_tau, f_max=self.f_max, g=self.g,
                           r0=self.r0, cage_share=1.0)

    def replace(self, **kw):
        return replace(self, **kw)


class BodyWrench(NamedTuple):
    """Total thrust along body z (N) and body torque (N m)."""

    f_T: float
    tau: np.ndarray


class Allocation(NamedTuple):
    """Motor thrusts from :func:`allocate` and whether clamping occurred."""

    thrusts: np.ndarray
    saturated: bool


@njit(cache=True)
def _mixer_matrix(levers, c_tau):
    A = np.empty((4, 4))
    s = np.sqrt(0.5)
    a = levers * s
    A[0, :] = 1.0
    A[1, 0], A[1, 1], A[1, 2], A[1, 3] = a[0], -a[1], -a[2], a[3]
    A[2, 0], A[2, 1], A[2, 2], A[2, 3] = -a[0], -a[1], a[2], a[3]
    A[3, 0], A[3, 1], A[3, 2], A[3, 3] = -c_tau, c_tau, -c_tau, c_tau
    return A


@njit(cache=True)
def _allocate(w, levers, c_tau, f_max):
    """Motor thrusts for wrench ``w = [f_T, tau]`` with thrust-first clamping.

    When a motor leaves ``[0, f_max]`` the torque part is scaled down
    uniformly until all motors fit, keeping the total thrust. Anything still
    out of range is clipped.
    """
    A = _mixer_matrix(levers, c_tau)
    w0 = np.zeros(4)
    w0[0] = w[0]
    f0 = np.linalg.solve(A, w0)
    f = np.linalg.solve(A, w)
    ft = f - f0
    sat = False
    for i in range(4):
        if f[i] < 0.0 or f[i] > f_max:
            sat = True
    if sat:
        s = 1.0
        for i in range(4):
            if ft[i] > 0.0:
                room = f_max - f0[i]
                s = min(s, max(room, 0.0) / ft[i])
            elif ft[i] < 0.0:
                room = f0[i]
                s = min(s, max(room, 0.0) / -ft[i])
        for i in range(4):
            f[i] = min(f_max, max(0.0, f0[i] + s * ft[i]))
    return f, sat


def _levers(l, L=None):
    l = np.asarray(l, dtype=float)
    if l.shape != (4,):
        raise ValueError(f"expected 4 arm lengths, got shape {l.shape}")
    if np.any(l <= 0) or (L is not None and np.any(l > L + 1e-9)):
        raise InvalidArmLength(f"arm lengths {l} outside (0, {L}]")
    return l


def _thrusts(f):
    f = np.asarray(f, dtype=float)
    if f.shape != (4,):
        raise ValueError(f"expected 4 motor thrusts, got shape {f.shape}")
    return f


def mixer_rigid(f, p):
    """Body wrench from four motor thrusts on the rigid airframe.

    Parameters
    ----------
    f : array_like, shape (4,)
        Motor thrusts (N).
    p : RigidParams

    Returns
    -------
    BodyWrench
    """
    w = _mixer_matrix(np.full(4, p.L), p.c_tau) @ _thrusts(f)
    return BodyWrench(float(w[0]), w[1:])


def mixer_compliant(f, l, p):
    """Body wrench with per-arm levers ``l_j / sqrt(2)``.

    Raises
    ------
    InvalidArmLength
        If any ``l_j <= 0`` or ``l_j > L``.
    """
    w = _mixer_matrix(_levers(l, p.L), p.c_tau) @ _thrusts(f)
    return BodyWrench(float(w[0]), w[1:])


def allocate(w, levers, c_tau, f_max=np.inf):
    """Invert the mixer for a desired wrench.

    Parameters
    ----------
    w : BodyWrench
        Desired total thrust and torque.
    levers : array_like, shape (4,)
        Arm lengths (m); the mixer uses ``levers / sqrt(2)``.
    c_tau : float
        Yaw moment coefficient (m).
    f_max : float
        Per-motor limit (N).

    Returns
    -------
    Allocation
        Thrusts clamped to ``[0, f_max]`` and the saturation flag.

    Raises
    ------
    SingularMixer
        If the mixer condition number exceeds ``1e12``.
    """
    levers = np.asarray(levers, dtype=float)
    A = _mixer_matrix(levers, c_tau)
    if not np.isfinite(np.linalg.cond(A)) or np.linalg.cond(A) > MIXER_COND_LIMIT:
        raise SingularMixer(f"mixer is singular for levers {levers}")
    vec = np.concatenate([[w[0]], np.asarray(w[1], dtype=float)])
    f, sat = _allocate(vec, levers, float(c_tau), float(f_max))
    return Allocation(f, bool(sat))


def inertia_of(l, p):
    """Total inertia about the body centre for arm lengths ``l``.

    Each arm is a point mass ``m_a`` at ``l_j e_j``. Zero lengths are
    accepted here since the formula stays well defined.

    Raises
    ------
    InvalidArmLength
        If any ``l_j < 0`` or ``l_j > L``.
    """
    l = np.asarray(l, dtype=float)
    if l.shape != (4,) or np.any(l < 0) or np.any(l > p.L + 1e-9):
        raise InvalidArmLength(f"arm lengths {l} outside [0, {p.L}]")
    return p.inertia_b_matrix + arm_inertia(l, p.m_a)
