"""Independent energy functions of the compliant model for finite-difference
checks. Nothing is shared with the package kernels except the parameter
values. Functions accept a batch of states, shape (n, 10), or one state."""

import numpy as np

S = 1 / np.sqrt(2)
ARMS = np.array([[S, S, 0], [S, -S, 0], [-S, -S, 0], [-S, S, 0]])


def rotation(eta):
    """ZYX product of elementary rotations, Rz(psi) Ry(theta) Rx(phi)."""
    eta = np.asarray(eta, dtype=float)
    phi, theta, psi = eta[..., 0], eta[..., 1], eta[..., 2]
    one, zero = np.ones_like(phi), np.zeros_like(phi)
    c, s = np.cos, np.sin
    rx = np.stack([np.stack([one, zero, zero], -1),
                   np.stack([zero, c(phi), -s(phi)], -1),
                   np.stack([zero, s(phi), c(phi)], -1)], -2)
    ry = np.stack([np.stack([c(theta), zero, s(theta)], -1),
                   np.stack([zero, one, zero], -1),
                   np.stack([-s(theta), zero, c(theta)], -1)], -2)
    rz = np.stack([np.stack([c(psi), -s(psi), zero], -1),
                   np.stack([s(psi), c(psi), zero], -1),
                   np.stack([zero, zero, one], -1)], -2)
    return rz @ ry @ rx


def body_rate(q, qd):
    """Body angular velocity of ZYX angles: omega = W(eta) eta_dot."""
    phi, theta = q[..., 3], q[..., 4]
    dphi, dtheta, dpsi = qd[..., 3], qd[..., 4], qd[..., 5]
    return np.stack([dphi - np.sin(theta) * dpsi,
                     np.cos(phi) * dtheta + np.sin(phi) * np.cos(theta) * dpsi,
                     -np.sin(phi) * dtheta + np.cos(phi) * np.cos(theta) * dpsi], -1)


def kinetic(q, qd, p):
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    R = rotation(q[..., 3:6])
    om = body_rate(q, qd)
    v = qd[..., :3]
    T = 0.5 * p.m_b * np.sum(v * v, -1) + 0.5 * np.sum(om * om * np.asarray(p.inertia_b), -1)
    for j in range(4):
        u = R @ ARMS[j]
        w = np.einsum("...ik,...k->...i", R, np.cross(om, ARMS[j]))
        vj = v + qd[..., 6 + j, None] * u + q[..., 6 + j, None] * w
        T = T + 0.5 * p.m_a * np.sum(vj * vj, -1)
    return T


def potential(q, p):
    q = np.asarray(q, dtype=float)
    R = rotation(q[..., 3:6])
    U = p.m_b * p.g * q[..., 2] + 0.5 * p.k_l * np.sum((p.L - q[..., 6:]) ** 2, -1)
    for j in range(4):
        U = U + p.m_a * p.g * (q[..., 2] + q[..., 6 + j] * (R @ ARMS[j])[..., 2])
    return U


def contact_x(q, j, r0):
    """Inertial x of arm j's cage contact point."""
    q = np.asarray(q, dtype=float)
    u = rotation(q[..., 3:6]) @ ARMS[j]
    return q[..., 0] + (q[..., 6 + j] + r0) * u[..., 0]


def arm_z(q, j):
    q = np.asarray(q, dtype=float)
    return q[..., 2] + q[..., 6 + j] * (rotation(q[..., 3:6]) @ ARMS[j])[..., 2]


def _central(f, q, eps):
    """Central-difference gradient of scalar f at q, shape (10,)."""
    E = eps * np.eye(10)
    return (f(q + E) - f(q - E)) / (2 * eps)


def mass_matrix_fd(q, p):
    """Second difference of T, quadratic in Q_dot, exact up to rounding."""
    n = 10
    E = np.eye(n)
    Ti = kinetic(np.tile(q, (n, 1)), E, p)
    pairs = E[:, None, :] + E[None, :, :]
    Tij = kinetic(np.broadcast_to(q, (n, n, n)), pairs, p)
    M = Tij - Ti[:, None] - Ti[None, :]
    M[np.diag_indices(n)] = 2 * Ti
    return M


def momentum(q, qd, p):
    """dT/dQ_dot by a unit central difference (exact for quadratic T)."""
    E = np.eye(10)
    Q = np.broadcast_to(q, (10, 10))
    return 0.5 * (kinetic(Q, qd + E, p) - kinetic(Q, qd - E, p))


def bias_fd(q, qd, p, eps=1e-6):
    """h = dM/dt Q_dot - dT/dQ + dU/dQ by central differences."""
    mdot = (momentum(q + eps * qd, qd, p) - momentum(q - eps * qd, qd, p)) / (2 * eps)
    dT = _central(lambda x: kinetic(x, np.broadcast_to(qd, x.shape), p), q, eps)
    dU = _central(lambda x: potential(x, p), q, eps)
    return mdot - dT + dU


def gradient(f, q, eps=1e-6):
    return _central(f, q, eps)


def random_state(rng, L=0.19, l_min=0.12, pitch=1.4):
    q = np.concatenate([rng.uniform(-1, 1, 3),
                        [rng.uniform(-np.pi, np.pi), rng.uniform(-pitch, pitch),
                         rng.uniform(-np.pi, np.pi)],
                        rng.uniform(l_min, L, 4)])
    qd = np.concatenate([rng.normal(0, 2, 3), rng.normal(0, 3, 3), rng.normal(0, 0.5, 4)])
    return q, qd
