"""Fixed-step RK4 integration, scenario runners and trajectory logs.

Both robot models are advanced by numba loops that integrate the state
together with three work integrals (motor, arm damper, contact). Energy
audits therefore close to integrator accuracy. Arm travel stops are
resolved after each step by inelastic impulses. The energy they remove is
accumulated as stop work.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .contact import ContactParams, _offset_geometry
from .control import (FAILED, HOVER, TRACK, ControllerGains, RecoveryParams, _attitude_ctrl,
                      _phase_step, _position_ctrl)
from .dynamics_compliant import _compliant_accel, _compliant_system, _kinetic, _potential
from .dynamics_rigid import _rigid_energy, _rigid_rhs
from .errors import ConfigError, GimbalLock, NumericalBlowup, OutOfRange
from .geom3 import _euler_to_rot, _orthonormalize, _rate_map, _rot_to_euler
from .vehicle import ARM_DIRS, CompliantParams, RigidParams, _allocate

BLOWUP_LIMIT = 1e6
#: Pitch margin (rad) at which a compliant run stops with a gimbal-lock status.
GIMBAL_STOP = 1e-3

# Log column layout shared by both kernels.
C_T, C_P, C_V, C_ETA, C_OM, C_L, C_LD = 0, 1, 4, 7, 10, 13, 17
C_FN, C_FF, C_A = 21, 25, 29
C_WALL, C_CONTACT, C_PHASE, C_THR = 32, 33, 34, 35
C_KE, C_PE, C_UC, C_WM, C_WD, C_WC, C_WS = 39, 40, 41, 42, 43, 44, 45
C_PD, C_VD = 46, 49
C_PC, C_PDMP, C_DMAX, C_PFR, C_DEFL = 52, 53, 54, 55, 56
N_COLS = 57

_XYZ = ("x", "y", "z")
COLUMNS = (
    ["t_s"] + [f"p{a}_m" for a in _XYZ] + [f"v{a}_mps" for a in _XYZ]
    + ["roll_rad", "pitch_rad", "yaw_rad"] + [f"w{a}_radps" for a in _XYZ]
    + [f"l{j}_m" for j in range(1, 5)] + [f"ldot{j}_mps" for j in range(1, 5)]
    + [f"fn{j}_N" for j in range(1, 5)] + [f"ff{j}_N" for j in range(1, 5)]
    + [f"a{a}_mps2" for a in _XYZ]
    + ["wall_flag", "contact_flag", "phase"] + [f"thrust{j}_N" for j in range(1, 5)]
    + ["T_J", "U_J", "Uc_J", "Wmotor_J", "Wdamper_J", "Wcontact_J", "Wstop_J"]
    + [f"pd{a}_m" for a in _XYZ] + [f"vd{a}_mps" for a in _XYZ]
    + ["Pcontact_W", "Pdamper_W", "delta_max_m", "Pfriction_W", "defl_max_m"]
)
assert len(COLUMNS) == N_COLS
ARM_COLUMNS = set(COLUMNS[C_L:C_L + 8]) | {"defl_max_m"}

# Info vector layout returned by the kernels.
I_STATUS, I_T_CONTACT, I_T_DETECT, I_PC, I_FC, I_CPT = 0, 1, 2, 3, 6, 9
I_T_HOVER, I_DRIFT, I_STEPS, I_SAT, I_T_FAIL = 12, 13, 14, 15, 16
N_INFO = 17
STATUS_OK, STATUS_BLOWUP, STATUS_GIMBAL = 0, 1, 2

REF_SEGMENTS, REF_CIRCLE = 0, 1


@njit(cache=True)
def _reference(t, kind, ref):
    """Desired position, velocity, acceleration and yaw at time ``t``.

    ``kind == 0``: rows ``[t0, p0(3), v0(3), a(3), psi]`` of
    constant-acceleration segments. ``kind == 1``: one row
    ``[t_start, centre(3), radius, period, psi]``, a counter-clockwise
    circle starting on its +x point.
    """
    p = np.zeros(3)
    v = np.zeros(3)
    a = np.zeros(3)
    if kind == 0:
        k = max(np.searchsorted(ref[:, 0], t, side="right") - 1, 0)
        tau = max(t - ref[k, 0], 0.0)
        for i in range(3):
            a[i] = ref[k, 7 + i]
            v[i] = ref[k, 4 + i] + a[i] * tau
            p[i] = ref[k, 1 + i] + ref[k, 4 + i] * tau + 0.5 * a[i] * tau * tau
        return p, v, a, ref[k, 10]
    r = ref[0, 4]
    w = 2.0 * np.pi / ref[0, 5]
    ang = w * max(t - ref[0, 0], 0.0)
    moving = 1.0 if t >= ref[0, 0] else 0.0
    p[0] = ref[0, 1] + r * np.cos(ang)
    p[1] = ref[0, 2] + r * np.sin(ang)
    p[2] = ref[0, 3]
    v[0] = -moving * r * w * np.sin(ang)
    v[1] = moving * r * w * np.cos(ang)
    a[0] = -moving * r * w * w * np.cos(ang)
    a[1] = -moving * r * w * w * np.sin(ang)
    return p, v, a, ref[0, 6]


@njit(cache=True)
def _contact_energy(delta, kp, share):
    uc = 0.0
    dmax = -1e9
    for j in range(4):
        d = delta[j]
        dmax = max(dmax, d)
        if d > 0.0:
            uc += share * kp[1] * d ** (kp[2] + 1.0) / (kp[2] + 1.0)
    return uc, dmax


@njit(cache=True)
def _deltas(p, R, l, r0, kp):
    out = np.empty(4)
    mode = int(kp[6])
    for j in range(4):
        e = ARM_DIRS[j]
        o, _ = _offset_geometry(R, e, mode)
        out[j] = p[0] + l[j] * (R[0, :] @ e) + r0 * o - kp[0]
    return out


@njit(cache=True)
def _comp_dy(y, cp, thrust, kp, contact_on, free):
    qdd, M, diag = _compliant_accel(y[0:10], y[10:20], cp, thrust, kp, contact_on, free)
    dy = np.empty(23)
    dy[0:10] = y[10:20]
    dy[10:20] = qdd
    dy[20] = diag[8]
    dy[21] = diag[9]
    dy[22] = diag[10]
    return dy, diag


@njit(cache=True)
def _apply_stops(y, cp, kp, free):
    """Clamp arm lengths to the stops with momentum-consistent impulses.

    Returns the change in ``T + U`` caused by the clamp (<= 0 in practice).
    """
    lmin, lmax = cp[12], cp[13]
    hit = False
    for j in range(4):
        if y[6 + j] > lmax or y[6 + j] < lmin:
            hit = True
    if not hit:
        return 0.0
    e0 = _kinetic(y[0:10], y[10:20], cp) + _potential(y[0:10], cp)
    for _ in range(4):
        moved = False
        for j in range(4):
            c = 6 + j
            if not free[c]:
                continue
            if y[c] > lmax:
                y[c] = lmax
            elif y[c] < lmin:
                y[c] = lmin
            else:
                continue
            ld = y[10 + c]
            if (y[c] >= lmax and ld > 0.0) or (y[c] <= lmin and ld < 0.0):
                M, _, _, _ = _compliant_system(y[0:10], y[10:20], cp, np.zeros(4), kp, False)
                unit = np.zeros(10)
                unit[c] = 1.0
                idx = np.nonzero(free)[0]
                k = idx.size
                Mf = np.empty((k, k))
                bf = np.empty(k)
                for a in range(k):
                    bf[a] = unit[idx[a]]
                    for b in range(k):
                        Mf[a, b] = M[idx[a], idx[b]]
                x = np.linalg.solve(Mf, bf)
                xc = 0.0
                for a in range(k):
                    if idx[a] == c:
                        xc = x[a]
                lam = ld / xc
                for a in range(k):
                    y[10 + idx[a]] -= x[a] * lam
                y[10 + c] = 0.0
                moved = True
        if not moved:
            break
    e1 = _kinetic(y[0:10], y[10:20], cp) + _potential(y[0:10], cp)
    return e1 - e0


@njit(cache=True)
def _controller_thrust(t, p, v, R, om, levers, phase, sp_p, gains, ctrl, ref_kind, ref,
                       setp):
    """Motor thrusts from the controller. Writes the active setpoint to ``setp``."""
    m, g, ctau, fmax = ctrl[0], ctrl[1], ctrl[2], ctrl[3]
    if phase == TRACK:
        pd, vd, ad, psi = _reference(t, ref_kind, ref)
    else:
        pd = sp_p.copy()
        vd = np.zeros(3)
        ad = np.zeros(3)
        psi = ctrl[4]
    setp[0:3] = pd
    setp[3:6] = vd
    fT, Rd, F, ok = _position_ctrl(p, v, R, pd, vd, ad, psi, gains, m, g)
    tau = _attitude_ctrl(R, om, Rd, gains)
    w = np.empty(4)
    w[0] = fT
    w[1:4] = tau
    return _allocate(w, levers, ctau, fmax)


@njit(cache=True)
def _run_compliant(q0, qd0, cp, kp, contact_on, free, dt, n_steps, log_every, ctrl_on,
                   gains, ctrl, rec, ref_kind, ref, defl_tol, post_hover, t_limit_after_event,
                   thrust0):
    n_rows = n_steps // log_every + 2
    log = np.zeros((n_rows, N_COLS))
    info = np.zeros(N_INFO)
    info[I_T_CONTACT] = -1.0
    info[I_T_DETECT] = -1.0
    info[I_T_HOVER] = -1.0
    info[I_T_FAIL] = -1.0
    y = np.zeros(23)
    y[0:10] = q0
    y[10:20] = qd0
    ws = 0.0
    L, r0 = cp[2], cp[3]
    thrust = thrust0.copy()
    setp = np.zeros(6)
    sp_p = np.zeros(3)
    phase = TRACK
    settle = -1.0
    t_event = -1.0
    row = 0
    steps = 0
    for i in range(n_steps + 1):
        t = i * dt
        q = y[0:10]
        qd = y[10:20]
        if abs(q[4]) >= np.pi / 2 - GIMBAL_STOP:
            info[I_STATUS] = STATUS_GIMBAL
            break
        R = _euler_to_rot(q[3], q[4], q[5])
        om = _rate_map(q[3], q[4]) @ qd[3:6]
        if ctrl_on:
            levers = np.minimum(q[6:10], L)
            thrust, sat = _controller_thrust(t, q[0:3], qd[0:3], R, om, levers, phase, sp_p,
                                             gains, ctrl, ref_kind, ref, setp)
            if sat:
                info[I_SAT] += 1.0
        k1, diag = _comp_dy(y, cp, thrust, kp, contact_on, free)
        defl = 0.0
        for j in range(4):
            defl = max(defl, L - q[6 + j])
        wall = diag[0] + diag[1] + diag[2] + diag[3] > 0.0
        if wall and info[I_T_CONTACT] < 0.0:
            info[I_T_CONTACT] = t
        if ctrl_on:
            if phase == TRACK and defl > rec[0]:
                dirx = 0.0
                diry = 0.0
                cx = np.zeros(3)
                nhit = 0
                for j in range(4):
                    if L - q[6 + j] > rec[0]:
                        u = R @ ARM_DIRS[j]
                        dirx += u[0]
                        diry += u[1]
                        cx += q[0:3] + q[6 + j] * u
                        nhit += 1
                nd = np.sqrt(dirx * dirx + diry * diry)
                if nd > 1e-12:
                    info[I_T_DETECT] = t
                    t_event = t
                    info[I_PC:I_PC + 3] = q[0:3]
                    info[I_FC] = dirx / nd
                    info[I_FC + 1] = diry / nd
                    info[I_FC + 2] = 0.0
                    info[I_CPT:I_CPT + 3] = cx / nhit
                    sp_p = q[0:3] - rec[2] * info[I_FC:I_FC + 3]
                    phase, settle = _phase_step(phase, t, 1e9, 1e9, True, settle, t_event, rec)
            elif phase != TRACK:
                err = np.sqrt(np.sum((q[0:3] - sp_p) ** 2))
                spd = np.sqrt(np.sum(qd[0:3] ** 2))
                old = phase
                phase, settle = _phase_step(phase, t, err, spd, False, settle, t_event, rec)
                if phase == HOVER and old != HOVER:
                    info[I_T_HOVER] = t
                if phase == FAILED and old != FAILED:
                    info[I_T_FAIL] = t
        if i % log_every == 0 or i == n_steps:
            r = log[row]
            r[C_T] = t
            r[C_P:C_P + 3] = q[0:3]
            r[C_V:C_V + 3] = qd[0:3]
            r[C_ETA:C_ETA + 3] = q[3:6]
            r[C_OM:C_OM + 3] = om
            r[C_L:C_L + 4] = q[6:10]
            r[C_LD:C_LD + 4] = qd[6:10]
            r[C_FN:C_FN + 4] = diag[0:4]
            r[C_FF:C_FF + 4] = diag[4:8]
            r[C_A:C_A + 3] = k1[10:13]
            r[C_WALL] = 1.0 if wall else 0.0
            r[C_CONTACT] = 1.0 if (wall or defl > defl_tol) else 0.0
            r[C_PHASE] = phase
            r[C_THR:C_THR + 4] = thrust
            r[C_KE] = _kinetic(q, qd, cp)
            r[C_PE] = _potential(q, cp)
            dl = _deltas(q[0:3], R, q[6:10], r0, kp)
            uc, dmax = _contact_energy(dl, kp, 1.0)
            r[C_UC] = uc if contact_on else 0.0
            r[C_DMAX] = dmax
            r[C_WM] = y[20]
            r[C_WD] = y[21]
            r[C_WC] = y[22]
            r[C_WS] = ws
            r[C_PD:C_PD + 6] = setp
            r[C_PC] = diag[10]
            r[C_PDMP] = diag[9]
            r[C_DEFL] = defl
            pf = 0.0
            if contact_on:
                for j in range(4):
                    if diag[4 + j] != 0.0:
                        vcz = qd[2] + qd[6 + j] * (R[2, :] @ ARM_DIRS[j]) \
                            + q[6 + j] * (R[2, :] @ np.cross(om, ARM_DIRS[j]))
                        pf += diag[4 + j] * vcz
            r[C_PFR] = pf
            row += 1
        if i == n_steps:
            break
        if ctrl_on and post_hover >= 0.0 and phase == HOVER and t - info[I_T_HOVER] >= post_hover:
            break
        if ctrl_on and phase == FAILED:
            break
        if ctrl_on and t_event >= 0.0 and t - t_event > t_limit_after_event:
            break
        k2, _ = _comp_dy(y + 0.5 * dt * k1, cp, thrust, kp, contact_on, free)
        k3, _ = _comp_dy(y + 0.5 * dt * k2, cp, thrust, kp, contact_on, free)
        k4, _ = _comp_dy(y + dt * k3, cp, thrust, kp, contact_on, free)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ws += _apply_stops(y, cp, kp, free)
        steps += 1
        if abs(y[4]) >= np.pi / 2 - GIMBAL_STOP:
            info[I_STATUS] = STATUS_GIMBAL
            break
        if np.max(np.abs(y)) > BLOWUP_LIMIT or not np.all(np.isfinite(y)):
            info[I_STATUS] = STATUS_BLOWUP
            break
    info[I_STEPS] = steps
    return log[:row], info


@njit(cache=True)
def _rig_dy(y, rp, thrust, kp, contact_on, slider):
    d, diag = _rigid_rhs(y[0:18], rp, thrust, kp, contact_on, slider)
    dy = np.empty(21)
    dy[0:18] = d
    dy[18] = diag[8]
    dy[19] = 0.0
    dy[20] = diag[10]
    return dy, diag


@njit(cache=True)
def _run_rigid(s0, rp, kp, contact_on, slider, dt, n_steps, log_every, ctrl_on, gains, ctrl,
               rec, ref_kind, ref, post_hover, t_limit_after_event, thrust0):
    n_rows = n_steps // log_every + 2
    log = np.zeros((n_rows, N_COLS))
    info = np.zeros(N_INFO)
    info[I_T_CONTACT] = -1.0
    info[I_T_DETECT] = -1.0
    info[I_T_HOVER] = -1.0
    info[I_T_FAIL] = -1.0
    y = np.zeros(21)
    y[0:18] = s0
    L, r0, share = rp[4], rp[8], rp[9]
    levers = np.full(4, L)
    thrust = thrust0.copy()
    setp = np.zeros(6)
    sp_p = np.zeros(3)
    phase = TRACK
    settle = -1.0
    t_event = -1.0
    row = 0
    steps = 0
    drift = 0.0
    for i in range(n_steps + 1):
        t = i * dt
        R = y[6:15].copy().reshape(3, 3)
        om = y[15:18]
        if ctrl_on:
            thrust, sat = _controller_thrust(t, y[0:3], y[3:6], R, om, levers, phase, sp_p,
                                             gains, ctrl, ref_kind, ref, setp)
            if sat:
                info[I_SAT] += 1.0
        k1, diag = _rig_dy(y, rp, thrust, kp, contact_on, slider)
        wall = diag[0] + diag[1] + diag[2] + diag[3] > 0.0
        if wall and info[I_T_CONTACT] < 0.0:
            info[I_T_CONTACT] = t
        if ctrl_on:
            ah = np.sqrt(k1[3] ** 2 + k1[4] ** 2)
            if phase == TRACK and ah > rec[1]:
                vh = np.sqrt(y[3] ** 2 + y[4] ** 2)
                dx = y[3] / vh if vh > 1e-9 else -k1[3] / ah
                dyy = y[4] / vh if vh > 1e-9 else -k1[4] / ah
                info[I_T_DETECT] = t
                t_event = t
                info[I_PC:I_PC + 3] = y[0:3]
                info[I_FC] = dx
                info[I_FC + 1] = dyy
                info[I_FC + 2] = 0.0
                info[I_CPT:I_CPT + 3] = y[0:3]
                sp_p = y[0:3] - rec[2] * info[I_FC:I_FC + 3]
                phase, settle = _phase_step(phase, t, 1e9, 1e9, True, settle, t_event, rec)
            elif phase != TRACK:
                err = np.sqrt(np.sum((y[0:3] - sp_p) ** 2))
                spd = np.sqrt(np.sum(y[3:6] ** 2))
                old = phase
                phase, settle = _phase_step(phase, t, err, spd, False, settle, t_event, rec)
                if phase == HOVER and old != HOVER:
                    info[I_T_HOVER] = t
                if phase == FAILED and old != FAILED:
                    info[I_T_FAIL] = t
        if i % log_every == 0 or i == n_steps:
            r = log[row]
            r[C_T] = t
            r[C_P:C_P + 3] = y[0:3]
            r[C_V:C_V + 3] = y[3:6]
            phi, th, psi = _rot_to_euler(R)
            r[C_ETA] = phi
            r[C_ETA + 1] = th
            r[C_ETA + 2] = psi
            r[C_OM:C_OM + 3] = om
            r[C_L:C_L + 4] = L
            r[C_FN:C_FN + 4] = diag[0:4]
            r[C_FF:C_FF + 4] = diag[4:8]
            r[C_A:C_A + 3] = k1[3:6]
            r[C_WALL] = 1.0 if wall else 0.0
            r[C_CONTACT] = r[C_WALL]
            r[C_PHASE] = phase
            r[C_THR:C_THR + 4] = thrust
            T, U = _rigid_energy(y, rp)
            r[C_KE] = T
            r[C_PE] = U
            dl = _deltas(y[0:3], R, levers, r0, kp)
            uc, dmax = _contact_energy(dl, kp, share)
            r[C_UC] = uc if contact_on else 0.0
            r[C_DMAX] = dmax
            r[C_WM] = y[18]
            r[C_WD] = 0.0
            r[C_WC] = y[20]
            r[C_PD:C_PD + 6] = setp
            r[C_PC] = diag[10]
            pf = 0.0
            if contact_on:
                for j in range(4):
                    if diag[4 + j] != 0.0:
                        vcz = y[5] + L * (R[2, :] @ np.cross(om, ARM_DIRS[j]))
                        pf += diag[4 + j] * vcz
            r[C_PFR] = pf
            row += 1
        if i == n_steps:
            break
        if ctrl_on and post_hover >= 0.0 and phase == HOVER and t - info[I_T_HOVER] >= post_hover:
            break
        if ctrl_on and phase == FAILED:
            break
        if ctrl_on and t_event >= 0.0 and t - t_event > t_limit_after_event:
            break
        k2, _ = _rig_dy(y + 0.5 * dt * k1, rp, thrust, kp, contact_on, slider)
        k3, _ = _rig_dy(y + 0.5 * dt * k2, rp, thrust, kp, contact_on, slider)
        k4, _ = _rig_dy(y + dt * k3, rp, thrust, kp, contact_on, slider)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Rn, d = _orthonormalize(y[6:15].copy().reshape(3, 3))
        drift = max(drift, d)
        y[6:15] = Rn.ravel()
        steps += 1
        if np.max(np.abs(y)) > BLOWUP_LIMIT or not np.all(np.isfinite(y)):
            info[I_STATUS] = STATUS_BLOWUP
            break
    info[I_DRIFT] = drift
    info[I_STEPS] = steps
    return log[:row], info


def rk4_step(state, deriv, dt):
    """One classic fourth-order Runge-Kutta step for ``x' = deriv(x)``.

    Raises
    ------
    NumericalBlowup
        If any component of the result exceeds 1e6 in magnitude.
    """
    x = np.asarray(state, dtype=float)
    k1 = np.asarray(deriv(x))
    k2 = np.asarray(deriv(x + 0.5 * dt * k1))
    k3 = np.asarray(deriv(x + 0.5 * dt * k2))
    k4 = np.asarray(deriv(x + dt * k3))
    out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out), initial=0.0) > BLOWUP_LIMIT:
        raise NumericalBlowup("state magnitude exceeded 1e6")
    return out


@dataclass
class TrajectoryLog:
    """Uniformly sampled simulation rows with named, unit-suffixed columns.

    Attributes
    ----------
    data : ndarray, shape (n_rows, n_cols)
    columns : list of str
    meta : dict
        Run summary: robot kind, mode, detection and settling times, the
        collision event, orthonormalization drift, status.
    """

    data: np.ndarray
    columns: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {c: i for i, c in enumerate(self.columns)}

    def __len__(self):
        return self.data.shape[0]

    def __contains__(self, name):
        return name in self._index

    def col(self, name):
        """Column by name."""
        return self.data[:, self._index[name]]

    def cols(self, *names):
        return np.column_stack([self.col(n) for n in names])

    @property
    def t(self):
        return self.col("t_s")

    def row(self, i):
        return dict(zip(self.columns, self.data[i]))

    def to_csv(self, path):
        """Write the log as comma-separated text with a header row."""
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(",".join(self.columns) + "\n")
            for r in self.data:
                fh.write(",".join(repr(float(x)) for x in r) + "\n")

    @classmethod
    def from_csv(cls, path):
        """Read a log written by :meth:`to_csv`."""
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        return cls(data, header, {})


def trajectory_sample(log, t):
    """Logged row nearest to time ``t`` as a dict.

    Raises
    ------
    OutOfRange
        If ``t`` lies outside the logged span by more than half a sample.
    """
    ts = log.t
    half = 0.5 * (ts[1] - ts[0]) if len(ts) > 1 else 0.0
    if t < ts[0] - half or t > ts[-1] + half:
        raise OutOfRange(f"t = {t} outside [{ts[0]}, {ts[-1]}]")
    i = int(np.clip(np.searchsorted(ts, t), 1, len(ts) - 1)) if len(ts) > 1 else 0
    if len(ts) > 1 and abs(ts[i - 1] - t) <= abs(ts[i] - t):
        i -= 1
    return log.row(i)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run one scenario.

    Attributes
    ----------
    kind : str
        ``"rigid"`` or ``"compliant"``.
    mode : str
        ``"slider"`` or ``"free-flight"``.
    preset : str
        Free-flight reference: ``"hover"``, ``"step"``, ``"circle"`` or
        ``"collision"``.
    rigid, compliant : RigidParams, CompliantParams
    wall : ContactParams
    gains : ControllerGains
    recovery : RecoveryParams
    speed : float
        Approach speed (m/s).
    pitch : float
        Contact pitch angle (rad) for collision presets.
    gap : float
        Initial clearance between the leading cage and the wall in slider
        mode (m).
    offset : float
        Approach offset along ``e_X`` for collision presets (m); positive
        moves the nominal contact earlier.
    circle_period : float
        Period of the circle preset (s).
    dt, duration : float
        Step size and simulated time (s).
    log_every : int
        Log decimation in steps.
    deflection_tol : float
        Arm deflection that keeps a compliant contact episode open (m).
    post_hover : float
        Simulated time kept after reaching Hover (s); negative runs to the
        end.
    contact : bool
        Evaluate wall contact.
    frozen_arms : bool
        Lock the arm coordinates of the compliant model.
    initial : tuple or None
        Optional explicit initial state: ``(Q, Qd)`` for the compliant
        model or ``(p, v, R, omega)`` for the rigid model.
    thrusts : tuple or None
        Constant open-loop motor thrusts used when no controller runs.
    """

    kind: str = "compliant"
    mode: str = "slider"
    preset: str = "collision"
    rigid: RigidParams = field(default_factory=RigidParams)
    compliant: CompliantParams = field(default_factory=CompliantParams)
    wall: ContactParams = field(default_factory=ContactParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    recovery: RecoveryParams = field(default_factory=RecoveryParams)
    speed: float = 1.85
    pitch: float = 0.0
    gap: float = 1e-3
    offset: float = 0.0
    circle_period: float = 2.0 * np.pi
    dt: float = 5e-5
    duration: float = 0.4
    log_every: int = 10
    deflection_tol: float = 5e-4
    post_hover: float = 0.5
    contact: bool = True
    frozen_arms: bool = False
    initial: tuple = None
    thrusts: tuple = None

    def __post_init__(self):
        if self.kind not in ("rigid", "compliant"):
            raise ConfigError(f"kind must be 'rigid' or 'compliant', got {self.kind!r}")
        if self.mode not in ("slider", "free-flight"):
            raise ConfigError(f"mode must be 'slider' or 'free-flight', got {self.mode!r}")
        if self.preset not in ("hover", "step", "circle", "collision", "open-loop"):
            raise ConfigError(f"unknown preset {self.preset!r}")
        if not 1e-6 <= self.dt <= 1e-3:
            raise ConfigError(f"dt must lie in [1e-6, 1e-3], got {self.dt}")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.speed < 0:
            raise ConfigError("speed must be non-negative")
        if self.log_every < 1:
            raise ConfigError("log_every must be >= 1")

    def replace(self, **kw):
        return replace(self, **kw)

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))


def _front_reach(R, l, r0, kp):
    """Largest x offset of any cage contact point from the body centre."""
    return float(np.max(_deltas(np.zeros(3), R, np.asarray(l, float), r0, kp)) + kp[0])


def _check_status(info):
    status = int(info[I_STATUS])
    if status == STATUS_BLOWUP:
        raise NumericalBlowup("state magnitude exceeded 1e6")
    if status == STATUS_GIMBAL:
        raise GimbalLock("pitch reached the Euler-angle singularity")


def _meta(cfg, info):
    meta = {
        "kind": cfg.kind, "mode": cfg.mode, "preset": cfg.preset, "dt": cfg.dt,
        "status": int(info[I_STATUS]), "steps": int(info[I_STEPS]),
        "t_first_contact": float(info[I_T_CONTACT]),
        "t_detect": float(info[I_T_DETECT]), "t_hover": float(info[I_T_HOVER]),
        "t_timeout": float(info[I_T_FAIL]),
        "max_orthonormality_drift": float(info[I_DRIFT]),
        "saturated_steps": int(info[I_SAT]),
    }
    if info[I_T_DETECT] >= 0:
        meta["event"] = {
            "t": float(info[I_T_DETECT]), "p_c": info[I_PC:I_PC + 3].copy(),
            "f_c0": info[I_FC:I_FC + 3].copy(), "contact_point": info[I_CPT:I_CPT + 3].copy(),
            "channel": "arm-compression" if cfg.kind == "compliant" else "acceleration",
        }
    meta["recovered"] = info[I_T_HOVER] >= 0
    meta["recovery_timeout"] = info[I_T_FAIL] >= 0
    return meta


def _make_log(cfg, data, info):
    cols = list(COLUMNS)
    if cfg.kind == "rigid":
        keep = [i for i, c in enumerate(cols) if c not in ARM_COLUMNS]
        data = data[:, keep]
        cols = [cols[i] for i in keep]
    return TrajectoryLog(np.ascontiguousarray(data), cols, _meta(cfg, info))


def _no_ctrl():
    return np.zeros(12), np.zeros(5), RecoveryParams().pack(), np.zeros((1, 11))


def run_slider_collision(cfg):
    """Horizontal slider impact with motors off.

    Only ``x`` (and the four arm lengths for the compliant robot) move;
    attitude is held at identity and gravity is balanced by the slider.
    The robot starts ``cfg.gap`` short of the wall moving at ``cfg.speed``.

    Returns
    -------
    TrajectoryLog
    """
    if cfg.mode != "slider":
        raise ConfigError("run_slider_collision needs mode = 'slider'")
    kp = cfg.wall.pack()
    gains, ctrl, rec, ref = _no_ctrl()
    R = np.eye(3)
    if cfg.kind == "compliant":
        p = cfg.compliant
        x0 = cfg.wall.D - _front_reach(R, np.full(4, p.L), p.r0, kp) - cfg.gap
        q0 = np.zeros(10)
        q0[0] = x0
        q0[6:] = p.L
        qd0 = np.zeros(10)
        qd0[0] = cfg.speed
        free = np.zeros(10, dtype=np.bool_)
        free[0] = True
        free[6:] = True
        data, info = _run_compliant(q0, qd0, p.pack(), kp, cfg.contact, free, cfg.dt,
                                    cfg.n_steps, cfg.log_every, False, gains, ctrl, rec, 0,
                                    ref, cfg.deflection_tol, -1.0, np.inf, np.zeros(4))
    else:
        p = cfg.rigid
        x0 = cfg.wall.D - _front_reach(R, np.full(4, p.L), p.r0, kp) - cfg.gap
        s0 = np.concatenate([[x0, 0.0, 0.0, cfg.speed, 0.0, 0.0], R.ravel(), np.zeros(3)])
        data, info = _run_rigid(s0, p.pack(), kp, cfg.contact, True, cfg.dt, cfg.n_steps,
                                cfg.log_every, False, gains, ctrl, rec, 0, ref, -1.0, np.inf,
                                np.zeros(4))
    _check_status(info)
    return _make_log(cfg, data, info)


def accel_profile_segments(knots_t, knots_a, p0, v0, seg_dt=5e-3):
    """Constant-acceleration segments approximating a piecewise-linear
    acceleration profile along ``e_X``.

    Parameters
    ----------
    knots_t, knots_a : sequence of float
        Times (s, increasing, starting at 0) and accelerations (m/s^2) of
        the profile knots.
    p0 : array_like, shape (3,)
        Position at ``knots_t[0]``.
    v0 : float
        x-velocity at ``knots_t[0]``.
    seg_dt : float
        Segment length (s).

    Returns
    -------
    rows : ndarray, shape (n, 11)
        Segment rows (times relative to the first knot).
    p_end : ndarray, shape (3,)
    v_end : float
    """
    rows = []
    p = np.array(p0, dtype=float)
    v = float(v0)
    for k in range(len(knots_t) - 1):
        t0, t1 = knots_t[k], knots_t[k + 1]
        if t1 <= t0:
            continue
        n = max(1, int(np.ceil((t1 - t0) / seg_dt)))
        h = (t1 - t0) / n
        for i in range(n):
            tm = t0 + (i + 0.5) * h
            a = np.interp(tm, [t0, t1], [knots_a[k], knots_a[k + 1]])
            rows.append([t0 + i * h, p[0], p[1], p[2], v, 0.0, 0.0, a, 0.0, 0.0, 0.0])
            p[0] += v * h + 0.5 * a * h * h
            v += a * h
    return np.array(rows), p, v


def collision_reference(cfg, hover_z=1.0, hold=0.5, ramp=0.3, cruise=1.2, final=0.4):
    """Approach reference for a wall-collision preset.

    The robot hovers for ``hold`` seconds, then follows a continuous
    piecewise-linear acceleration profile along ``e_X`` that ends in a
    constant acceleration ``g tan(pitch)``. That final acceleration is
    held for up to ``final`` seconds before the leading cage reaches the
    wall with speed ``cfg.speed``, so the robot arrives with the requested
    pitch. The reference keeps constant velocity afterwards.

    Returns
    -------
    ref : ndarray, shape (n, 11)
        Segment rows for :func:`_reference`.
    p0 : ndarray, shape (3,)
        Start position.
    t_contact : float
        Nominal contact time (s).
    """
    g = cfg.rigid.g if cfg.kind == "rigid" else cfg.compliant.g
    a_c = g * np.tan(cfg.pitch)
    v_c = cfg.speed
    if a_c > 0 and v_c / a_c - 0.5 * ramp <= final:
        # Accelerating contact reachable straight from hover.
        T2 = max(v_c / a_c - 0.5 * ramp, 0.0)
        a_c = v_c / (T2 + 0.5 * ramp)
        kt = [0.0, ramp, ramp + T2]
        ka = [0.0, a_c, a_c]
    else:
        v_i = v_c - a_c * final
        a1 = (v_i - 0.5 * a_c * ramp) / (ramp + cruise)
        kt = [0.0, ramp, ramp + cruise, 2 * ramp + cruise, 2 * ramp + cruise + final]
        ka = [0.0, a1, a1, a_c, a_c]
    rows, p_end, v_end = accel_profile_segments(kt, ka, np.zeros(3), 0.0)
    if cfg.kind == "rigid":
        L, r0 = cfg.rigid.L, cfg.rigid.r0
    else:
        L, r0 = cfg.compliant.L, cfg.compliant.r0
    R = _euler_to_rot(0.0, cfg.pitch, 0.0)
    reach = _front_reach(R, np.full(4, L), r0, cfg.wall.pack())
    x0 = cfg.wall.D - reach - p_end[0] + cfg.offset
    rows[:, 0] += hold
    rows[:, 1] += x0
    rows[:, 3] = hover_z
    t3 = hold + kt[-1]
    head = np.array([[0.0, x0, 0.0, hover_z, 0, 0, 0, 0, 0, 0, 0.0]])
    tail = np.array([[t3, x0 + p_end[0], 0.0, hover_z, v_end, 0, 0, 0, 0, 0, 0.0]])
    ref = np.vstack([head, rows, tail])
    return ref, np.array([x0, 0.0, hover_z]), t3


def step_reference(t_step=5.0, z=2.0):
    """Setpoint steps ``[0,0,z] -> [1,0,z] -> [1,1,z]`` every ``t_step`` s."""
    ref = np.zeros((3, 11))
    ref[0, :4] = [0.0, 0.0, 0.0, z]
    ref[1, :4] = [t_step, 1.0, 0.0, z]
    ref[2, :4] = [2 * t_step, 1.0, 1.0, z]
    return ref, np.array([0.0, 0.0, z])


def circle_reference(period, radius=1.0, z=2.0, t_start=1.0):
    """Horizontal circle of ``radius`` about the origin at height ``z``."""
    ref = np.array([[t_start, 0.0, 0.0, z, radius, period, 0.0]])
    return ref, np.array([radius, 0.0, z])


def _free_flight_setup(cfg):
    if cfg.preset == "collision":
        ref, p0, _ = collision_reference(cfg)
        return REF_SEGMENTS, ref, p0
    if cfg.preset == "step":
        ref, p0 = step_reference()
        return REF_SEGMENTS, ref, p0
    if cfg.preset == "circle":
        ref, p0 = circle_reference(cfg.circle_period)
        return REF_CIRCLE, ref, p0
    p0 = np.array([0.0, 0.0, 1.0])
    ref = np.zeros((1, 11))
    ref[0, 1:4] = p0
    return REF_SEGMENTS, ref, p0


def run_free_flight(cfg):
    """Closed-loop (or open-loop) flight with optional wall contact.

    Presets ``hover``, ``step``, ``circle`` and ``collision`` run the
    controller. The collision preset also runs the detection and recovery
    phase machine. Preset ``open-loop`` applies ``cfg.thrusts`` with no
    controller.

    Returns
    -------
    TrajectoryLog
        ``meta["recovered"]`` reports whether Hover was reached after a
        collision and ``meta["recovery_timeout"]`` whether settling timed
        out.
    """
    if cfg.mode != "free-flight":
        raise ConfigError("run_free_flight needs mode = 'free-flight'")
    ref_kind, ref, p0 = _free_flight_setup(cfg)
    ctrl_on = cfg.preset != "open-loop"
    kp = cfg.wall.pack()
    rec = cfg.recovery.pack()
    gains = cfg.gains.pack()
    thrust0 = np.zeros(4) if cfg.thrusts is None else np.asarray(cfg.thrusts, float)
    post = cfg.post_hover if cfg.preset == "collision" else -1.0
    limit = cfg.recovery.timeout + 1.0
    if cfg.kind == "compliant":
        p = cfg.compliant
        ctrl = np.array([p.mass, p.g, p.c_tau, p.f_max, 0.0])
        if cfg.initial is not None:
            q0, qd0 = (np.asarray(x, float) for x in cfg.initial)
        else:
            q0 = np.concatenate([p0, np.zeros(3), np.full(4, p.L)])
            qd0 = np.zeros(10)
        free = np.ones(10, dtype=np.bool_)
        if cfg.frozen_arms:
            free[6:] = False
        data, info = _run_compliant(q0, qd0, p.pack(), kp, cfg.contact, free, cfg.dt,
                                    cfg.n_steps, cfg.log_every, ctrl_on, gains, ctrl, rec,
                                    ref_kind, ref, cfg.deflection_tol, post, limit, thrust0)
    else:
        p = cfg.rigid
        ctrl = np.array([p.m, p.g, p.c_tau, p.f_max, 0.0])
        if cfg.initial is not None:
            pp, vv, RR, ww = (np.asarray(x, float) for x in cfg.initial)
            s0 = np.concatenate([pp, vv, RR.ravel(), ww])
        else:
            s0 = np.concatenate([p0, np.zeros(3), np.eye(3).ravel(), np.zeros(3)])
        data, info = _run_rigid(s0, p.pack(), kp, cfg.contact, False, cfg.dt, cfg.n_steps,
                                cfg.log_every, ctrl_on, gains, ctrl, rec, ref_kind, ref, post,
                                limit, thrust0)
    _check_status(info)
    log = _make_log(cfg, data, info)
    log.meta["reference"] = (ref_kind, ref)
    return log
