"""Impact and tracking metrics computed from trajectory logs.

All functions are pure over a :class:`~quadimpact.engine.TrajectoryLog`.
A contact episode is the span of rows with ``contact_flag`` set. For the
compliant robot that covers wall contact plus the time its arms need to
return within the deflection tolerance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MultipleEpisodes, NoContact, NoStepDetected

#: Gaps in the contact flag shorter than this are treated as chatter (s).
EPISODE_GAP = 0.010


@dataclass(frozen=True)
class ImpactMetrics:
    """Summary of one contact episode.

    Attributes
    ----------
    cor : float
        Coefficient of restitution ``|v_after| / |v_before|``.
    a_max : float
        Peak main-body acceleration magnitude (m/s^2).
    dt_contact : float
        Episode duration (s).
    delta_max : float
        Peak wall penetration plus peak arm compression (m).
    v_before, v_after : float
        x-velocity at onset and at release (m/s).
    """

    cor: float
    a_max: float
    dt_contact: float
    delta_max: float
    v_before: float
    v_after: float


@dataclass(frozen=True)
class TrackingMetrics:
    """Step-response rise times and tracking errors.

    Attributes
    ----------
    rise_times : dict
        Axis name to list of 10-90% rise times (s), one per step on that
        axis.
    mse_p : ndarray, shape (3,)
        Position mean squared error per axis (m^2).
    mse_v : ndarray, shape (3,)
        Velocity mean squared error per axis ((m/s)^2).
    """

    rise_times: dict
    mse_p: np.ndarray
    mse_v: np.ndarray


def _episode(log):
    """Indices of the first flagged row and the first row after release."""
    flag = log.col("contact_flag") > 0
    if not np.any(flag):
        raise NoContact("contact flag never rises")
    idx = np.nonzero(flag)[0]
    t = log.t
    gaps = np.nonzero(np.diff(idx) > 1)[0]
    for g in gaps:
        if t[idx[g + 1]] - t[idx[g]] > EPISODE_GAP:
            raise MultipleEpisodes(f"contact re-engages at t = {t[idx[g + 1]]:.4f} s")
    on = int(idx[0])
    off = int(min(idx[-1] + 1, len(t) - 1))
    return on, off


def compute_cor(log):
    """Coefficient of restitution of the single contact episode in ``log``.

    Raises
    ------
    NoContact
        If the contact flag never rises.
    MultipleEpisodes
        If contact re-engages more than 10 ms after a release.
    """
    on, off = _episode(log)
    vx = log.col("vx_mps")
    return float(abs(vx[off]) / abs(vx[on]))


def compute_a_max(log):
    """Largest logged main-body acceleration magnitude (m/s^2)."""
    a = log.cols("ax_mps2", "ay_mps2", "az_mps2")
    return float(np.max(np.linalg.norm(a, axis=1)))


def compute_contact_metrics(log):
    """Contact duration (s) and deformation (m) of the single episode.

    Deformation is the peak cage penetration into the wall, plus the peak
    arm compression when the log has arm columns.
    """
    on, off = _episode(log)
    t = log.t
    dt_contact = float(t[off] - t[on])
    seg = slice(on, off + 1)
    delta = float(max(0.0, np.max(log.col("delta_max_m")[seg])))
    if "defl_max_m" in log:
        delta += float(max(0.0, np.max(log.col("defl_max_m")[seg])))
    return dt_contact, delta


def impact_metrics(log):
    """All impact metrics of a single-episode log."""
    on, off = _episode(log)
    vx = log.col("vx_mps")
    dt_contact, delta = compute_contact_metrics(log)
    return ImpactMetrics(cor=compute_cor(log), a_max=compute_a_max(log), dt_contact=dt_contact,
                         delta_max=delta, v_before=float(vx[on]), v_after=float(vx[off]))


def rise_time(t, y, y0, y1, t_step):
    """Time from 10% to 90% of a step ``y0 -> y1`` applied at ``t_step``.

    Returns ``nan`` if the response never reaches 90%.
    """
    span = y1 - y0
    frac = (np.asarray(y) - y0) / span
    after = t >= t_step
    t_a = t[after]
    f_a = frac[after]
    i10 = np.nonzero(f_a >= 0.1)[0]
    i90 = np.nonzero(f_a >= 0.9)[0]
    if i10.size == 0 or i90.size == 0:
        return float("nan")
    return float(t_a[i90[0]] - t_a[i10[0]])


def compute_tracking_metrics(log, reference=None, mode="auto", window=None):
    """Rise times and mean squared tracking errors.

    Parameters
    ----------
    log : TrajectoryLog
    reference : tuple of ndarray, optional
        ``(t, p_ref, v_ref)`` sampled at the log times; defaults to the
        logged setpoint columns.
    mode : str
        ``"step"``, ``"circle"`` or ``"auto"`` (step if the reference
        position jumps).
    window : tuple of float, optional
        Time span used for the errors; defaults to the whole log.

    Raises
    ------
    NoStepDetected
        In step mode when the reference position never jumps.
    """
    t = log.t
    p = log.cols("px_m", "py_m", "pz_m")
    v = log.cols("vx_mps", "vy_mps", "vz_mps")
    if reference is None:
        p_ref = log.cols("pdx_m", "pdy_m", "pdz_m")
        v_ref = log.cols("vdx_mps", "vdy_mps", "vdz_mps")
    else:
        _, p_ref, v_ref = reference
        p_ref = np.asarray(p_ref, float)
        v_ref = np.asarray(v_ref, float)
    jumps = []
    if len(t) > 1:
        dt = t[1] - t[0]
        dp = np.abs(np.diff(p_ref, axis=0))
        for i, ax in zip(*np.nonzero(dp > 50.0 * max(dt, 1e-9))):
            jumps.append((int(i) + 1, int(ax)))
    if mode == "auto":
        mode = "step" if jumps else "circle"
    rises = {}
    if mode == "step":
        if not jumps:
            raise NoStepDetected("reference position has no step")
        for k, (i, ax) in enumerate(jumps):
            end = jumps[k + 1][0] if k + 1 < len(jumps) else len(t)
            seg = slice(i, end)
            r = rise_time(t[seg], p[seg, ax], p_ref[i - 1, ax], p_ref[i, ax], t[i])
            rises.setdefault("xyz"[ax], []).append(r)
    sel = np.ones(len(t), dtype=bool)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
    mse_p = np.mean((p[sel] - p_ref[sel]) ** 2, axis=0)
    mse_v = np.mean((v[sel] - v_ref[sel]) ** 2, axis=0)
    return TrackingMetrics(rises, mse_p, mse_v)
