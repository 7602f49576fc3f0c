"""End-to-end acceptance checks, one marker per criterion.

A summary line per criterion is printed at the end of the pytest run.
"""

import time

import numpy as np
import pytest
from scipy.integrate import trapezoid

from energy_oracle import bias_fd, mass_matrix_fd, random_state
from quadimpact.contact import ContactParams
from quadimpact.dynamics_compliant import CompliantState, bias_and_gravity, mass_matrix
from quadimpact.engine import ScenarioConfig, run_free_flight, run_slider_collision
from quadimpact.experiments import (COR_TOL, SIGNATURES, TARGETS, calibrated_ca,
                                    collision_suite, collision_trial, flight_compliant,
                                    run_impact, slider_config, sweep_speeds, validate)
from quadimpact.geom3 import euler_rate_map, euler_to_rotation
from quadimpact.vehicle import CompliantParams

crit = pytest.mark.criterion
CELLS = [("rigid", "wall"), ("rigid", "mat"), ("compliant", "wall"), ("compliant", "mat")]


@pytest.fixture(scope="module")
def validation():
    t0 = time.perf_counter()
    report = validate()
    return report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def wall_ca():
    return calibrated_ca("wall").c_a


@pytest.fixture(scope="module")
def suite(wall_ca):
    return collision_suite("compliant", c_a=wall_ca)


# 1: COR after one calibration per surface ---------------------------------

@crit(1)
@pytest.mark.parametrize("kind, surface", CELLS)
def test_c1_cor(validation, record_property, kind, surface):
    report, _ = validation
    r = report.row(kind, surface)
    err = r.metrics.cor - r.target_cor
    record_property("detail", f"COR {r.metrics.cor:.4f} vs {r.target_cor} "
                              f"(err {err:+.4f}, tol {COR_TOL[kind]}), c_a {r.c_a:.4f}")
    assert abs(err) <= COR_TOL[kind]


@crit(1)
def test_c1_runtime(validation, record_property):
    _, seconds = validation
    record_property("detail", f"calibration plus four runs in {seconds:.1f} s")
    assert seconds < 10.0


# 2: peak accelerations -----------------------------------------------------

@crit(2)
@pytest.mark.parametrize("kind, surface", CELLS)
def test_c2_a_max(validation, record_property, kind, surface):
    report, _ = validation
    r = report.row(kind, surface)
    rel = r.metrics.a_max / r.target_a_max - 1.0
    record_property("detail", f"a_max {r.metrics.a_max:.1f} vs {r.target_a_max:.0f} "
                              f"({100 * rel:+.1f}%)")
    assert abs(rel) <= 0.10


# 3: contact signatures on the wall -----------------------------------------

@crit(3)
@pytest.mark.parametrize("kind", ["rigid", "compliant"])
def test_c3_duration(validation, record_property, kind):
    m = validation[0].row(kind, "wall").metrics
    target = SIGNATURES[kind][0]
    record_property("detail", f"dt_contact {m.dt_contact:.4f} s vs {target} s "
                              f"({100 * (m.dt_contact / target - 1):+.1f}%)")
    assert abs(m.dt_contact / target - 1.0) <= 0.20


@crit(3)
@pytest.mark.parametrize("kind", ["rigid", "compliant"])
def test_c3_deformation(validation, record_property, kind):
    m = validation[0].row(kind, "wall").metrics
    target = SIGNATURES[kind][1]
    record_property("detail", f"deformation {1000 * m.delta_max:.1f} mm vs "
                              f"{1000 * target:.0f} mm "
                              f"({100 * (m.delta_max / target - 1):+.1f}%)")
    assert abs(m.delta_max / target - 1.0) <= 0.20


@crit(3)
def test_c3_duration_ratio(validation, record_property):
    report = validation[0]
    ratio = (report.row("compliant", "wall").metrics.dt_contact
             / report.row("rigid", "wall").metrics.dt_contact)
    record_property("detail", f"compliant/rigid duration {ratio:.2f}")
    assert ratio > 2.0


# 4: speed sweep with robot-only masses -------------------------------------

@crit(4)
def test_c4_sweep(record_property):
    t0 = time.perf_counter()
    r = sweep_speeds()
    seconds = time.perf_counter() - t0
    d6 = r.difference[np.isclose(r.speeds, 6.0)][0]
    record_property("detail", f"{len(r.speeds)} speeds in {seconds:.1f} s, difference at "
                              f"6 m/s {d6:.0f} vs 493 ({100 * (d6 / 493 - 1):+.1f}%)")
    np.testing.assert_allclose(r.speeds, np.arange(1.0, 6.01, 0.5))
    assert np.all(r.a_compliant < r.a_rigid)
    assert np.all(np.diff(r.a_rigid) > 0) and np.all(np.diff(r.a_compliant) > 0)
    assert abs(d6 / 493.0 - 1.0) <= 0.15
    assert seconds < 30.0


# 5: in-flight wall collisions ----------------------------------------------

@crit(5)
def test_c5_offset_trials_recover(suite, record_property):
    trials = [t for t in suite if t.speed == 3.5]
    ok = [t.recovered and t.settle_time <= 10.0 for t in trials]
    settle = max(t.settle_time for t in trials)
    record_property("detail", f"{sum(ok)}/{len(trials)} recovered at 3.5 m/s, "
                              f"slowest settle {settle:.2f} s after detection")
    assert len(trials) == 10 and all(ok)


@crit(5)
def test_c5_pitch_excursion(suite, record_property):
    trials = [t for t in suite if t.speed == 3.5]
    worst = min(t.max_pitch_excursion_deg for t in trials)
    record_property("detail", f"smallest peak |pitch| during recovery {worst:.1f} deg")
    assert worst > 30.0


@crit(5)
def test_c5_pitch_trials_recover(suite, record_property):
    trials = [t for t in suite if t.speed == 2.0]
    summary = ", ".join(f"{t.pitch_deg:+.0f}: {'ok' if t.recovered else (t.error or 'no')}"
                        for t in trials)
    record_property("detail", summary)
    assert {t.pitch_deg for t in trials} == {-45.0, -30.0, -15.0, 15.0, 30.0}
    assert all(t.recovered and t.settle_time <= 10.0 for t in trials)


@pytest.fixture(scope="module")
def rigid_trial(wall_ca):
    return collision_trial("rigid", 3.5, c_a=wall_ca, keep_log=True)


@crit(5)
def test_c5_rigid_reported(rigid_trial, record_property):
    t = rigid_trial
    outcome = "recovered" if t.recovered else (t.error or "did not recover")
    record_property("detail", f"rigid robot at 3.5 m/s: {outcome} (reported, not asserted)")


# 6: energy ------------------------------------------------------------------

@crit(6)
def test_c6_conservation(record_property):
    cp = CompliantParams(b_l=0.0, travel_stops=False)
    q0 = np.array([0, 0, 5.0, 0.1, -0.2, 0.3, 0.19, 0.17, 0.20, 0.18])
    qd0 = np.array([0.5, 0, 2.0, 1.0, -0.5, 0.8, 0.1, -0.2, 0, 0.3])
    cfg = ScenarioConfig(kind="compliant", mode="free-flight", preset="open-loop",
                         compliant=cp, wall=ContactParams(c_a=0.0), contact=False,
                         duration=2.0, initial=(q0, qd0))
    log = run_free_flight(cfg)
    E = log.col("T_J") + log.col("U_J")
    drift = np.max(np.abs(E - E[0])) / abs(E[0])
    record_property("detail", f"relative drift {drift:.1e} over 2 s")
    assert drift < 1e-6


@crit(6)
@pytest.mark.parametrize("kind", ["rigid", "compliant"])
def test_c6_dissipation(wall_ca, record_property, kind):
    log = run_slider_collision(slider_config(kind, "wall", c_a=wall_ca, log_every=1))
    E = log.col("T_J") + log.col("U_J") + log.col("Uc_J")
    rise = np.max(np.diff(E))
    mech = log.col("T_J") + log.col("U_J")
    dE = mech[-1] - mech[0]
    work = trapezoid(log.col("Pcontact_W") + log.col("Pdamper_W"), log.t)
    gap = abs(dE - work) / abs(dE)
    record_property("detail", f"largest energy rise {rise:.1e} J, balance gap {100 * gap:.4f}%")
    assert rise <= 1e-9 * abs(E[0])
    assert gap < 0.01


# 7: frozen-arm reduction ---------------------------------------------------

@crit(7)
def test_c7_frozen_arms_match_rigid(record_property):
    cp = flight_compliant()
    eta = np.array([0.2, -0.3, 0.4])
    eta_dot = np.array([-0.4, 0.6, 0.3])
    q0 = np.concatenate([[0, 0, 1.0], eta, np.full(4, cp.L)])
    qd0 = np.concatenate([[0.8, -0.4, 0.5], eta_dot, np.zeros(4)])
    common = dict(mode="free-flight", preset="open-loop", contact=False, duration=1.0,
                  thrusts=(3.6, 3.0, 3.4, 3.1))
    a = run_free_flight(ScenarioConfig(kind="compliant", compliant=cp, frozen_arms=True,
                                       initial=(q0, qd0), **common))
    b = run_free_flight(ScenarioConfig(
        kind="rigid", rigid=cp.rigid_equivalent(),
        initial=(q0[:3], qd0[:3], euler_to_rotation(eta), euler_rate_map(eta) @ eta_dot),
        **common))
    pos = ("px_m", "py_m", "pz_m")
    err = np.max(np.abs(a.cols(*pos) - b.cols(*pos)))
    record_property("detail", f"max position difference {err:.1e} m over 1 s")
    assert err < 1e-6


# 8: finite-difference oracle -----------------------------------------------

@crit(8)
def test_c8_finite_difference_oracle(record_property):
    p = flight_compliant()
    rng = np.random.default_rng(8)
    worst_M = worst_h = 0.0
    for _ in range(1000):
        q, qd = random_state(rng)
        s = CompliantState(q, qd)
        M_fd = mass_matrix_fd(q, p)
        h_fd = bias_fd(q, qd, p)
        worst_M = max(worst_M, np.abs(mass_matrix(s, p) - M_fd).max() / np.abs(M_fd).max())
        worst_h = max(worst_h, np.abs(bias_and_gravity(s, p) - h_fd).max() / np.abs(h_fd).max())
    record_property("detail", f"1000 states: mass matrix {worst_M:.1e}, bias {worst_h:.1e}")
    assert worst_M < 1e-5 and worst_h < 1e-5


# 9: elastic limit and friction ---------------------------------------------

@crit(9)
def test_c9_elastic_rigid_cor(record_property):
    _, m = run_impact(slider_config("rigid", "wall", c_a=0.0, duration=0.3))
    record_property("detail", f"rigid COR {m.cor:.4f} at c_a = 0")
    assert abs(m.cor - 1.0) <= 0.01


@crit(9)
def test_c9_elastic_compliant_is_lossless(record_property):
    cfg = slider_config("compliant", "wall", c_a=0.0, duration=0.3)
    cfg = cfg.replace(compliant=cfg.compliant.replace(b_l=0.0, travel_stops=False))
    log = run_slider_collision(cfg)
    E = log.col("T_J") + log.col("U_J") + log.col("Uc_J")
    drift = (E.max() - E.min()) / E[0]
    record_property("detail", f"compliant energy drift {drift:.1e} through the impact; "
                              "body COR not asserted, arm vibration keeps energy")
    assert drift < 1e-6


@crit(9)
def test_c9_friction_never_adds_energy(rigid_trial, wall_ca, record_property):
    logs = [rigid_trial.log,
            collision_trial("compliant", 2.0, -15.0, c_a=wall_ca, duration=6.0,
                            keep_log=True).log,
            run_slider_collision(slider_config("compliant", "wall", c_a=wall_ca))]
    worst = max(float(np.max(log.col("Pfriction_W"))) for log in logs)
    active = min(float(np.min(log.col("Pfriction_W"))) for log in logs)
    record_property("detail", f"largest friction power {worst:.1e} W "
                              f"(most negative {active:.1f} W)")
    assert worst <= 0.0


# 10: determinism and step-size convergence ---------------------------------

@crit(10)
@pytest.mark.parametrize("kind", ["rigid", "compliant"])
def test_c10_bit_identical(wall_ca, record_property, kind):
    cfg = slider_config(kind, "wall", c_a=wall_ca)
    a, b = run_slider_collision(cfg), run_slider_collision(cfg)
    record_property("detail", f"{kind}: {a.data.shape[0]} rows compared bitwise")
    assert a.data.tobytes() == b.data.tobytes()


@crit(10)
@pytest.mark.parametrize("kind", ["rigid", "compliant"])
def test_c10_dt_convergence(wall_ca, record_property, kind):
    coarse = run_impact(slider_config(kind, "wall", c_a=wall_ca))[1].cor
    fine = run_impact(slider_config(kind, "wall", c_a=wall_ca, dt=2.5e-5))[1].cor
    rel = abs(fine - coarse) / coarse
    record_property("detail", f"{kind} wall COR {coarse:.5f} -> {fine:.5f} "
                              f"({100 * rel:.3f}%)")
    assert rel < 0.005
