"""Command-line front end.

Subcommands: ``simulate``, ``validate``, ``sweep``, ``freeflight``,
``calibrate`` and ``plot``. Exit codes: 0 on success, 1 when a validation
check fails, 2 on config or input-file errors.
"""

import argparse
import os
import sys
import warnings

import numpy as np

from . import config as config_mod
from . import experiments as ex
from .engine import TrajectoryLog, run_free_flight, run_slider_collision
from .errors import ConfigError, MultipleEpisodes, NoContact, QuadImpactError, Unachievable
from .metrics import impact_metrics
from .svgplot import plot_log, plot_sweep

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="scenario config file")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory")
    p.add_argument("--seed", metavar="N", type=int, default=0,
                   help="reserved; every run is deterministic")
    p.add_argument("--dt", metavar="SEC", type=float, default=None, help="step size (s)")
    p.add_argument("--jobs", metavar="N", type=int, default=1, help="worker processes")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(
        prog="quadimpact", description="Rigid and compliant quadrotor wall-collision simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run one scenario and write a CSV log")
    p.add_argument("scenario", nargs="?", help="scenario config file (or use --config)")
    p.add_argument("--plot", action="store_true", help="also write an SVG plot")

    sub.add_parser("validate", parents=[common],
                   help="calibrate c_a per surface and reproduce the slider impact table")

    p = sub.add_parser("sweep", parents=[common], help="peak acceleration over approach speeds")
    p.add_argument("--speeds", default="1:6:0.5", metavar="START:STOP:STEP",
                   help="speed grid in m/s (default 1:6:0.5)")

    p = sub.add_parser("freeflight", parents=[common],
                       help="wall-collision recovery and tracking presets")
    p.add_argument("--robot", choices=("compliant", "rigid", "both"), default="compliant")
    p.add_argument("--suite", choices=("collision", "tracking", "all"), default="all")

    p = sub.add_parser("calibrate", parents=[common], help="fit c_a to a target COR")
    p.add_argument("--surface", choices=tuple(ex.SURFACE_STIFFNESS), default="wall")
    p.add_argument("--target", type=float, default=None,
                   help="target COR (default: rigid-robot reference for the surface)")

    p = sub.add_parser("plot", parents=[common], help="render a CSV log as SVG")
    p.add_argument("csv", help="log written by simulate")
    return parser


def _dt(args, default=5e-5):
    return default if args.dt is None else args.dt


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_simulate(args):
    path = args.scenario or args.config
    if path is None:
        raise ConfigError("simulate needs a config file")
    cfg = config_mod.load(path)
    if args.dt is not None:
        cfg = cfg.replace(dt=args.dt)
    log = run_slider_collision(cfg) if cfg.mode == "slider" else run_free_flight(cfg)
    stem = os.path.splitext(os.path.basename(path))[0]
    csv = _out_path(args, f"{stem}.csv")
    log.to_csv(csv)
    print(f"wrote {csv} ({len(log)} rows)")
    try:
        m = impact_metrics(log)
        print(f"COR {m.cor:.4f}  a_max {m.a_max:.1f} m/s^2  contact {m.dt_contact:.4f} s  "
              f"deformation {1000 * m.delta_max:.1f} mm")
    except (NoContact, MultipleEpisodes) as exc:
        print(f"no single contact episode: {exc}")
    if "recovered" in log.meta and cfg.mode == "free-flight" and cfg.preset == "collision":
        print(f"recovered: {log.meta['recovered']}")
    if args.plot:
        svg = _out_path(args, f"{stem}.svg")
        plot_log(log, svg)
        print(f"wrote {svg}")
    return EXIT_OK


def cmd_validate(args):
    report = ex.validate(dt=_dt(args))
    print(report.format())
    print("physical-test COR values in parentheses are for reference only")
    return EXIT_OK if report.passed else EXIT_FAIL


def _parse_speeds(text):
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--speeds expects START:STOP:STEP, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"--speeds needs STOP >= START and STEP > 0, got {text!r}")
    return tuple(np.round(np.arange(start, stop + 0.5 * step, step), 12))


def cmd_sweep(args):
    result = ex.sweep_speeds(_parse_speeds(args.speeds), jobs=args.jobs, dt=_dt(args))
    csv = _out_path(args, "sweep.csv")
    svg = _out_path(args, "sweep.svg")
    result.to_csv(csv)
    plot_sweep(result, svg)
    print(f"c_a = {result.c_a:.4f}")
    print("speed  a_rigid  a_compliant  diff")
    for s, ar, ac, d in result.points:
        print(f"{s:5.2f}  {ar:7.1f}  {ac:11.1f}  {d:6.1f}")
    print(f"wrote {csv} and {svg}")
    ok = (np.all(result.difference > 0) and np.all(np.diff(result.a_rigid) > 0)
          and np.all(np.diff(result.a_compliant) > 0))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_freeflight(args):
    robots = ("compliant", "rigid") if args.robot == "both" else (args.robot,)
    dt = _dt(args)
    ok = True
    if args.suite in ("collision", "all"):
        for kind in robots:
            trials = ex.collision_suite(kind, dt=dt, jobs=args.jobs)
            print(ex.format_trials(trials))
            if kind == "compliant":
                ok &= all(t.recovered for t in trials)
    if args.suite in ("tracking", "all"):
        print("robot      preset        rise x  rise y   mse_p [m^2]             mse_v [(m/s)^2]")
        for kind in robots:
            _, m = ex.step_response(kind, dt=dt)
            rx = m.rise_times.get("x", [np.nan])[0]
            ry = m.rise_times.get("y", [np.nan])[0]
            print(f"{kind:<10} step          {rx:6.3f}  {ry:6.3f}   "
                  f"{np.array2string(m.mse_p, precision=5)}")
            for label, period in (("circle slow", 2 * np.pi), ("circle fast", np.pi)):
                _, c = ex.circle_tracking(kind, period, dt=dt)
                print(f"{kind:<10} {label:<12}  {'':6}  {'':6}   "
                      f"{np.array2string(c.mse_p, precision=5)}  "
                      f"{np.array2string(c.mse_v, precision=5)}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_calibrate(args):
    target = args.target
    if target is None:
        target = ex.TARGETS[("rigid", args.surface)][0]
    dt = _dt(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cal = ex.calibrate_ca(target, surface=args.surface, dt=dt)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"c_a = {cal.c_a:.6f}")
    print(f"fitted on the rigid robot, slider mode, {args.surface} "
          f"(k_c = {ex.SURFACE_STIFFNESS[args.surface]:g}), v0 = {ex.APPROACH_SPEED} m/s, "
          f"dt = {dt:g} s: COR {cal.cor:.5f} vs target {target} after "
          f"{cal.evaluations} runs")
    return EXIT_OK


def cmd_plot(args):
    if not os.path.isfile(args.csv):
        raise ConfigError(f"log file not found: {args.csv}")
    try:
        log = TrajectoryLog.from_csv(args.csv)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read log {args.csv}: {exc}") from exc
    stem = os.path.splitext(os.path.basename(args.csv))[0]
    svg = _out_path(args, f"{stem}.svg")
    plot_log(log, svg)
    print(f"wrote {svg}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "freeflight": cmd_freeflight,
    "calibrate": cmd_calibrate,
    "plot": cmd_plot,
}


def main(argv=None):
    """Run the CLI and return the exit code."""
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Unachievable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except QuadImpactError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
