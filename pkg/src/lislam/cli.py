"""Command-line entry points: simulate, check-gains, validate-schedule, selftest."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .gains import p_bounds
from .harness import RunConfig, load_config, run


def _load(args) -> RunConfig:
    if args.config is not None:
        try:
            config = load_config(args.config)
        except FileNotFoundError:
            raise SystemExit(f"error: configuration file not found: {args.config}")
        except Exception as exc:  # malformed YAML / bad values
            raise SystemExit(f"error: could not load {args.config}: {exc}")
    else:
        config = RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.horizon is not None:
        overrides["horizon_s"] = args.horizon
    if args.log_interval is not None:
        overrides["log_interval"] = args.log_interval
    if args.allow_infeasible:
        overrides["allow_infeasible"] = True
    return replace(config, **overrides) if overrides else config


def _cmd_simulate(args) -> int:
    config = _load(args)
    try:
        result = run(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    csv_path, json_path = result.write(args.out)
    s = result.summary
    print(f"wrote {csv_path} and {json_path}")
    print(
        f"final errors: attitude {s['att_err_final']:.3e} rad, "
        f"velocity {s['vel_err_final']:.3e} m/s, "
        f"position {s['pos_err_final']:.3e} m"
    )
    print(f"max Lyapunov increase per step: {s['max_lyap_increase']:.3e}")
    if s["violations"]:
        print(f"{len(s['violations'])} monitor violation(s); see summary JSON")
        return 1
    return 0


def _cmd_check_gains(args) -> int:
    config = _load(args)
    bounds = p_bounds(config.gains, config.params.n)
    verdict = "feasible" if bounds["feasible"] else "infeasible"
    print(f"margin = {bounds['margin']:.6g} ({verdict})")
    for name in ("s_x", "s_vx", "s_v"):
        lo, hi = bounds[name]
        print(f"{name}(0) interval: [{lo:.6g}, {hi:.6g}]")
    print(f"Schur determinant lower bound: {bounds['schur_det_lower']:.6g}")
    return 0 if bounds["feasible"] else 1


def _cmd_validate_schedule(args) -> int:
    config = _load(args)
    sched = config.schedule
    span = max(config.horizon_s, sched.T)
    ok, worst, worst_t = sched.validate_tpe(span)
    print(f"T = {sched.T:g}, tau = {sched.tau:g}")
    print(
        f"worst length-T window starts at t = {worst_t:g} s "
        f"with {worst:g} s of GNSS"
    )
    print(f"TPE: {'yes' if ok else 'no'}")
    return 0 if ok else 1


def _cmd_selftest(args) -> int:
    failures = []

    def check(name, fn):
        try:
            fn()
            print(f"ok      {name}")
        except Exception as exc:
            failures.append(name)
            print(f"FAILED  {name}: {exc}")

    check("group axioms", _selftest_group_axioms)
    check("closed-form exponentials", _selftest_exponentials)
    check("synchrony of the error flow", _selftest_synchrony)
    check("short feasible run", _selftest_short_run)
    if failures:
        print(f"{len(failures)} selftest failure(s)")
        return 1
    print("all selftests passed")
    return 0


def _selftest_group_axioms():
    from .liegroups import GROUP_AXIOM_TOL, SIMn3Element

    rng = np.random.default_rng(7)
    from .liegroups import so3_exp

    for _ in range(20):
        a = SIMn3Element(so3_exp(rng.standard_normal(3)),
                         rng.standard_normal((3, 7)),
                         np.eye(7) + 0.2 * rng.standard_normal((7, 7)))
        b = SIMn3Element(so3_exp(rng.standard_normal(3)),
                         rng.standard_normal((3, 7)),
                         np.eye(7) + 0.2 * rng.standard_normal((7, 7)))
        dense = a.as_matrix() @ b.as_matrix()
        got = a.compose(b).as_matrix()
        if np.abs(dense - got).max() > GROUP_AXIOM_TOL * 10:
            raise AssertionError("compose disagrees with dense product")
        ident = a.compose(a.inverse()).as_matrix()
        if np.abs(ident - np.eye(10)).max() > 1e-9:
            raise AssertionError("inverse is not a two-sided inverse")


def _selftest_exponentials():
    from scipy.linalg import expm

    from .liegroups import SETangent, SIMTangent, tangent_exp

    rng = np.random.default_rng(11)
    for _ in range(10):
        t = SETangent(rng.standard_normal(3), rng.standard_normal((3, 7)))
        d = np.abs(tangent_exp(t, 0.5).as_matrix() - expm(0.5 * t.as_matrix())).max()
        s = SIMTangent(rng.standard_normal(3), rng.standard_normal((3, 7)),
                       rng.standard_normal((7, 7)))
        d2 = np.abs(tangent_exp(s, 0.2).as_matrix() - expm(0.2 * s.as_matrix())).max()
        if max(d, d2) > 1e-10:
            raise AssertionError(f"exponential mismatch ({max(d, d2):.3e})")


def _selftest_synchrony():
    from .gains import reference_az0
    from .liegroups import constants, so3_exp
    from .observer import (
        TangentCorrection,
        apply_correction_step,
        compute_error,
        default_initial_observer,
        lyapunov,
    )
    from .system import ImuInput, SystemParams, initial_true_state, propagate_truth

    rng = np.random.default_rng(3)
    params = SystemParams()
    consts = constants(params.n, params.g)
    truth = initial_true_state(params)
    obs = default_initial_observer(params, reference_az0(params.n))
    zero = TangentCorrection.zero(params.n)
    ly0 = lyapunov(compute_error(truth, obs))
    dt = 1e-3
    for _ in range(200):
        u = ImuInput(rng.standard_normal(3), rng.standard_normal(3))
        obs = apply_correction_step(obs, u, zero, consts, dt)
        truth = propagate_truth(truth, u, dt, consts)
    drift = abs(lyapunov(compute_error(truth, obs)) - ly0)
    if drift > 1e-9:
        raise AssertionError(f"error flow not input-independent (drift {drift:.3e})")


def _selftest_short_run():
    config = RunConfig(horizon_s=1.0, log_interval=20)
    result = run(config)
    if result.summary["max_lyap_increase"] > 1e-6:
        raise AssertionError("Lyapunov function increased over a step")
    if result.summary["min_sv_az_min"] < 1e-6:
        raise AssertionError("auxiliary state nearly singular")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lislam",
        description="Lie-group landmark-inertial SLAM observer harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a YAML scenario configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--horizon", type=float, default=None,
                       help="simulation horizon in seconds")
        p.add_argument("--log-interval", type=int, default=None,
                       help="steps between CSV rows")
        p.add_argument("--allow-infeasible", action="store_true",
                       help="run even if gains/schedule fail their checks")

    p_sim = sub.add_parser("simulate", help="run a scenario and write CSV/JSON")
    add_common(p_sim)
    p_sim.add_argument("--out", default="out", help="output directory")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_gains = sub.add_parser("check-gains", help="print the gain margin and intervals")
    add_common(p_gains)
    p_gains.set_defaults(fn=_cmd_check_gains)

    p_sched = sub.add_parser("validate-schedule",
                             help="scan the GNSS schedule for excitation")
    add_common(p_sched)
    p_sched.set_defaults(fn=_cmd_validate_schedule)

    p_self = sub.add_parser("selftest", help="run the built-in invariant checks")
    add_common(p_self)
    p_self.set_defaults(fn=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
