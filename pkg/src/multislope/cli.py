"""Command-line interface.

Subcommands cover validation, the offline optimum, both solvers, single
feasibility probes, strategy simulation, and the non-additive doubling
estimate.  Numeric output uses 12 significant digits.  Exit codes:
0 success, 1 domain or precondition failure, 2 unreadable or malformed
input.  All behavior is controlled by flags (no environment variables),
so logged command lines reproduce runs exactly.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .decompose import solve_decompose
from .instance import (
    InstanceFormatError,
    InvalidInstanceError,
    NonAdditiveInstance,
    UnreachableBudgetError,
    load_instance,
)
from .nonadditive import expected_ratio_estimate
from .optimal import feasible, solve_optimal
from .profile import dump_profile, load_profile
from .sim import default_grid, run_exact, run_monte_carlo, write_csv


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _load(path: str):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        inst, dropped = load_instance(path)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return inst, dropped


def cmd_validate(args) -> int:
    inst, dropped = _load(args.instance)
    if dropped:
        print(f"dropped {len(dropped)} dominated slope(s) at input position(s): "
              + ", ".join(str(i) for i in dropped))
    else:
        print("no dominated slopes")
    print("i,buy,rent,s_i")
    for i, sl in enumerate(inst.slopes):
        print(f"{i},{_fmt(sl.buy)},{_fmt(sl.rent)},{_fmt(inst.s[i])}")
    return 0


def cmd_opt(args) -> int:
    inst, _ = _load(args.instance)
    grid = default_grid(inst, args.grid_points)
    print("t,opt")
    for t in grid:
        print(f"{_fmt(t)},{_fmt(inst.opt_cost(float(t)))}")
    if args.plot:
        from . import plots

        plots.save_opt_figure(inst, grid, args.plot)
        print(f"wrote figure: {args.plot}", file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    inst, _ = _load(args.instance)
    c_star, profile = solve_optimal(inst, args.eps)
    print(_fmt(c_star))
    if args.profile_out:
        dump_profile(profile, args.profile_out)
    return 0


def cmd_decompose(args) -> int:
    inst, _ = _load(args.instance)
    result = solve_decompose(inst)
    print(_fmt(result.bound))
    if args.profile_out:
        dump_profile(result.profile, args.profile_out)
    return 0


def cmd_feasible(args) -> int:
    inst, _ = _load(args.instance)
    trace = feasible(inst, args.c)
    if trace.feasible:
        print("feasible")
    else:
        t, reason = trace.failure
        print(f"infeasible: {reason} at t={_fmt(t)}")
    return 0


def cmd_simulate(args) -> int:
    inst, _ = _load(args.instance)
    profile = load_profile(args.profile)
    if profile.inst.to_dict() != inst.to_dict():
        raise ValueError("profile was built for a different instance")
    grid = default_grid(inst, args.grid_points, profile)
    if args.samples > 0:
        report = run_monte_carlo(profile, grid, args.samples, args.seed)
    else:
        report = run_exact(profile, grid)
    write_csv(report, sys.stdout)
    if args.plot:
        from . import plots

        plots.save_ratio_figure(report, args.plot)
        print(f"wrote figure: {args.plot}", file=sys.stderr)
    return 0


def cmd_nonadditive(args) -> int:
    inst, _ = _load(args.instance)
    ninst = NonAdditiveInstance(inst)
    rng = np.random.default_rng(args.seed)
    mean, stderr = expected_ratio_estimate(ninst, args.alpha, args.tau, args.samples, rng)
    print(f"mean_ratio={_fmt(mean)} stderr={_fmt(stderr)}")
    return 0


def cmd_report(args) -> int:
    """Solve, simulate, and render figures next to the CSV report."""
    inst, _ = _load(args.instance)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    c_star, profile = solve_optimal(inst, args.eps)
    bound = solve_decompose(inst).bound
    print(f"c_star={_fmt(c_star)}")
    print(f"decompose_bound={_fmt(bound)}")

    grid = default_grid(inst, args.grid_points, profile)
    report = run_monte_carlo(profile, grid, args.samples, args.seed)
    csv_path = out / "report.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        write_csv(report, fh)
    dump_profile(profile, str(out / "profile.json"))

    from . import plots

    plots.save_ratio_figure(report, str(out / "ratio_curve.png"), bound=c_star,
                            title="competitive ratio of the optimal strategy")
    plots.save_profile_figure(profile, grid, str(out / "profile.png"),
                              title="state occupancy probabilities")
    plots.save_opt_figure(inst, grid, str(out / "opt_curve.png"),
                          title="offline cost envelope")
    for name in ("report.csv", "profile.json", "ratio_curve.png", "profile.png", "opt_curve.png"):
        print(f"wrote {out / name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multislope",
        description="Solvers and verification for multislope rent-or-buy strategies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="normalize an instance and print its table")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("opt", help="emit the offline optimum as CSV")
    p.add_argument("instance")
    p.add_argument("--grid-points", type=int, default=50)
    p.add_argument("--plot", help="also render the cost envelope to this file")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("solve", help="optimal competitive ratio via bisection")
    p.add_argument("instance")
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--profile-out", help="write the tight profile as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("decompose", help="two-slope decomposition solver")
    p.add_argument("instance")
    p.add_argument("--profile-out", help="write the combined profile as JSON")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("feasible", help="probe one competitive ratio")
    p.add_argument("instance")
    p.add_argument("--c", type=float, required=True)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("simulate", help="simulate a stored profile; CSV to stdout")
    p.add_argument("instance")
    p.add_argument("--profile", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-points", type=int, default=25)
    p.add_argument("--plot", help="also render the ratio curve to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("nonadditive", help="doubling-strategy ratio estimate")
    p.add_argument("instance")
    p.add_argument("--alpha", type=float, default=math.e)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_nonadditive)

    p = sub.add_parser("report", help="solve, simulate, and render figures + CSV")
    p.add_argument("instance")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-points", type=int, default=40)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInstanceError, UnreachableBudgetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
