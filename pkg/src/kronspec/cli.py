"""Command-line front end.

Subcommands:

* ``analyze``  - bound-based (optionally exact) stability certification
* ``evolve``   - exact covariance trajectories as JSON lines
* ``simulate`` - Monte Carlo estimates checked against exact propagation
* ``bench``    - wall-time comparison of d-by-d bounds vs d^2-by-d^2 spectra
* ``demo``     - the worked 2-by-2 family with its closed-form spectra

Exit codes: 0 stable, 1 unstable (or simulation comparison FAIL), 2
indeterminate, 64 malformed input file, 65 bad vectors/dimensions, 70
numerical overflow.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from .evolution import (
    max_relative_discrepancy,
    propagate_continuous,
    propagate_discrete,
)
from .kronsum import (
    BoundReport,
    StabilityStatus,
    UNSTABLE_STATUSES,
    build_continuous_gram,
    build_continuous_sum,
    build_discrete_gram,
    build_discrete_sum,
    check_bound_chain,
    stability_threshold,
    verdict_from_report,
)
from .matrices import SystemSpec, random_system
from .montecarlo import (
    SimulationConfig,
    SimulationOverflowError,
    compare_to_exact,
    simulate_continuous,
    simulate_discrete,
)
from .spectral import hermitian_extremes, summarize
from .sysio import SystemFileError, load_system, matrix_pairs, parse_vector

EXIT_STABLE = 0
EXIT_UNSTABLE = 1
EXIT_INDETERMINATE = 2
EXIT_BADFILE = 64
EXIT_BADDATA = 65
EXIT_OVERFLOW = 70


def demo_system(a: float, b: float, sigma: float) -> SystemSpec:
    """The worked 2-by-2 family: diagonal drift, one sub-diagonal noise channel."""
    drift = np.array([[a, 0.0], [0.0, b]])
    noise = np.array([[0.0, 0.0], [sigma, 0.0]])
    return SystemSpec(drift, (noise,))


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _fmt_c(z: complex) -> str:
    return f"{z.real:.10g}{z.imag:+.10g}j"


def _print_matrix(m: np.ndarray, out) -> None:
    cells = [[_fmt_c(z) for z in row] for row in m]
    width = max(len(c) for row in cells for c in row)
    for row in cells:
        print("  " + "  ".join(c.rjust(width) for c in row), file=out)


def _quantity_name(mode: str) -> str:
    return "spectral radius" if mode == "discrete" else "spectral abscissa"


def _cmd_analyze(args, out) -> int:
    spec = load_system(args.file)
    modes = ["discrete", "continuous"] if args.mode == "both" else [args.mode]
    results = []
    for mode in modes:
        t0 = time.perf_counter()
        if mode == "discrete":
            lower, upper = hermitian_extremes(build_discrete_gram(spec))
            summ = summarize(build_discrete_sum(spec)) if args.exact else None
            exact = summ.radius if summ else None
        else:
            lower, upper = hermitian_extremes(build_continuous_gram(spec))
            summ = summarize(build_continuous_sum(spec)) if args.exact else None
            exact = summ.abscissa if summ else None
        report = BoundReport(lower=lower, upper=upper, exact=exact, mode=mode)
        check_bound_chain(report)
        verdict = verdict_from_report(report, allow_exact_fallback=args.exact)
        elapsed = time.perf_counter() - t0
        results.append((mode, report, verdict, summ, elapsed))

    statuses = [v.status for _, _, v, _, _ in results]
    if any(s in UNSTABLE_STATUSES for s in statuses):
        code = EXIT_UNSTABLE
    elif any(s is StabilityStatus.INDETERMINATE for s in statuses):
        code = EXIT_INDETERMINATE
    else:
        code = EXIT_STABLE

    if args.json:
        doc = {
            "file": str(args.file),
            "results": [
                {
                    "mode": mode,
                    "lower": rep.lower,
                    "upper": rep.upper,
                    "exact": rep.exact,
                    "threshold": verdict.threshold,
                    "status": verdict.status.value,
                    "eigenvalues": (
                        [[z.real, z.imag] for z in summ.eigenvalues] if summ else None
                    ),
                    "elapsed_s": elapsed,
                }
                for mode, rep, verdict, summ, elapsed in results
            ],
            "exit_code": code,
        }
        print(json.dumps(doc), file=out)
    else:
        for mode, rep, verdict, _, elapsed in results:
            q = _quantity_name(mode)
            print(f"== {mode} ==", file=out)
            print(f"  bounds:   {_fmt(rep.lower)} <= {q} <= {_fmt(rep.upper)}", file=out)
            if rep.exact is not None:
                print(f"  exact:    {q} = {_fmt(rep.exact)}", file=out)
            print(
                f"  verdict:  {verdict.status.value}  (threshold {_fmt(verdict.threshold)})",
                file=out,
            )
            print(f"  elapsed:  {elapsed:.6f} s", file=out)
    return code


def _traj_lines(traj, out) -> None:
    for i, idx in enumerate(traj.index):
        doc = {
            "mode": traj.mode,
            "index": idx,
            "V": matrix_pairs(traj.values[i]),
            "second_moment": (
                traj.second_moments[i] if traj.second_moments is not None else None
            ),
        }
        print(json.dumps(doc), file=out)


def _cmd_evolve(args, out) -> int:
    spec = load_system(args.file)
    try:
        u = parse_vector(args.u, spec.d)
        v = parse_vector(args.v, spec.d) if args.v else u
        if args.mode == "discrete":
            if args.steps is None:
                raise ValueError("discrete mode requires --steps")
            routes = ["direct", "kronecker"] if args.route == "both" else [args.route]
            if any(r not in ("direct", "kronecker") for r in routes):
                raise ValueError("discrete route must be direct|kronecker|both")
            trajs = [propagate_discrete(spec, u, v, args.steps, r) for r in routes]
        else:
            if not args.times:
                raise ValueError("continuous mode requires --times")
            t_grid = [float(s) for s in args.times.split(",")]
            routes = ["ode", "kronecker"] if args.route == "both" else [args.route]
            if any(r not in ("ode", "kronecker") for r in routes):
                raise ValueError("continuous route must be ode|kronecker|both")
            trajs = [propagate_continuous(spec, u, v, t_grid, r) for r in routes]
    except (SystemFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADDATA
    except OverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    _traj_lines(trajs[0], out)
    if len(trajs) == 2:
        print(
            json.dumps({"max_route_discrepancy": max_relative_discrepancy(*trajs)}),
            file=out,
        )
    return 0


def _cmd_simulate(args, out) -> int:
    spec = load_system(args.file)
    try:
        u = parse_vector(args.u, spec.d)
        v = parse_vector(args.v, spec.d) if args.v else u
        horizon = int(args.horizon) if args.mode == "discrete" else float(args.horizon)
        cfg = SimulationConfig(
            paths=args.paths, seed=args.seed, noise=args.noise, dt=args.dt, horizon=horizon
        )
        if args.mode == "discrete":
            moments = simulate_discrete(spec, u, v, cfg)
        else:
            if args.dt is None:
                raise ValueError("continuous mode requires --dt")
            moments = simulate_continuous(spec, u, v, cfg)
        comparison = compare_to_exact(moments, spec, u, v)
    except (SystemFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADDATA
    except (SimulationOverflowError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW

    if args.json:
        doc = {
            "mode": moments.mode,
            "paths": moments.paths,
            "seed": args.seed,
            "noise": args.noise,
            "results": [
                {
                    "checkpoint": cp,
                    "mean_outer": matrix_pairs(moments.mean_outer[i]),
                    "std_error": moments.std_error[i].tolist(),
                    "exact": matrix_pairs(comparison.exact[i]),
                    "abs_diff": comparison.abs_diff[i].tolist(),
                    "tolerance": comparison.tolerance[i].tolist(),
                    "entry_pass": comparison.entry_pass[i].tolist(),
                    "second_moment": moments.second_moment[i],
                    "second_moment_se": moments.second_moment_se[i],
                }
                for i, cp in enumerate(moments.checkpoints)
            ],
            "all_passed": comparison.all_passed,
        }
        print(json.dumps(doc), file=out)
    else:
        print(
            f"mode={moments.mode} paths={moments.paths} seed={args.seed} "
            f"noise={args.noise} horizon={_fmt(args.horizon)}"
            + (f" dt={_fmt(args.dt)}" if args.dt is not None else ""),
            file=out,
        )
        d = spec.d
        for i, cp in enumerate(moments.checkpoints):
            print(f"checkpoint {_fmt(cp) if moments.mode == 'continuous' else cp}:", file=out)
            header = f"  {'entry':<8}{'empirical':<28}{'exact':<28}{'|diff|':<14}{'tol':<14}ok"
            print(header, file=out)
            for r in range(d):
                for c in range(d):
                    emp = _fmt_c(moments.mean_outer[i][r, c])
                    exa = _fmt_c(comparison.exact[i][r, c])
                    dif = format(comparison.abs_diff[i][r, c], ".4g")
                    tol = format(comparison.tolerance[i][r, c], ".4g")
                    ok = "yes" if comparison.entry_pass[i][r, c] else "NO"
                    print(f"  ({r},{c})   {emp:<28}{exa:<28}{dif:<14}{tol:<14}{ok}", file=out)
            print(
                f"  E|x|^2 = {_fmt(moments.second_moment[i])}"
                f"  (SE {format(moments.second_moment_se[i], '.4g')})",
                file=out,
            )
        print(f"result: {'PASS' if comparison.all_passed else 'FAIL'}", file=out)
    return EXIT_STABLE if comparison.all_passed else EXIT_UNSTABLE


def _cmd_bench(args, out) -> int:
    dims = [int(s) for s in args.dims.split(",")]
    rows = []
    for d in dims:
        trials = []
        for trial in range(args.trials + 1):  # trial 0 is the discarded warm-up
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=args.seed, spawn_key=(d, trial))
            )
            spec = random_system(rng, d, args.m)
            t0 = time.perf_counter()
            _, upper_n = hermitian_extremes(build_discrete_gram(spec))
            _, upper_m = hermitian_extremes(build_continuous_gram(spec))
            t_bound = time.perf_counter() - t0
            t0 = time.perf_counter()
            rho = summarize(build_discrete_sum(spec)).radius
            alpha = summarize(build_continuous_sum(spec)).abscissa
            t_full = time.perf_counter() - t0
            if trial == 0:
                continue
            gap_d = (upper_n - rho) / abs(rho) if abs(rho) > 1e-300 else float("inf")
            gap_c = (upper_m - alpha) / abs(alpha) if abs(alpha) > 1e-300 else float("inf")
            trials.append(
                {"bound_s": t_bound, "full_s": t_full, "gap_discrete": gap_d, "gap_continuous": gap_c}
            )
        bound_med = statistics.median(t["bound_s"] for t in trials)
        full_med = statistics.median(t["full_s"] for t in trials)
        rows.append(
            {
                "d": d,
                "bound_median_s": bound_med,
                "full_median_s": full_med,
                "speedup": full_med / bound_med if bound_med > 0 else float("inf"),
                "gap_discrete_median": statistics.median(t["gap_discrete"] for t in trials),
                "gap_continuous_median": statistics.median(t["gap_continuous"] for t in trials),
                "trials": trials,
            }
        )
    if args.json:
        print(json.dumps({"seed": args.seed, "m": args.m, "rows": rows}), file=out)
    else:
        print(
            f"{'d':>4}  {'bound_s(med)':>14}  {'full_s(med)':>14}  {'speedup':>9}  "
            f"{'gap_rho(med)':>13}  {'gap_alpha(med)':>14}",
            file=out,
        )
        for row in rows:
            print(
                f"{row['d']:>4}  {row['bound_median_s']:>14.6e}  {row['full_median_s']:>14.6e}  "
                f"{row['speedup']:>9.1f}  {row['gap_discrete_median']:>13.4g}  "
                f"{row['gap_continuous_median']:>14.4g}",
                file=out,
            )
        print(
            "note: gaps are (upper_bound - exact)/|exact|; they can be arbitrarily "
            "large and are reported, not asserted",
            file=out,
        )
    return 0


def _cmd_demo(args, out) -> int:
    a, b, sigma = args.a, args.b, args.sigma
    spec = demo_system(a, b, sigma)
    built = {
        "D (discrete stochastic Kronecker sum)": build_discrete_sum(spec),
        "C (continuous stochastic Kronecker sum)": build_continuous_sum(spec),
        "N (discrete Hermitian companion)": build_discrete_gram(spec),
        "M (continuous Hermitian companion)": build_continuous_gram(spec),
    }
    templates = {
        "D (discrete stochastic Kronecker sum)": np.array(
            [[a * a, 0, 0, 0], [0, a * b, 0, 0], [0, 0, a * b, 0], [sigma ** 2, 0, 0, b * b]],
            dtype=np.complex128,
        ),
        "C (continuous stochastic Kronecker sum)": np.array(
            [[2 * a, 0, 0, 0], [0, a + b, 0, 0], [0, 0, a + b, 0], [sigma ** 2, 0, 0, 2 * b]],
            dtype=np.complex128,
        ),
        "N (discrete Hermitian companion)": np.diag(
            np.array([a * a + sigma ** 2, b * b], dtype=np.complex128)
        ),
        "M (continuous Hermitian companion)": np.diag(
            np.array([2 * a + sigma ** 2, 2 * b], dtype=np.complex128)
        ),
    }
    checks = [
        ("rho(D)", summarize(built["D (discrete stochastic Kronecker sum)"]).radius,
         max(a * a, b * b), "max(a^2, b^2)"),
        ("alpha(C)", summarize(built["C (continuous stochastic Kronecker sum)"]).abscissa,
         max(2 * a, 2 * b), "max(2a, 2b)"),
        ("alpha(N)", hermitian_extremes(built["N (discrete Hermitian companion)"])[1],
         max(a * a + sigma ** 2, b * b), "max(a^2+sigma^2, b^2)"),
        ("alpha(M)", hermitian_extremes(built["M (continuous Hermitian companion)"])[1],
         max(2 * a + sigma ** 2, 2 * b), "max(2a+sigma^2, 2b)"),
    ]
    matrices_match = all(
        float(np.max(np.abs(built[k] - templates[k]))) <= 1e-10 for k in built
    )
    all_pass = matrices_match and all(abs(got - want) <= 1e-10 for _, got, want, _ in checks)

    print(f"worked 2-by-2 family with a={_fmt(a)} b={_fmt(b)} sigma={_fmt(sigma)}", file=out)
    print("drift = diag(a, b); one noise matrix, sigma in the lower-left corner", file=out)
    for name, mat in built.items():
        print(f"\n{name}:", file=out)
        _print_matrix(mat, out)
    print("", file=out)
    for label, got, want, formula in checks:
        ok = "PASS" if abs(got - want) <= 1e-10 else "FAIL"
        print(
            f"{label:<9}= {_fmt(got):<16} expected {formula:<22} = {_fmt(want):<16} {ok}",
            file=out,
        )
    print(
        f"matrices match closed-form templates: {'PASS' if matrices_match else 'FAIL'}",
        file=out,
    )
    return 0 if all_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kronspec",
        description=(
            "Certify spectral radius/abscissa of stochastic Kronecker sums via "
            "small Hermitian bounds, propagate the underlying covariances "
            "exactly, and cross-check by Monte Carlo simulation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bound-based stability certification of a system file")
    p.add_argument("file", help="system JSON file")
    p.add_argument("--mode", choices=["discrete", "continuous", "both"], default="both")
    p.add_argument("--exact", action="store_true", help="also compute the exact d^2 spectrum")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("evolve", help="exact covariance trajectory as JSON lines")
    p.add_argument("file")
    p.add_argument("--mode", choices=["discrete", "continuous"], default="discrete")
    p.add_argument("--u", required=True, help="initial vector as JSON [[re,im],...]")
    p.add_argument("--v", default=None, help="second initial vector (default: same as --u)")
    p.add_argument("--steps", type=int, default=None, help="step count (discrete mode)")
    p.add_argument("--times", default=None, help="comma-separated times (continuous mode)")
    p.add_argument(
        "--route",
        default="kronecker",
        help="discrete: direct|kronecker|both; continuous: ode|kronecker|both",
    )
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("simulate", help="Monte Carlo moments checked against exact propagation")
    p.add_argument("file")
    p.add_argument("--mode", choices=["discrete", "continuous"], default="discrete")
    p.add_argument("--u", required=True)
    p.add_argument("--v", default=None)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=["gaussian", "rademacher"], default="gaussian")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--horizon", type=float, required=True, help="steps (discrete) or time (continuous)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bench", help="time d-by-d Hermitian bounds vs full d^2-by-d^2 spectra")
    p.add_argument("--dims", default="4,8,16,32")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=1, help="noise channels per random system")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("demo", help="worked 2-by-2 family against its closed forms")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=0.7)
    p.add_argument("--sigma", type=float, default=2.0)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except SystemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BADFILE
    except OverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW


if __name__ == "__main__":
    sys.exit(main())
