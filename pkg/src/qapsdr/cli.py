"""Command line front end.

Subcommands map one-to-one onto the library layers: ``gen`` writes an
instance file, ``solve`` runs the relaxation on one, ``certify`` builds
and verifies the dual certificate, ``oracle`` brute-forces small
instances, ``sweep`` runs a noise grid from a JSON config, and ``plot``
turns a sweep CSV into an SVG.

Exit codes: 0 on success, 2 for invalid input or configuration, 3 when a
single solve ends in numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .certificates import (
    build_cost_identity_frame,
    check_exactness_condition,
    construct_certificate_sdr1,
    construct_certificate_sdr2,
    delta_in_truth_frame,
    lambda2_bound,
    verify_kkt,
)
from .errors import InvalidInput, QapError
from .formulation import (
    SdrVariant,
    build_constraints,
    build_cost,
    correlation,
    is_exact,
    round_to_permutation,
)
from .harness import (
    SweepConfig,
    aggregate,
    emit_plot,
    read_csv,
    run_sweep,
    write_csv,
)
from .instances import (
    brute_force_qap,
    gen_correlated_wigner,
    gen_diag_gaussian,
    gen_diag_plus_wigner,
    instance_from_dict,
    instance_to_dict,
    qap_objective,
)
from .solver import (
    STATUS_NUMERICAL_FAILURE,
    SdpProblem,
    SolverSettings,
    solve,
)


def _emit(payload: dict, path) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_instance(path: str):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def _parse_profile(text):
    if text is None:
        return None
    return tuple(float(v) for v in text.split(","))


def cmd_gen(args) -> int:
    profile = _parse_profile(args.profile)
    if profile is None:
        profile = tuple(float(k) for k in range(1, args.n + 1))
    if args.model == "diag_gaussian":
        inst = gen_diag_gaussian(args.n, profile, args.sigma, args.seed)
    elif args.model == "diag_plus_wigner":
        inst = gen_diag_plus_wigner(args.n, profile, args.sigma, args.seed)
    else:
        inst = gen_correlated_wigner(args.n, args.sigma, args.seed)
    _emit(instance_to_dict(inst), args.output)
    return 0


def _settings_from(args) -> SolverSettings:
    kw = {}
    if args.tol is not None:
        kw["tol_primal"] = args.tol
        kw["tol_dual"] = args.tol
    if args.max_iters is not None:
        kw["max_iters"] = args.max_iters
    return SolverSettings(**kw)


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    cost = build_cost(inst.A, inst.C, args.cost)
    cons = build_constraints(inst.n, args.variant)
    result = solve(SdpProblem(cost=cost, constraints=cons), _settings_from(args))
    perm = round_to_permutation(result.X_hat)
    payload = {
        "objective": result.objective,
        "rounded_sigma": list(perm.sigma),
        "rounded_objective": qap_objective(inst.A, inst.C, perm),
        "status": result.status,
        "iterations": result.iterations,
        "primal_residual": result.primal_residual,
        "dual_residual": result.dual_residual,
        "wall_time_s": result.wall_time,
    }
    if inst.truth is not None:
        corr = correlation(result.X_hat, inst.truth)
        payload["corr"] = corr
        try:
            payload["exact"] = is_exact(corr)
        except InvalidInput:
            payload["exact"] = False
    else:
        payload["corr"] = None
        payload["exact"] = None
    _emit(payload, args.output)
    if result.status == STATUS_NUMERICAL_FAILURE:
        return 3
    return 0


def cmd_certify(args) -> int:
    inst = _load_instance(args.instance)
    delta = delta_in_truth_frame(inst)
    cond = check_exactness_condition(inst.A, delta)
    variant = SdrVariant(args.variant) if args.variant in ("I", "II") else args.variant
    if variant == SdrVariant.SDR_II:
        cert = construct_certificate_sdr2(inst.A, delta, t=args.t, t_prime=args.t_prime)
    else:
        cert = construct_certificate_sdr1(inst.A, delta, t=args.t)
    M = build_cost_identity_frame(inst.A, delta)
    report = verify_kkt(cert, M, inst.n)
    payload = {
        "condition": {
            "lhs": cond.lhs,
            "rhs": cond.rhs,
            "holds": cond.holds,
            "margin": cond.margin,
        },
        "lambda2_bound": lambda2_bound(inst.A, delta),
        "kkt": {
            "b_nonneg_min": report.b_nonneg_min,
            "b_support_violation": report.b_support_violation,
            "q_kernel_residual": report.q_kernel_residual,
            "lambda2_Q": report.lambda2_Q,
            "passes": report.passes,
            "variant": report.variant,
        },
        "t": cert.t,
        "c": cert.c,
    }
    if cert.sdr2_extras is not None:
        payload["t_prime"] = cert.sdr2_extras["t_prime"]
    _emit(payload, args.output)
    return 0


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    perm, value = brute_force_qap(inst.A, inst.C)
    _emit({"sigma": list(perm.sigma), "objective": value}, args.output)
    return 0


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        config = SweepConfig.from_dict(json.load(fh))
    out_path = args.output if args.output is not None else config.output_path
    if out_path is None:
        raise QapError("no output path: pass --output or set output_path in the config")

    progress = None
    if args.progress:
        def progress(rec):
            print(
                f"sigma={rec.sigma:g} trial={rec.trial} corr={rec.corr:.6f} "
                f"exact={'yes' if rec.exact else 'no'} status={rec.solver_status} "
                f"({rec.wall_time_s:.1f}s)",
                file=sys.stderr,
                flush=True,
            )

    records = run_sweep(config, clock=time.perf_counter, progress=progress)
    write_csv(records, out_path)
    if args.plot is not None:
        emit_plot(aggregate(records), args.plot)
    return 0


def cmd_plot(args) -> int:
    records = read_csv(args.csv)
    out = args.output
    if out is None:
        out = args.csv + ".svg" if not args.csv.endswith(".csv") else args.csv[:-4] + ".svg"
    emit_plot(aggregate(records), out)
    return 0


def _add_output(p):
    p.add_argument("-o", "--output", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qapsdr",
        description="Semidefinite relaxations of the quadratic assignment problem.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance as JSON")
    p.add_argument("--model", default="diag_gaussian",
                   choices=("diag_gaussian", "diag_plus_wigner", "correlated_wigner"))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", default=None,
                   help="comma-separated eigenvalues for the diagonal models "
                        "(default 1..n)")
    _add_output(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve the relaxation for one instance")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--variant", default="I", choices=("I", "II"))
    p.add_argument("--cost", default="squared_difference",
                   choices=("squared_difference", "negated_kron"))
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    _add_output(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="build and verify the dual certificate")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--variant", default="I", choices=("I", "II"))
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--t-prime", type=float, default=None)
    _add_output(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("oracle", help="brute-force optimum (small n only)")
    p.add_argument("instance", help="instance JSON file")
    _add_output(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="run a noise sweep from a JSON config")
    p.add_argument("config", help="sweep config JSON file")
    p.add_argument("-o", "--output", default=None, help="CSV output path")
    p.add_argument("--plot", default=None, help="also render an SVG to this path")
    p.add_argument("--progress", action="store_true",
                   help="print per-trial progress to stderr")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a sweep CSV as an SVG chart")
    p.add_argument("csv", help="sweep CSV file")
    _add_output(p)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
