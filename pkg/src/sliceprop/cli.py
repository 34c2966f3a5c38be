"""Command-line front end: file-driven propagation plus desk-scale studies.

Exit codes: 0 success, 2 input or configuration error, 3 step-too-large
(the requested step exceeds every series order's capability), 4 internal.
Result payloads go to --out or stdout; progress and summaries go to
stderr so piped output stays parseable.
"""

import argparse
import json
import sys

from .errors import IntegratorError, StepTooLargeError
from .hamiltonian import load_manifest, matrix_to_pairs
from .linalg import Precision
from .propagator import create
from .studies import (DrivenQubit, bench_grid, convergence_sweep,
                      fit_convergence_order, format_capability,
                      norm_capability_table, validate_analytic_oracle)

DEFAULT_SWEEP = [10, 32, 100, 316, 1000, 3162, 10000, 31623,
                 100000, 316228, 1000000]


def _int_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _write_text(path, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_propagate(args) -> int:
    system, amps, precision = load_manifest(args.manifest)
    if args.precision is not None:
        precision = Precision.parse(args.precision)
    ctx = create(precision=precision, m_max=args.mmax)
    ctx.set_hamiltonian(system, magnus=args.magnus, quadrature=args.quadrature)
    payload = {"dim": system.dim, "precision": precision.value}
    if args.all:
        cum = ctx.equiprop_all(amps)
        payload["slice_count"] = cum.slice_count
        payload["plan"] = cum.plan
        payload["u_all"] = [matrix_to_pairs(u) for u in cum.u_all]
        payload["u"] = matrix_to_pairs(cum.final)
    else:
        result = ctx.equiprop(amps)
        payload["slice_count"] = result.slice_count
        payload["plan"] = result.plan
        payload["u"] = matrix_to_pairs(result.u)
    plan = payload["plan"]
    if plan is None:
        print("empty amplitude table: identity propagator", file=sys.stderr)
    else:
        print(f"slices {payload['slice_count']}  m_max {plan['m_max']}  "
              f"beta {plan['beta']:.6g}  predicted error {plan['predicted_error']:.3g}",
              file=sys.stderr)
    _write_text(args.out, json.dumps(payload) + "\n")
    return 0


def cmd_converge(args) -> int:
    problem = DrivenQubit(w0=args.w0, w1=args.w1, wrf=args.wrf,
                          duration=args.duration)
    deviation = validate_analytic_oracle(problem)
    print(f"oracle validated: brute-force reference deviates {deviation:.3g}",
          file=sys.stderr)
    rows = convergence_sweep(problem, args.steps_list, magnus=args.magnus,
                             quadrature=args.quadrature, precision=args.precision,
                             phase_align=args.phase_align)
    lines = ["pts,error"]
    lines += [f"{pts},{err:.12e}" for pts, err in rows]
    try:
        order, window = fit_convergence_order([p for p, _ in rows],
                                              [e for _, e in rows])
        lines.append(f"# order,{order:.4f},window,{window[0]},{window[1]}")
        print(f"fitted order {order:.3f} over pts {window[0]}..{window[1]}",
              file=sys.stderr)
    except ValueError as exc:
        lines.append("# order,nan")
        print(f"order fit unavailable: {exc}", file=sys.stderr)
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_bench(args) -> int:
    rows = bench_grid(args.dims, args.steps, precision=args.precision,
                      repeats=args.repeats, seed=args.seed)
    lines = ["dim,pts,seconds"]
    lines += [f"{dim},{pts},{seconds:.6e}" for dim, pts, seconds in rows]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_bounds(args) -> int:
    if args.precision is not None:
        precisions = [Precision.parse(args.precision)]
    else:
        precisions = [Precision.FP32, Precision.FP64]
    lines = ["precision,m,bound"]
    for precision in precisions:
        for m, bound in norm_capability_table(precision):
            lines.append(f"{precision.value},{m},{format_capability(bound)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sliceprop",
        description="Batched slice propagator for driven quantum systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate",
                       help="propagate a JSON manifest, write U as [re, im] JSON")
    p.add_argument("manifest", help="path to a problem manifest")
    p.add_argument("--magnus", action="store_true",
                   help="fourth-order mode with commutator corrections")
    p.add_argument("--quadrature", choices=["midpoint", "simpson"], default=None,
                   help="slice coefficient rule (default: simpson when --magnus, "
                        "else midpoint)")
    p.add_argument("--precision", choices=["fp32", "fp64"], default=None,
                   help="override the manifest's working precision")
    p.add_argument("--mmax", type=int, default=None,
                   help="pin the series order instead of selecting it")
    p.add_argument("--all", action="store_true",
                   help="also write cumulative propagators per slice")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_propagate)

    c = sub.add_parser("converge",
                       help="error vs step count for the driven-qubit reference")
    c.add_argument("--steps-list", dest="steps_list", type=_int_list,
                   default=DEFAULT_SWEEP,
                   help="comma-separated step counts (odd-coerced for simpson)")
    c.add_argument("--magnus", action="store_true")
    c.add_argument("--quadrature", choices=["midpoint", "simpson"], default=None)
    c.add_argument("--precision", choices=["fp32", "fp64"], default="fp64")
    c.add_argument("--phase-align", dest="phase_align", action="store_true",
                   help="remove the global phase before measuring the error")
    c.add_argument("--w0", type=float, default=1.0, help="drift frequency")
    c.add_argument("--w1", type=float, default=0.1, help="drive amplitude")
    c.add_argument("--wrf", type=float, default=1.0, help="drive frequency")
    c.add_argument("--duration", type=float, default=6.0, help="total time")
    c.add_argument("--out", default=None, help="CSV output file (default stdout)")
    c.set_defaults(func=cmd_converge)

    b = sub.add_parser("bench", help="wall-time grid over dims and step counts")
    b.add_argument("--dims", type=_int_list, default=[2, 8])
    b.add_argument("--steps", type=_int_list, default=[1000, 10000, 100000])
    b.add_argument("--precision", choices=["fp32", "fp64"], default="fp64")
    b.add_argument("--repeats", type=int, default=3,
                   help="timed repetitions per point, median reported")
    b.add_argument("--seed", type=int, default=20240911)
    b.add_argument("--out", default=None, help="CSV output file (default stdout)")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("bounds",
                       help="regenerate the per-order step-size capability table")
    t.add_argument("--precision", choices=["fp32", "fp64"], default=None,
                   help="limit to one precision (default: both)")
    t.add_argument("--out", default=None, help="CSV output file (default stdout)")
    t.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StepTooLargeError as exc:
        print(f"error ({exc.code.value}): {exc}", file=sys.stderr)
        return 3
    except IntegratorError as exc:
        print(f"error ({exc.code.value}): {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


def run() -> None:
    sys.exit(main())
