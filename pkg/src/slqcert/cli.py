"""Command-line front end.

Subcommands: estimate | converge | bracket | lowerbound | synth.
Outputs are CSV or JSON with the version string, the full configuration,
and the seed embedded, so identical invocations produce byte-identical
files.  Exit codes: 0 ok, 1 numerical failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .distribution import average, exact_cesm, wasserstein, weighted_cesm
from .operators import (
    CsrOperator,
    DenseOperator,
    DiagonalOperator,
    MatrixMarketError,
    load_matrix_market,
    spectral_interval,
    write_matrix_market,
)
from .problems import generate, parse_spectrum_spec, verify_lower_bound
from .quadrature import gaussian_quadrature
from .slq import SlqPlan, bracket_cesm, plan as make_plan, run, run_with_added_node
from .tridiag import ConvergenceError

# largest non-diagonal operator the converge command will densify to get
# an exact reference CESM
EXACT_CESM_MAX_DENSE_N = 4096

_DEFAULT_ENDPOINT_MARGIN = 1e-6


class UsageError(ValueError):
    pass


def _add_common_flags(p, planning=True):
    p.add_argument("--input", help="Matrix Market file for the operator")
    p.add_argument("--synth", help="synthetic spectrum spec, e.g. uniform:5000:-1:1")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    if planning:
        p.add_argument("--nv", type=int, help="number of probe vectors")
        p.add_argument("--k", type=int, help="Lanczos steps per probe")
        p.add_argument("--t", type=float, help="accuracy target (fraction of spectral width)")
        p.add_argument("--eta", type=float, help="failure probability")
    p.add_argument(
        "--reorth",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="full reorthogonalization (default on)",
    )
    p.add_argument("--a", type=float, help="lower spectral endpoint override")
    p.add_argument("--b", type=float, help="upper spectral endpoint override")
    p.add_argument("--threads", type=int, default=os.cpu_count(), help="sample-level parallelism")
    p.add_argument("--output", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slqcert",
        description="Estimate the spectral CDF of a symmetric operator with "
        "certified Wasserstein / Kolmogorov-Smirnov error bounds.",
    )
    parser.add_argument("--version", action="version", version=f"slqcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="averaged spectral CDF estimate plus bounds")
    _add_common_flags(p)
    p.add_argument("--add-node", metavar="Y:Z", help="plant a quadrature node near Y with weight Z^2")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("converge", help="error and bound columns over a grid of step counts")
    _add_common_flags(p, planning=False)
    p.add_argument("--nv", type=int, required=True, help="number of probe vectors")
    p.add_argument("--ks", required=True, help="step grid: lo:hi[:step] or comma list")
    p.add_argument(
        "--reference",
        help="reference spectrum file (JSON {'eigenvalues': [...]} or one value per line) "
        "when the exact CESM is not computable",
    )
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("bracket", help="probabilistic bounds on the CDF at chosen points")
    _add_common_flags(p)
    p.add_argument("--add-node", metavar="Y:Z", help="plant a quadrature node near Y with weight Z^2")
    p.add_argument("--xs", required=True, help="evaluation points: lo:hi:count or comma list")
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("lowerbound", help="demonstrate the matvec-budget lower bound")
    p.add_argument("--t", type=float, required=True, help="accuracy target in (0, 1)")
    p.add_argument("--budget", type=int, help="matvec budget (runs one probe with k = budget)")
    p.add_argument("--nv", type=int, help="number of probe vectors")
    p.add_argument("--k", type=int, help="Lanczos steps per probe")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="output file (default: stdout report only)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("synth", help="write a synthetic operator as a Matrix Market file")
    p.add_argument("--synth", required=True, help="spectrum spec, e.g. uniform:100:0:1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="destination Matrix Market file")
    p.set_defaults(func=cmd_synth)

    return parser


def _config_dict(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return cfg


def _config_line(args) -> str:
    return json.dumps(_config_dict(args), sort_keys=True)


def _load_operator(args):
    if (args.input is None) == (args.synth is None):
        raise UsageError("exactly one of --input or --synth is required")
    if args.input is not None:
        if not os.path.exists(args.input):
            raise UsageError(f"input file not found: {args.input}")
        return load_matrix_market(args.input)
    spec = parse_spectrum_spec(args.synth)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    return generate(spec, rng)


def _resolve_plan(args, n) -> SlqPlan:
    explicit = args.nv is not None and args.k is not None
    planned = args.t is not None and args.eta is not None
    if explicit and args.t is not None:
        raise UsageError("give either --nv/--k or --t/--eta, not both")
    if explicit:
        return SlqPlan(n_v=args.nv, k=args.k, eta=args.eta, seed=args.seed)
    if planned:
        if args.nv is not None or args.k is not None:
            raise UsageError("give either --nv/--k or --t/--eta, not both")
        return make_plan(n, args.t, args.eta, seed=args.seed)
    raise UsageError("need --nv and --k, or --t and --eta")


def _parse_add_node(text):
    try:
        y, z = text.split(":")
        return float(y), float(z)
    except ValueError:
        raise UsageError(f"malformed --add-node '{text}', expected Y:Z") from None


def _run_report(op, args, plan_):
    user_endpoints = None
    if args.a is not None or args.b is not None:
        lo, hi, cert = spectral_interval(op)
        user_endpoints = (
            args.a if args.a is not None else lo,
            args.b if args.b is not None else hi,
        )
    add_node = getattr(args, "add_node", None)
    if add_node is not None:
        y, z = _parse_add_node(add_node)
        a, b = (user_endpoints if user_endpoints is not None else (None, None))
        report = run_with_added_node(
            op, plan_, y, z, a, b,
            reorthogonalize=args.reorth, max_workers=args.threads,
        )
    else:
        report = run(
            op, plan_,
            reorthogonalize=args.reorth,
            endpoints=user_endpoints,
            max_workers=args.threads,
        )
    if user_endpoints is None:
        # default endpoints: Ritz-plus-nodes interval widened by a relative
        # margin, since uncertified Ritz values approach the spectrum from inside
        lo, hi = report.interval
        margin = _DEFAULT_ENDPOINT_MARGIN * (hi - lo)
        if margin > 0:
            report = report.with_interval(lo - margin, hi + margin)
    return report


def _open_output(args):
    if args.output is None:
        return sys.stdout, False
    return open(args.output, "w", encoding="ascii"), True


def _write_header_comments(fh, args):
    fh.write(f"# slqcert {__version__}\n")
    fh.write(f"# config {_config_line(args)}\n")
    fh.write(f"# seed {args.seed}\n")


def cmd_estimate(args) -> int:
    op = _load_operator(args)
    plan_ = _resolve_plan(args, op.n)
    report = _run_report(op, args, plan_)
    payload = {
        "version": __version__,
        "config": _config_dict(args),
        "seed": args.seed,
        "report": report.to_json_dict(),
    }
    if args.format == "json":
        fh, close = _open_output(args)
        try:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
        finally:
            if close:
                fh.close()
        return 0
    fh, close = _open_output(args)
    try:
        _write_header_comments(fh, args)
        report.estimate.write_csv(fh)
    finally:
        if close:
            fh.close()
    if args.output is not None:
        sidecar = args.output + ".report.json"
        with open(sidecar, "w", encoding="ascii") as rfh:
            json.dump(payload, rfh, sort_keys=True)
            rfh.write("\n")
    return 0


def _parse_grid(text, integer=False):
    try:
        if ":" in text:
            parts = text.split(":")
            if integer:
                if len(parts) == 2:
                    lo, hi = int(parts[0]), int(parts[1])
                    return list(range(lo, hi + 1))
                if len(parts) == 3:
                    lo, hi, step = (int(p) for p in parts)
                    return list(range(lo, hi + 1, step))
                raise UsageError(f"malformed grid '{text}'")
            if len(parts) == 3:
                lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
                return [float(x) for x in np.linspace(lo, hi, count)]
            raise UsageError(f"malformed grid '{text}' (need lo:hi:count)")
        vals = [p for p in text.split(",") if p.strip()]
        if not vals:
            raise UsageError(f"empty grid '{text}'")
        return [int(v) if integer else float(v) for v in vals]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed grid '{text}'") from exc


def _exact_eigen_info(op):
    """(eigenvalues, eigenvectors-or-None) when exactly computable."""
    if isinstance(op, DiagonalOperator):
        return np.sort(op.eigenvalues), "diagonal"
    if op.n <= EXACT_CESM_MAX_DENSE_N:
        dense = op.to_dense() if isinstance(op, CsrOperator) else op.matrix
        lam, U = np.linalg.eigh(dense)
        return lam, U
    return None, None


def _load_reference(path):
    if not os.path.exists(path):
        raise UsageError(f"reference file not found: {path}")
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return np.asarray(json.loads(text)["eigenvalues"], dtype=np.float64)
    return np.asarray(
        [float(line) for line in text.splitlines() if line.strip()], dtype=np.float64
    )


def _stagnation_diagnostic(cesm, a, b) -> float:
    """Largest predicted bound plateau over the reference spectrum's gaps:
    for each distinct eigenvalue, its mass times the distance between its
    neighbors (interval endpoints at the boundary)."""
    x = cesm.locations
    left = np.concatenate(([a], x[:-1]))
    right = np.concatenate((x[1:], [b]))
    return float(np.max(cesm.masses * (right - left)))


def cmd_converge(args) -> int:
    op = _load_operator(args)
    ks = sorted(set(_parse_grid(args.ks, integer=True)))
    if ks[0] < 1:
        raise UsageError("step counts must be at least 1")
    if ks[-1] > op.n:
        raise UsageError(f"largest k={ks[-1]} exceeds operator dimension {op.n}")
    plan_ = SlqPlan(n_v=args.nv, k=ks[-1], seed=args.seed)

    lam, vectors = (None, None)
    reference = None
    sampled_cdfs = None
    if args.reference is not None:
        reference = exact_cesm(_load_reference(args.reference))
    else:
        lam, vectors = _exact_eigen_info(op)
        if lam is None:
            print(
                "warning: exact CESM infeasible (non-diagonal operator with "
                f"n > {EXACT_CESM_MAX_DENSE_N}) and no --reference given; "
                "omitting the true-error column",
                file=sys.stderr,
            )

    report = _run_report(op, args, plan_)
    a, b = report.interval
    width = b - a

    if lam is not None:
        from .slq import _sample_rng, sample_unit_sphere

        cdfs = []
        for i in range(plan_.n_v):
            v = sample_unit_sphere(op.n, _sample_rng(args.seed, i))
            if vectors == "diagonal":
                cdfs.append(weighted_cesm(op.eigenvalues, v**2))
            else:
                cdfs.append(weighted_cesm(lam, (vectors.T @ v) ** 2))
        sampled_cdfs = average(cdfs)
        stag_source = exact_cesm(lam)
    else:
        stag_source = reference
    stagnation = _stagnation_diagnostic(stag_source, a, b) if stag_source is not None else None

    from .quadrature import apost_wasserstein_bound

    rows = []
    for k in ks:
        rules_k = [
            gaussian_quadrature(T.leading_block(min(k, T.k))) for T in report.tridiagonals
        ]
        estimate_k = average([r.to_distribution() for r in rules_k])
        apost = apost_wasserstein_bound(rules_k, a, b)
        apriori = 12.0 * width / (2.0 * k - 1.0)
        if sampled_cdfs is not None:
            true_dw = wasserstein(sampled_cdfs, estimate_k)
        elif reference is not None:
            true_dw = wasserstein(reference, estimate_k)
        else:
            true_dw = None
        rows.append((k, true_dw, apost, apriori, width / op.n, stagnation))

    have_true = rows and rows[0][1] is not None
    columns = ["k", "true_dw", "apost_dw", "apriori_dw", "floor", "stagnation"]
    if not have_true:
        columns.remove("true_dw")
    if stagnation is None:
        columns.remove("stagnation")

    fh, close = _open_output(args)
    try:
        if args.format == "json":
            payload = {
                "version": __version__,
                "config": _config_dict(args),
                "seed": args.seed,
                "columns": columns,
                "rows": [
                    {c: v for c, v in zip(
                        ["k", "true_dw", "apost_dw", "apriori_dw", "floor", "stagnation"], row
                    ) if c in columns}
                    for row in rows
                ],
            }
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
        else:
            _write_header_comments(fh, args)
            fh.write(",".join(columns) + "\n")
            for row in rows:
                cells = dict(zip(["k", "true_dw", "apost_dw", "apriori_dw", "floor", "stagnation"], row))
                fh.write(",".join(repr(cells[c]) if c != "k" else str(cells[c]) for c in columns) + "\n")
    finally:
        if close:
            fh.close()
    return 0


def cmd_bracket(args) -> int:
    op = _load_operator(args)
    plan_ = _resolve_plan(args, op.n)
    eta = args.eta if args.eta is not None else 0.01
    xs = _parse_grid(args.xs)
    report = _run_report(op, args, plan_)
    bracket = bracket_cesm(report, eta)
    n = report.n
    rows = []
    for x in xs:
        lo, hi = bracket(float(x))
        rows.append((float(x), lo, hi, math.ceil(n * lo), math.floor(n * hi)))

    fh, close = _open_output(args)
    try:
        if args.format == "json":
            payload = {
                "version": __version__,
                "config": _config_dict(args),
                "seed": args.seed,
                "eta": eta,
                "rows": [
                    {"x": r[0], "lower": r[1], "upper": r[2], "count_lo": r[3], "count_hi": r[4]}
                    for r in rows
                ],
            }
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
        else:
            _write_header_comments(fh, args)
            fh.write("x,lower,upper,count_lo,count_hi\n")
            for x, lo, hi, clo, chi in rows:
                fh.write(f"{x!r},{lo!r},{hi!r},{clo},{chi}\n")
    finally:
        if close:
            fh.close()
    return 0


def cmd_lowerbound(args) -> int:
    if args.budget is not None:
        if args.nv is not None or args.k is not None:
            raise UsageError("give --budget or --nv/--k, not both")
        n_v, k = 1, args.budget
    elif args.nv is not None and args.k is not None:
        n_v, k = args.nv, args.k
    else:
        raise UsageError("need --budget or both --nv and --k")
    try:
        measured, threshold, violated = verify_lower_bound(args.t, n_v, k, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(
        f"measured d_W = {measured!r}, threshold t = {threshold!r}, "
        f"matvecs = {n_v * k}, violated = {violated}"
    )
    if args.output is not None:
        with open(args.output, "w", encoding="ascii") as fh:
            if args.format == "json":
                json.dump(
                    {
                        "version": __version__,
                        "config": _config_dict(args),
                        "seed": args.seed,
                        "measured_dw": measured,
                        "threshold": threshold,
                        "violated": violated,
                    },
                    fh,
                    sort_keys=True,
                )
                fh.write("\n")
            else:
                _write_header_comments(fh, args)
                fh.write("measured_dw,threshold,violated\n")
                fh.write(f"{measured!r},{threshold!r},{violated}\n")
    return 1 if violated else 0


def cmd_synth(args) -> int:
    spec = parse_spectrum_spec(args.synth)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    op = generate(spec, rng)
    write_matrix_market(args.output, op)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MatrixMarketError) as exc:
        print(f"slqcert: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"slqcert: i/o error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"slqcert: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
