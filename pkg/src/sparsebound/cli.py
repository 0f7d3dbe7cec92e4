"""Command-line interface.

Exit codes: 0 success, 1 configuration or domain error, 2 resource cap
exceeded, 3 acceptance-suite violation.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    FORMS,
    adaptive_lower_bound,
    binary_output_bound,
    cs_feasibility,
    fano_error_lower_bound,
    min_feasible_t,
    snr_necessary,
    uniform_allocation_cap,
)
from .core import LN2, ProblemDims, log_binom, make_rng
from .errors import ResourceCapError, SparseBoundError
from .harness import ExperimentConfig, canonical_json, compare_adaptive_gap, run_trials, sweep
from .infotheory import (
    DiscreteDesign,
    GaussianDesign,
    MiEstimate,
    binary_channel_mi_mc,
    exact_conditional_mi,
    linear_cs_mi_closed_form,
    linear_cs_mi_mc,
)
from .models import coefficient_prior, model_from_dict
from .verify import DEFAULT_SEED, DEFAULT_TRIALS, report_json, run_verify

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_VIOLATION = 0, 1, 2, 3
MODEL_NAMES = ("group_testing", "one_bit_cs", "linear_cs")


def _scale(units: str) -> float:
    return 1.0 if units == "nats" else 1.0 / LN2


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_bound(args) -> int:
    dims = ProblemDims(args.n, args.k, candidate_cap=None)
    s = _scale(args.units)
    result = {"model": args.model, "n": args.n, "k": args.k, "form": args.form, "units": args.units}
    if args.mi is not None:
        values = [float(v) for v in args.mi.split(",")]
        if len(values) == 1:
            values = values * args.k
        report = adaptive_lower_bound(dims, dict(enumerate(values)), args.form)
        result["bound"] = report.to_dict(args.units)
    elif args.model in ("group_testing", "one_bit_cs"):
        result["bound"] = binary_output_bound(dims, args.form).to_dict(args.units)
        result["log_binom"] = log_binom(args.n, args.k) * s
        if args.t is not None:
            result["fano_error_lower_bound"] = fano_error_lower_bound(args.t, LN2, args.n, args.k, 0)
    else:
        if args.snr is None:
            raise SparseBoundError("linear_cs bounds need --snr")
        if args.k < args.n:
            result["snr_necessary"] = snr_necessary(args.n, args.k, args.form)
        result["min_feasible_t"] = min_feasible_t(args.snr, args.n, args.k, args.form)
        if args.t is not None:
            result["feasibility"] = cs_feasibility(args.t, args.snr, args.n, args.k, args.form).to_dict()
            caps = {j: uniform_allocation_cap(args.snr, args.n, args.k, j, args.t) for j in range(args.k)}
            result["bound"] = adaptive_lower_bound(dims, caps, args.form).to_dict(args.units)
    print(canonical_json(result))
    return EXIT_OK


def cmd_mi(args) -> int:
    model = _model_from_args(args)
    rng = make_rng(args.seed)
    k, j = args.k, args.j
    if args.model == "linear_cs":
        if args.rho is None:
            value = linear_cs_mi_closed_form(args.snr, args.n, k, j, args.power)
            est = MiEstimate(value, "closed-form")
        else:
            diag = args.n * args.power / k
            est = linear_cs_mi_mc(args.snr, GaussianDesign.circulant(k, diag, args.rho), j, args.samples, rng)
    elif args.design == "bernoulli":
        dist = DiscreteDesign.bernoulli(args.p if args.p is not None else 1.0 / k)
        values = [exact_conditional_mi(model, dist, k, j, b).value for b in coefficient_prior(model, k)]
        est = MiEstimate(math.fsum(values) / len(values), "exact-enumeration")
    else:
        est = binary_channel_mi_mc(
            model, GaussianDesign.isotropic(k, args.variance), k, j, np.ones(k), args.samples, rng
        )
    d = est.to_dict()
    s = _scale(args.units)
    d["value"] *= s
    if d["std_error"] is not None:
        d["std_error"] *= s
    d["units"] = args.units
    print(canonical_json(d))
    return EXIT_OK


def _model_from_args(args):
    spec = {"name": args.model}
    if args.model == "group_testing":
        spec["crossover"] = args.crossover
    else:
        if args.snr is None:
            raise SparseBoundError(f"{args.model} needs --snr")
        spec["snr"] = args.snr
    return model_from_dict(spec)


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SparseBoundError(f"cannot read config: {exc}") from None
    return ExperimentConfig.from_json(text)


def cmd_simulate(args) -> int:
    report = run_trials(_load_config(args.config))
    _emit(report.to_json(), args.out)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def _parse_values(args) -> list:
    if args.values:
        raw = [v for v in args.values.split(",") if v.strip()]
        return [int(v) if args.param == "t" else float(v) for v in raw]
    start, stop, *step = args.range.split(":")
    if args.param == "t":
        return list(range(int(start), int(stop) + 1, int(step[0]) if step else 1))
    return list(np.linspace(float(start), float(stop), int(step[0]) if step else 10))


def cmd_sweep(args) -> int:
    report = sweep(_load_config(args.config), args.param, _parse_values(args))
    _emit(report.to_json(), args.out)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def cmd_compare(args) -> int:
    gap = compare_adaptive_gap(_load_config(args.nonadaptive), _load_config(args.adaptive))
    _emit(canonical_json(gap), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verify(args.seed, args.trials)
    _emit(report_json(report), args.out)
    status = "passed" if report["passed"] else "FAILED"
    print(
        f"fano-consistency: {len(report['cells'])} cells, {report['violations']} violations: {status}",
        file=sys.stderr,
    )
    return EXIT_OK if report["passed"] else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsebound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate sample-complexity lower bounds")
    p.add_argument("--model", choices=MODEL_NAMES, default="group_testing")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--snr", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--form", choices=FORMS, default="asymptotic")
    p.add_argument("--units", choices=("nats", "bits"), default="nats")
    p.add_argument("--mi", help="per-j (average) MI in nats, comma separated, or one value for all j")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("mi", help="compute a conditional mutual information")
    p.add_argument("--model", choices=MODEL_NAMES, default="group_testing")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--j", type=int, default=0, help="revealed subset size")
    p.add_argument("--design", choices=("bernoulli", "gaussian"), default="bernoulli")
    p.add_argument("--p", type=float, help="Bernoulli inclusion probability (default 1/K)")
    p.add_argument("--crossover", type=float, default=0.0)
    p.add_argument("--snr", type=float)
    p.add_argument("--power", type=float, default=1.0, help="per-step power share P_t")
    p.add_argument("--rho", type=float, help="off-diagonal of a circulant design covariance")
    p.add_argument("--variance", type=float, default=1.0, help="per-coordinate Gaussian variance")
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units", choices=("nats", "bits"), default="nats")
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("simulate", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run an experiment config over a T or SNR grid")
    p.add_argument("--config", required=True)
    p.add_argument("--param", choices=("t", "snr"), required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--values", help="comma-separated grid")
    g.add_argument("--range", help="start:stop[:step] for t, start:stop[:count] for snr")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="nonadaptive vs adaptive error gap at matched budgets")
    p.add_argument("--nonadaptive", required=True)
    p.add_argument("--adaptive", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="run the Fano-consistency acceptance suite")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (SparseBoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
