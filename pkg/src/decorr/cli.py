"""``decorr`` command line.

Exit codes: 0 success, 1 invalid model or failed statistical check, 2 usage
or configuration error, 3 the requested profile does not exist for this model.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys

from . import simulate as sim
from .errors import DecorrError, ModelFormatError, ModelValidationError, PreconditionError
from .modelio import load_model
from .ou import OUModel, check_controllability, check_hurwitz
from .scalar import ScalarLSDEModel
from .spectral import classify, finite_value, limiting_profile, spectral_summary, summary_for, t_epsilon

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NO_PROFILE = 0, 1, 2, 3

DEFAULT_EPS = (1e-2, 1e-3, 1e-4, 1e-5)
DEFAULT_C = (0.5, 0.9, 1.1, 2.0)
METRIC_NAMES = {"kl": "kl", "kl-rev": "kl_rev", "w2": "w2", "tv": "tv"}
NO_PROFILE_MSG = "no decorrelation profile: complex critical eigenvalue (window decorrelation only)"


class UsageError(Exception):
    pass


def fmt(x):
    """Shortest text that round-trips a float (17 significant digits)."""
    return format(float(x), ".17g")


def _eps_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty noise grid")
    return values


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="model JSON file")
    common.add_argument("--metric", default=None, choices=[*METRIC_NAMES, "all"])
    common.add_argument("--r-min", type=float, default=None, help="default -3 (classify: -2)")
    common.add_argument("--r-max", type=float, default=None, help="default 3 (classify: 2)")
    common.add_argument("--r-step", type=float, default=None, help="default 0.1 (classify: 1)")
    common.add_argument("--eps", type=_eps_list, default=None, help="comma-separated noise levels")
    common.add_argument("--c", type=_eps_list, default=None, help="comma-separated window scales")
    common.add_argument("--w", type=float, default=1.0)
    common.add_argument("--t", type=float, default=None)
    common.add_argument("--n", type=int, default=1_000_000)
    common.add_argument("--dt", type=float, default=None, help="Euler step (scalar models); exact sampling if omitted")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (stdout if omitted)")
    common.add_argument("--export", action="store_true", help="simulate: write the sample batch CSV to --out")

    parser = argparse.ArgumentParser(prog="decorr", description="Decorrelation distances for linear SDEs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("check", "validate a model file"),
        ("spectral", "leading eigenvalue data"),
        ("distance", "finite-noise distance at a time"),
        ("profile", "limiting profile curves with finite-noise columns"),
        ("classify", "empirical decorrelation level"),
        ("simulate", "Monte Carlo covariance check"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    return parser


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _r_grid(args, defaults=(-3.0, 3.0, 0.1)):
    lo, hi, step = (d if v is None else v for v, d in zip((args.r_min, args.r_max, args.r_step), defaults))
    if not step > 0 or hi < lo:
        raise UsageError("r grid needs r-step > 0 and r-max >= r-min")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(count)]


def _profile_eps(args):
    eps = list(args.eps or DEFAULT_EPS)
    if any(not 0 < e < math.exp(-1) for e in eps):
        raise UsageError("noise levels must lie in (0, 1/e)")
    return eps


def _metrics(args, model, default, with_w2=False):
    name = args.metric or default
    if name == "all":
        if with_w2 or isinstance(model, ScalarLSDEModel):
            return ["kl", "kl_rev", "w2", "tv"]
        return ["kl", "kl_rev", "tv"]
    return [METRIC_NAMES[name]]


def _as_scalar(model):
    if isinstance(model, OUModel) and model.d == 1:
        return ScalarLSDEModel.from_ou(model)
    return model


# ---------------------------------------------------------------------------
# commands


def cmd_check(args, out):
    model = load_model(args.model, validate=False)
    if isinstance(model, ScalarLSDEModel):
        print(f"hurwitz: ok (vartheta={-model.theta:g}), controllability: ok (rank 1/1)", file=out)
        return EXIT_OK
    stable, top = check_hurwitz(model.Q)
    ok, rank = check_controllability(model.Q, model.sigma)
    h = f"hurwitz: {'ok' if stable else 'FAIL'} (vartheta={top:g})"
    c = f"controllability: ok (rank {rank}/{model.d})" if ok else f"rank condition fails: rank={rank}<{model.d}"
    print(f"{h}, {c}", file=out)
    if stable:
        try:
            summary = spectral_summary(model.Q, model.jordan)
        except DecorrError as exc:
            print(f"note: spectral analysis failed: {exc}", file=out)
        else:
            if not summary.critical_real:
                print("critical eigenvalue: complex", file=out)
    return EXIT_OK if stable and ok else EXIT_FAIL


def cmd_spectral(args, out):
    model = load_model(args.model)
    summary = summary_for(_as_scalar(model))
    eps = _profile_eps(args)
    report = {
        "vartheta": summary.vartheta,
        "m": summary.m,
        "ell": summary.ell,
        "critical_real": summary.critical_real,
        "Gamma": None if summary.Gamma is None else summary.Gamma.tolist(),
        "critical_eigenvalues": [[z.real, z.imag] for z in summary.critical_eigenvalues],
        "spectral_gap": None if math.isinf(summary.spectral_gap) else summary.spectral_gap,
        "t_eps": {repr(e): t_epsilon(summary, e) for e in eps},
        "condition_report": summary.condition_report,
    }
    json.dump(report, out, indent=2)
    out.write("\n")
    return EXIT_OK


def cmd_distance(args, out):
    model = _as_scalar(load_model(args.model))
    summary = summary_for(model)
    eps = model.epsilon
    t = args.t if args.t is not None else t_epsilon(summary, eps)
    if not t >= 0:
        raise UsageError("time must be nonnegative")
    metrics = _metrics(args, model, "all", with_w2=True)
    header, row = ["t"], [fmt(t)]
    for metric in metrics:
        value, err = finite_value(model, metric, t, eps)
        if metric == "w2":
            value, err = value * eps, err * eps
        header.append(metric)
        row.append(fmt(value))
        if metric == "tv":
            header.append("tv_err")
            row.append(fmt(err))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerow(row)
    return EXIT_OK


def cmd_profile(args, out):
    model = _as_scalar(load_model(args.model))
    summary = summary_for(model)
    if not summary.critical_real:
        print(NO_PROFILE_MSG, file=sys.stderr)
        return EXIT_NO_PROFILE
    metrics = _metrics(args, model, "all")
    if "w2" in metrics and not isinstance(model, ScalarLSDEModel):
        print("no W2 profile is available for multivariate models", file=sys.stderr)
        return EXIT_NO_PROFILE
    eps = _profile_eps(args)
    rs = _r_grid(args)
    header = ["r"]
    for metric in metrics:
        header.append(f"G_{metric}")
        if metric == "tv":
            header.append("G_tv_err")
        for e in eps:
            header.append(f"d_eps_{metric}_{e:g}")
            if metric == "tv":
                header.append(f"d_eps_tv_{e:g}_err")
    unit = 1.0 if isinstance(model, ScalarLSDEModel) else 1.0 / abs(summary.vartheta)
    t_eps = {e: (-math.log(e) / model.theta if isinstance(model, ScalarLSDEModel) else t_epsilon(summary, e)) for e in eps}
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for r in rs:
        row = [fmt(r)]
        for metric in metrics:
            g, gerr = limiting_profile(model, summary, metric, r, args.w)
            row.append(fmt(g))
            if metric == "tv":
                row.append(fmt(gerr))
            for e in eps:
                t = t_eps[e] + r * args.w * unit
                if t < 0:
                    v, verr = (1.0 if metric == "tv" else math.inf), 0.0
                else:
                    v, verr = finite_value(model, metric, t, e)
                row.append(fmt(v))
                if metric == "tv":
                    row.append(fmt(verr))
        writer.writerow(row)
    return EXIT_OK


def cmd_classify(args, out):
    model = _as_scalar(load_model(args.model))
    eps = _profile_eps(args)
    if len(eps) < 2:
        raise UsageError("classification needs at least two noise levels")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise UsageError("noise levels must be strictly decreasing")
    metric = _metrics(args, model, "kl")
    if len(metric) != 1:
        raise UsageError("classify takes a single metric")
    rs = _r_grid(args, defaults=(-2.0, 2.0, 1.0))
    report = classify(model, metric[0], eps, rs, args.c or DEFAULT_C, args.w)
    json.dump(report.to_json(), out, indent=2, default=float)
    out.write("\n")
    return EXIT_OK


def cmd_simulate(args, out):
    model = _as_scalar(load_model(args.model))
    if args.n < sim.MIN_CHECK_SAMPLES:
        print("batch too small for pass/fail mode", file=sys.stderr)
        return EXIT_USAGE
    if args.export and args.out is None:
        raise UsageError("--export needs --out for the batch file")
    t = 1.0 if args.t is None else args.t
    if args.dt is not None:
        batch = sim.sample_euler(model, t, args.dt, args.n, args.seed)
    else:
        batch = sim.sample_exact(model, t, args.n, args.seed)
    report = sim.empirical_covariance_check(batch, model)
    text = io.StringIO()
    verdict = "pass" if report.passed else "FAIL"
    print(f"covariance check: {verdict} (n={batch.n}, t={fmt(t)}, scheme={batch.scheme}, seed={args.seed})", file=text)
    for block, ok in report.blocks.items():
        print(f"  {block}: {'pass' if ok else 'FAIL'}", file=text)
    if not report.passed:
        print(report.table(), file=text)
    for note in batch.notes:
        print(f"note: {note}", file=text)
    if args.export:
        sim.export_csv(batch, args.out)
        sys.stdout.write(text.getvalue())
    else:
        with _output(args.out) as fh:
            fh.write(text.getvalue())
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "check": cmd_check,
    "spectral": cmd_spectral,
    "distance": cmd_distance,
    "profile": cmd_profile,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "simulate":
            return cmd_simulate(args, None)
        with _output(args.out) as out:
            return COMMANDS[args.command](args, out)
    except (UsageError, ModelFormatError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        if isinstance(exc, ModelValidationError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        if isinstance(exc, PreconditionError) and "complex critical" in str(exc):
            print(str(exc), file=sys.stderr)
            return EXIT_NO_PROFILE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
