"""Command-line interface.

Subcommands: fit, simulate, distance, test-simplified, test-nested,
select, truncate, study. All randomness flows from --seed through named
substreams, so outputs are byte-identical across runs and thread
counts. Artifacts are written atomically; errors exit non-zero with a
one-line reason.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .boottest import auto_m_bootstrap_test, bootstrap_test, test_simplifying
from .distance import dkl, kl_monte_carlo, kl_numeric, sdkl
from .estimators import ESTIMATOR_CLASSES, make_class_fitter, make_estimator
from .fit import DEFAULT_FAMILYSET
from .rng import substream
from .serialize import (dumps_report, load_csv, load_model, save_csv, save_model,
                        save_report)
from .studies import power_curve, selection_study, truncation_study
from .truncation import emit_trace, optimal_truncation_global, optimal_truncation_sequential

DEFAULT_THREADS = int(os.environ.get("VINEDIST_THREADS", "1"))


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=1, help="master seed")
    parser.add_argument("--threads", type=int, default=DEFAULT_THREADS,
                        help="worker cap; results are thread-count independent")
    parser.add_argument("--out", help="output path (default: stdout)")


def _emit(args, payload):
    text = dumps_report(payload)
    if args.out:
        save_report(payload, args.out)
    else:
        print(text)


def _familyset(arg):
    if not arg:
        return None
    names = tuple(s.strip() for s in arg.split(",") if s.strip())
    return names or None


def _load_config_file(path):
    """key=value overrides, one per line; # comments allowed."""
    overrides = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (need key=value): {line!r}")
            key, value = line.split("=", 1)
            overrides[key.strip()] = value.strip()
    return overrides


def cmd_fit(args):
    data = load_csv(args.data, min_rows=30)
    kwargs = {}
    if args.familyset:
        kwargs["familyset"] = _familyset(args.familyset)
    if args.truncation_level is not None:
        kwargs["truncation_level"] = args.truncation_level
    est = make_estimator(args.structure_class, **kwargs)
    est.fit(data)
    out = args.out or "model.json"
    save_model(est.model_, out)
    print(f"fitted {args.structure_class} model: {est.model_!r} -> {out}")
    return 0


def cmd_simulate(args):
    model = load_model(args.model)
    sample = model.sample(args.n, substream(args.seed, "sim"))
    out = args.out or "sample.csv"
    save_csv(sample, out)
    print(f"wrote {args.n} x {model.d} sample -> {out}")
    return 0


def cmd_distance(args):
    f = load_model(args.model_f)
    g = load_model(args.model_g)
    labels = (os.path.basename(args.model_f), os.path.basename(args.model_g))
    if args.method == "kl":
        report = kl_numeric(f, g, labels=labels)
    elif args.method == "mc":
        mc = kl_monte_carlo(f, g, args.mc_samples, substream(args.seed, "mc"))
        _emit(args, {"method": "kl_mc", "value": mc.estimate,
                     "std_error": mc.std_error, "n_clamped": mc.n_clamped,
                     "model_f": labels[0], "model_g": labels[1]})
        return 0
    elif args.method == "dkl":
        report = dkl(f, g, eps=args.eps, n=args.n_grid, labels=labels)
    else:
        report = sdkl(f, g, eps=args.eps, n=args.n_grid, labels=labels)
    _emit(args, report.to_dict())
    return 0


def cmd_test_simplified(args):
    data = load_csv(args.data, min_rows=30)
    result = test_simplifying(
        data, m=args.m, alpha=args.alpha, familyset=_familyset(args.familyset),
        rng=substream(args.seed, "test"), threads=args.threads,
        protocol=args.protocol)
    _emit(args, result.to_dict() | {"seed": args.seed})
    return 0


def cmd_test_nested(args):
    data = load_csv(args.data, min_rows=30)
    fit_f = make_class_fitter(args.class_f)
    fit_g = make_class_fitter(args.class_g)
    runner = auto_m_bootstrap_test if args.auto_m else bootstrap_test
    result = runner(data, fit_f, fit_g, m=args.m, alpha=args.alpha,
                    rng=substream(args.seed, "test"), threads=args.threads)
    _emit(args, result.to_dict() | {"seed": args.seed, "class_f": args.class_f,
                                    "class_g": args.class_g})
    return 0


def cmd_select(args):
    from .selection import score_models

    data = load_csv(args.data, min_rows=30)
    names = [s.strip() for s in args.candidates.split(",") if s.strip()]
    cands = []
    for name in names:
        est = make_estimator(name).fit(data)
        cands.append((name, est.model_, est.n_params_))
    table = score_models(data, cands)
    print(table.format())
    if args.out:
        save_report(table.to_dict(), args.out)
    return 0


def cmd_truncate(args):
    data = load_csv(args.data, min_rows=30)
    algo = (optimal_truncation_global if args.algorithm == "global"
            else optimal_truncation_sequential)
    trace = algo(data, alpha=args.alpha, m=args.m,
                 familyset=_familyset(args.familyset),
                 rng=substream(args.seed, "trunc"), threads=args.threads)
    if args.trace:
        emit_trace(trace, args.trace)
    _emit(args, trace.to_dict() | {"seed": args.seed})
    return 0


def _write_rows_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def cmd_study(args):
    overrides = _load_config_file(args.config) if args.config else {}

    def opt(key, default, cast):
        if key in overrides:
            return cast(overrides[key])
        return default

    t0 = time.time()
    if args.preset == "power-curve":
        rows = power_curve(
            a=opt("a", 0.3, float),
            b_values=None if "b_values" not in overrides else
            [float(x) for x in overrides["b_values"].split()],
            n=opt("n", 500, int), p=opt("p", 250, int), m=opt("m", 100, int),
            alpha=opt("alpha", 0.05, float), seed=args.seed, threads=args.threads,
            progress=lambda row: print(f"b={row['b']:+.1f} rate={row['rate']:.3f} "
                                       f"({row['seconds']}s)", file=sys.stderr))
        out = args.out or "power_curve.csv"
        _write_rows_csv(out, rows)
    elif args.preset == "selection":
        summary, _ = selection_study(reps=opt("reps", 100, int), n=opt("n", 3000, int),
                                     seed=args.seed)
        out = args.out or "selection_study.json"
        save_report(summary, out)
    elif args.preset == "truncation":
        rows = truncation_study(
            d=opt("d", 8, int), true_level=opt("true_level", 4, int),
            nu=opt("nu", 3.0, float), n=opt("n", 2000, int),
            runs=opt("runs", 10, int), m=opt("m", 100, int),
            alpha=opt("alpha", 0.05, float),
            familyset=_familyset(opt("familyset", "gaussian", str)),
            seed=args.seed, threads=args.threads,
            progress=lambda row: print(f"run {row['run']}: global={row['k_global']} "
                                       f"sequential={row['k_sequential']}", file=sys.stderr))
        out = args.out or "truncation_study.csv"
        _write_rows_csv(out, rows)
    else:
        raise ValueError(f"unknown preset {args.preset!r}")
    print(f"study {args.preset} -> {out} ({time.time() - t0:.1f}s, seed {args.seed})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vinedist",
        description="Vine copula model distances, bootstrap tests, truncation")
    parser.add_argument("--version", action="version", version=f"vinedist {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a dependence model to copula-scale CSV data")
    p.add_argument("data")
    p.add_argument("--structure-class", default="rvine", dest="structure_class",
                   choices=sorted(ESTIMATOR_CLASSES))
    p.add_argument("--familyset", help="comma-separated families")
    p.add_argument("--truncation-level", type=int, dest="truncation_level")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="sample from a saved model")
    p.add_argument("model")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("distance", help="distance between two saved models")
    p.add_argument("model_f")
    p.add_argument("model_g")
    p.add_argument("--method", choices=("kl", "mc", "dkl", "sdkl"), default="dkl")
    p.add_argument("--eps", type=float, default=0.025)
    p.add_argument("--n-grid", type=int, default=10, dest="n_grid")
    p.add_argument("--mc-samples", type=int, default=10000, dest="mc_samples")
    _add_common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("test-simplified",
                       help="bootstrap test: simplified vs non-simplified vine")
    p.add_argument("data")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--familyset")
    p.add_argument("--protocol", choices=("fixed", "reselect"), default="fixed")
    _add_common(p)
    p.set_defaults(func=cmd_test_simplified)

    p = sub.add_parser("test-nested", help="bootstrap test of two nested classes")
    p.add_argument("data")
    p.add_argument("--class-f", required=True, dest="class_f",
                   choices=sorted(ESTIMATOR_CLASSES))
    p.add_argument("--class-g", required=True, dest="class_g",
                   choices=sorted(ESTIMATOR_CLASSES))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--auto-m", action="store_true", dest="auto_m",
                   help="double M (to 800) until the adequacy check passes")
    _add_common(p)
    p.set_defaults(func=cmd_test_nested)

    p = sub.add_parser("select", help="score candidate model classes on data")
    p.add_argument("data")
    p.add_argument("--candidates", default="gaussian,tcopula,cvine,dvine,rvine")
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("truncate", help="optimal truncation level of a vine")
    p.add_argument("data")
    p.add_argument("--algorithm", choices=("global", "sequential"), default="global")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--familyset")
    p.add_argument("--trace", help="write the per-level curve CSV here")
    _add_common(p)
    p.set_defaults(func=cmd_truncate)

    p = sub.add_parser("study", help="run a named simulation study preset")
    p.add_argument("preset", choices=("power-curve", "selection", "truncation"))
    p.add_argument("--config", help="key=value overrides file")
    _add_common(p)
    p.set_defaults(func=cmd_study)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.time()
    try:
        code = args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"[vinedist {__version__}] {args.command} done in {time.time() - t0:.2f}s "
          f"(seed {getattr(args, 'seed', '-')})", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
