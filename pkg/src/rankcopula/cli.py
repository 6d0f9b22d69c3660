"""Command-line front end.

    rankcopula estimate data.csv -n 5 --plot density.svg
    rankcopula gof data.csv -n 12
    rankcopula indep --scenario quadratic --a 0.57 --sample-size 30 -n 9
    rankcopula power --preset 30 --scan 2..21 --num-subsamples inf
    rankcopula thresholds --sample-size 30 --scan 2..21 --threshold-cache thr.json

Reports are JSON with sorted keys (or aligned text where offered) and contain
no timestamps, so identical flags give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import AllSubsamplesTied, BivariateSample, SubsampleScheme, TiesDetected, derive_stream, spawn_seed
from .estimator import estimate_gamma, limit_gamma, parse_num_subsamples
from .gof import GofConfig, gof_test
from .indep_bench import (
    BENCHMARK_AMPLITUDES,
    DependenceKind,
    DependenceScenario,
    deheuvels_test,
    indep_test,
    scenario_sample,
    smart_test,
)
from .power import TestSpec, ThresholdCache, default_size_range, new_thresholds, power_table, test_threshold

_TAG_CLI = 0x434C49


class CliError(Exception):
    pass


# -- input / output ---------------------------------------------------------


def read_pairs(path: str) -> BivariateSample:
    """Two comma-separated numeric columns; a non-numeric first line is taken as a header."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc
    xs, ys = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise CliError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            if not xs and lineno == 1:
                continue
            raise CliError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
        xs.append(x)
        ys.append(y)
    try:
        return BivariateSample(np.array(xs), np.array(ys))
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return "inf" if obj == math.inf else obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def density_svg(mass: np.ndarray, radius_mode: bool = False, size: int = 400) -> str:
    """Circles at the grid atoms; area proportional to mass, or radius with ``radius_mode``."""
    n = mass.shape[0]
    pad = 20
    cell = (size - 2 * pad) / n
    top = mass.max()
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" fill="none" stroke="black"/>',
    ]
    for p in range(n):
        for q in range(n):
            w = mass[p, q] / top if top > 0 else 0.0
            r = 0.5 * cell * (w if radius_mode else math.sqrt(w))
            if r <= 0:
                continue
            cx = pad + (p + 0.5) * cell
            cy = size - pad - (q + 0.5) * cell
            lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r:.3f}" fill="black"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _advisory(n: int, N: int) -> list[str]:
    if n * n > N:
        return [f"subsample size {n} has n^2 > N = {N}; the grid is coarse relative to the data"]
    return []


def _parse_scan(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            sizes = list(range(int(lo), int(hi) + 1))
        else:
            sizes = [int(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size range {text!r}; use 2..21 or 4,8,12") from None
    if not sizes or min(sizes) < 2:
        raise argparse.ArgumentTypeError(f"sizes must be >= 2, got {text!r}")
    return sizes


def _parse_m(text: str):
    try:
        return parse_num_subsamples(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_scenario(text: str) -> DependenceScenario:
    """``kind:a`` such as ``donut:2.9``."""
    try:
        kind, a = text.split(":")
        return DependenceScenario(DependenceKind(kind), float(a))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scenario {text!r}; use kind:a, e.g. linear:0.38") from None


def _m_field(m):
    return "inf" if m == math.inf else int(m)


def _cache(path) -> ThresholdCache:
    try:
        return ThresholdCache(path)
    except (ValueError, KeyError) as exc:
        raise CliError(f"threshold cache {path}: {exc}") from exc


# -- commands ---------------------------------------------------------------


def cmd_estimate(args) -> int:
    sample = read_pairs(args.input)
    n = args.subsample_size
    if n > sample.size:
        raise CliError(f"subsample size {n} exceeds sample size {sample.size}")
    m = args.num_subsamples if args.num_subsamples is not None else SubsampleScheme.default_m(n)
    if m == math.inf:
        density = limit_gamma(sample, n)
        discarded = 0
    else:
        density, discarded = estimate_gamma(sample, SubsampleScheme(n, int(m), args.seed), args.threads)
    meta = {"n": n, "m": _m_field(m), "seed": args.seed, "N": sample.size, "discarded": discarded,
            "retained": "inf" if m == math.inf else int(m) - discarded, "notes": _advisory(n, sample.size)}
    if args.format == "csv":
        head = "".join(f"# {k}={meta[k]}\n" for k in ("n", "m", "seed", "N", "discarded", "retained"))
        body = "\n".join(",".join(repr(float(x)) for x in row) for row in density.mass)
        emit(head + body + "\n", args.output)
    else:
        emit(dump_json({**meta, "mass": density.mass}), args.output)
    if args.plot:
        Path(args.plot).write_text(density_svg(density.mass, args.radius_mode))
    return 0


def cmd_gof(args) -> int:
    sample = read_pairs(args.input)
    config = GofConfig(
        subsample_size=args.subsample_size,
        num_subsamples=args.num_subsamples,
        reference_multiplier=args.reference_multiplier,
        reference_subsamples=args.reference_subsamples,
        null_replicates=args.reps,
        alpha=args.alpha,
        seed=args.seed,
        refit=not args.no_refit,
        threads=args.threads,
    )
    outcome = gof_test(sample, config)
    doc = {"test": "gof-frank", **outcome.as_dict(), "decision": "reject" if outcome.reject else "accept",
           "notes": _advisory(config.subsample_size, sample.size)}
    emit(dump_json(doc), args.output)
    return 0


def _indep_sample(args) -> tuple[BivariateSample, dict]:
    if args.input:
        if args.scenario or args.a is not None:
            raise CliError("give either an input file or --scenario/--a, not both")
        return read_pairs(args.input), {"input": args.input}
    if not args.scenario or args.a is None or args.sample_size is None:
        raise CliError("simulating needs --scenario, --a and --sample-size")
    sc = DependenceScenario(DependenceKind(args.scenario), args.a)
    stream = derive_stream(spawn_seed(args.seed, _TAG_CLI, args.sample_size), sc.tag)
    return scenario_sample(sc, args.sample_size, stream), {"scenario": sc.kind.value, "a": sc.a}


def cmd_indep(args) -> int:
    sample, origin = _indep_sample(args)
    N = sample.size
    cache = _cache(args.threshold_cache)
    if args.test == "new":
        if args.subsample_size is None:
            raise CliError("the new test needs --subsample-size")
        if args.subsample_size > N:
            raise CliError(f"subsample size {args.subsample_size} exceeds sample size {N}")
    if args.test == "smart" and "scenario" not in origin and args.form is None:
        raise CliError("the smart test needs --form (or --scenario) to know the dependence form")
    spec = TestSpec(args.test, args.alpha, args.subsample_size, args.num_subsamples)
    form = origin.get("scenario", args.form)
    misses = cache.misses
    threshold = test_threshold(spec, N, form, args.threshold_reps, args.threshold_seed, cache)
    if args.test == "new":
        outcome = indep_test(sample, spec.subsample_size, spec.m, args.alpha, threshold, spawn_seed(args.seed, _TAG_CLI),
                             args.threads)
        outcome.details["num_subsamples"] = _m_field(spec.m)
    elif args.test == "deheuvels":
        outcome = deheuvels_test(sample, args.alpha, threshold)
    else:
        outcome = smart_test(form, sample, args.alpha, ks_critical=threshold)
    doc = {**outcome.as_dict(), **origin, "sample_size": N, "seed": args.seed,
           "threshold_reps": args.threshold_reps, "threshold_seed": args.threshold_seed,
           "decision": "reject" if outcome.reject else "accept",
           "notes": _advisory(spec.subsample_size, N) if args.test == "new" else []}
    emit(dump_json(doc), args.output)
    if args.threshold_cache and cache.misses > misses:
        print(f"note: threshold computed and stored in {args.threshold_cache}", file=sys.stderr)
    return 0


def _scenarios(args) -> list[DependenceScenario]:
    if args.preset is not None and args.scenario:
        raise CliError("give either --preset or --scenario, not both")
    if args.preset is not None:
        if args.preset not in BENCHMARK_AMPLITUDES:
            raise CliError(f"no preset for N={args.preset}; available: {sorted(BENCHMARK_AMPLITUDES)}")
        return [DependenceScenario(k, a) for k, a in BENCHMARK_AMPLITUDES[args.preset]]
    if not args.scenario:
        raise CliError("power needs --preset or at least one --scenario kind:a")
    return list(args.scenario)


def cmd_power(args) -> int:
    N = args.sample_size if args.sample_size is not None else args.preset
    if N is None:
        raise CliError("power needs --sample-size (or --preset)")
    if args.preset is not None and args.sample_size is not None and args.sample_size != args.preset:
        raise CliError(f"--sample-size {args.sample_size} contradicts --preset {args.preset}")
    scenarios = _scenarios(args)
    if args.subsample_size is not None and args.scan is not None:
        raise CliError("give either --subsample-size or --scan, not both")
    sizes = [args.subsample_size] if args.subsample_size is not None else (args.scan or default_size_range(N))
    if max(sizes) > N:
        raise CliError(f"subsample sizes must not exceed N={N}")
    m = args.num_subsamples
    report = power_table(scenarios, N, sizes, m if m is not None else _default_m_marker(sizes), args.alpha,
                         args.reps, args.seed, args.threshold_reps, _cache(args.threshold_cache), args.threads)
    emit(report.render_text() + "\n" if args.format == "text" else dump_json(report.to_dict()), args.output)
    return 0


def _default_m_marker(sizes):
    ms = {SubsampleScheme.default_m(n) for n in sizes}
    if len(ms) != 1:
        raise CliError("the default number of subsamples differs across the scanned sizes; pass --num-subsamples")
    return ms.pop()


def cmd_thresholds(args) -> int:
    if not args.threshold_cache:
        raise CliError("thresholds needs --threshold-cache to store its results")
    cache = _cache(args.threshold_cache)
    N = args.sample_size
    rows = {}
    if args.test == "new":
        sizes = [args.subsample_size] if args.subsample_size is not None else (args.scan or default_size_range(N))
        if max(sizes) > N:
            raise CliError(f"subsample sizes must not exceed N={N}")
        m = args.num_subsamples if args.num_subsamples is not None else _default_m_marker(sizes)
        rows = new_thresholds(N, sizes, m, args.alpha, args.reps, args.seed, cache)
    elif args.test == "deheuvels":
        rows = {"-": test_threshold(TestSpec("deheuvels", args.alpha), N, None, args.reps, args.seed, cache)}
    else:
        rows = {"donut": test_threshold(TestSpec("smart", args.alpha), N, DependenceKind.DONUT, args.reps, args.seed, cache)}
    emit(dump_json({"test": args.test, "sample_size": N, "alpha": args.alpha, "reps": args.reps, "seed": args.seed,
                    "thresholds": rows}), args.output)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankcopula", description="Subsampled discrete copula densities and rank tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, reps_default, reps_help):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--reps", type=int, default=reps_default, help=reps_help)
        p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
        p.add_argument("--output", "-o", help="write the report here instead of standard output")

    p = sub.add_parser("estimate", help="subsampled grid density of a data file")
    p.add_argument("input")
    p.add_argument("--subsample-size", "-n", type=int, required=True)
    p.add_argument("--num-subsamples", "-m", type=_parse_m, default=None, help="count, or 'inf' for the exact limit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--plot", help="write an SVG picture of the density")
    p.add_argument("--radius-mode", action="store_true", help="circle radius (not area) proportional to mass")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gof", help="goodness of fit to the likeliest Frank copula")
    p.add_argument("input")
    p.add_argument("--subsample-size", "-n", type=int, required=True)
    p.add_argument("--num-subsamples", "-m", type=_parse_m, default=None)
    p.add_argument("--reference-multiplier", type=int, default=1000)
    p.add_argument("--reference-subsamples", type=int, default=None)
    p.add_argument("--no-refit", action="store_true", help="score null samples against the observed fit's reference")
    p.add_argument("--format", choices=("json",), default="json")
    common(p, 500, "null replicates")
    p.set_defaults(func=cmd_gof)

    def indep_flags(p):
        p.add_argument("--test", choices=("new", "deheuvels", "smart"), default="new")
        p.add_argument("--subsample-size", "-n", type=int, default=None)
        p.add_argument("--num-subsamples", "-m", type=_parse_m, default=None)
        p.add_argument("--threshold-cache", help="JSON file of simulated thresholds, read and extended")

    p = sub.add_parser("indep", help="one independence test on a file or a simulated scenario")
    p.add_argument("input", nargs="?")
    p.add_argument("--scenario", choices=[k.value for k in DependenceKind])
    p.add_argument("--a", type=float, default=None, help="scenario amplitude")
    p.add_argument("--sample-size", "-N", type=int, default=None)
    p.add_argument("--form", choices=[k.value for k in DependenceKind], help="dependence form for --test smart on a file")
    p.add_argument("--threshold-reps", type=int, default=3000)
    p.add_argument("--threshold-seed", type=int, default=0)
    indep_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_indep)

    p = sub.add_parser("power", help="power table of the new test over sizes and scenarios")
    p.add_argument("--preset", type=int, default=None, help="the eight benchmark scenarios for this N (30 or 300)")
    p.add_argument("--scenario", type=_parse_scenario, action="append", help="kind:a, repeatable")
    p.add_argument("--sample-size", "-N", type=int, default=None)
    p.add_argument("--subsample-size", "-n", type=int, default=None)
    p.add_argument("--scan", type=_parse_scan, default=None, help="sizes, e.g. 2..21")
    p.add_argument("--num-subsamples", "-m", type=_parse_m, default=None)
    p.add_argument("--threshold-reps", type=int, default=3000)
    p.add_argument("--threshold-cache")
    p.add_argument("--format", choices=("json", "text"), default="json")
    common(p, 1000, "scenario samples per cell")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("thresholds", help="simulate critical values into a cache file")
    p.add_argument("--sample-size", "-N", type=int, required=True)
    p.add_argument("--scan", type=_parse_scan, default=None)
    indep_flags(p)
    common(p, 3000, "null replicates")
    p.set_defaults(func=cmd_thresholds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, TiesDetected, AllSubsamplesTied, ValueError, OverflowError) as exc:
        print(f"rankcopula {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
