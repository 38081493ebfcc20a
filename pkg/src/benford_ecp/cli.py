"""Command-line front end.

Exit codes: 0 success, 1 computational failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .contamination import parse_contaminant
from .digits import IngestPolicy, count_digits, frequencies, read_values
from .ecp import SearchConfig, estimate_ecp, min_ecp_for_significance, min_n_for_significance
from .errors import BenfordError, DataError, InversionError, SearchCapError
from .expectation import expected_statistic
from .report import AnalysisReport, StatisticRow
from .sampling import NULL_MODELS
from .simulation import (
    CriticalValueCache,
    GridSpec,
    TABLE1_FRACTIONS,
    TABLE1_SIZES,
    critical_value_curve,
    format_grid,
    grid_to_dict,
    null_critical_values,
    run_grid,
    write_grid_csv,
)
from .statistics import (
    ALL_KINDS,
    MAD_CUTOFFS,
    SSD_CUTOFFS,
    StatisticKind,
    classify_mad,
    classify_ssd,
    compute_all,
)

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2

PLANNING_SIZES = (100, 500, 1000, 5000, 10_000, 50_000, 100_000, 500_000, 1_000_000)
PLANNING_FRACTIONS = (0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99)
FIGURE_SIZES = (100, 500, 5000, 10_000, 100_000)
PLANNING_KINDS = (StatisticKind.CHI2, StatisticKind.SSD, StatisticKind.MAD)
# Planning tables use the independent-normal null for SSD, multinomial otherwise.
TABLE_NULL_MODELS = {StatisticKind.SSD: "normal"}


class InputError(Exception):
    pass


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _kind_list(text):
    try:
        return [StatisticKind.parse(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _kind(text):
    try:
        return StatisticKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _null_models(pairs, defaults=None) -> dict[StatisticKind, str]:
    models = dict(defaults or {})
    for pair in pairs or []:
        kind, _, model = pair.partition("=")
        if model not in NULL_MODELS:
            raise InputError(f"bad --null-model {pair!r}; use KIND=MODEL with MODEL in {NULL_MODELS}")
        try:
            models[StatisticKind.parse(kind)] = model
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return models


def _check_reps(reps, name="replications"):
    if reps is not None and reps < 2:
        raise InputError(f"{name} ≥ 2 required")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _levels_key(level: float) -> str:
    return f"{level:g}"


def build_report(args) -> AnalysisReport:
    contaminant = parse_contaminant(args.contaminant)
    column = args.column
    parsed = read_values(args.path, column=column, delimiter=args.delimiter, skip_header=args.skip_header)
    counts = count_digits(parsed.values, IngestPolicy(args.negatives, args.zeros))
    n = counts.n
    if n < 2:
        raise DataError("at least two usable values are required")
    obs = frequencies(counts).probs
    stats = compute_all(obs, n)
    models = _null_models(args.null_model)
    cache = CriticalValueCache.from_env()
    search = SearchConfig(replications=args.search_reps, seed=args.seed)
    rows = []
    for kind in ALL_KINDS:
        table = null_critical_values(
            kind, n, args.levels, args.reps, args.seed,
            null_model=models.get(kind, "multinomial"), cache=cache,
        )
        # ED uses the simulated search; its square-root-of-SSD form is biased at small n.
        method = "simulated" if kind is StatisticKind.ED else "auto"
        est = estimate_ecp(kind, stats[kind], n, contaminant, method, search)
        value = stats[kind].value
        rows.append(
            StatisticRow(
                kind=kind.value,
                value=value,
                critical={_levels_key(lv): table.levels[lv] for lv in args.levels},
                significant={_levels_key(lv): bool(value > table.levels[lv]) for lv in args.levels},
                ecp=est.f,
                ecp_method=est.method,
                clamped=est.clamped,
                ecp_std_error=est.std_error,
                approximate=est.approximate,
            )
        )
    return AnalysisReport(
        label=args.label or Path(args.path).name,
        n=n,
        skipped=counts.skipped,
        parse_failures=parsed.parse_failures,
        contaminant=contaminant.name,
        seed=args.seed,
        counts={str(d): int(c) for d, c in counts.as_dict().items()},
        rows=rows,
        mad_class=classify_mad(stats[StatisticKind.MAD].value),
        ssd_class=classify_ssd(stats[StatisticKind.SSD].value),
        settings={"null_replications": args.reps, "search_replications": args.search_reps},
    )


def cmd_analyze(args) -> int:
    _check_reps(args.reps)
    _check_reps(args.search_reps, "search replications")
    try:
        report = build_report(args)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read {args.path}: {exc.strerror}") from None
    _emit(report.to_json() if args.format == "structured" else report.render_text(), args.out)
    return EXIT_OK


def cmd_ecp_from_stat(args) -> int:
    if args.value < 0:
        raise InputError("statistic value must be non-negative")
    if args.n < 2:
        raise InputError("sample size must be at least 2")
    _check_reps(args.reps)
    contaminant = parse_contaminant(args.contaminant)
    config = SearchConfig(replications=args.reps, seed=args.seed)
    est = estimate_ecp(args.kind, args.value, args.n, contaminant, args.method, config)
    if args.format == "structured":
        doc = {
            "kind": est.kind.value,
            "value": args.value,
            "n": args.n,
            "contaminant": contaminant.name,
            "ecp": est.f,
            "method": est.method,
            "clamped": est.clamped,
            "std_error": est.std_error,
            "approximate": est.approximate,
            "iterations": est.iterations,
            "seed": args.seed,
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        line = f"{est.kind.label} = {args.value:g} at n = {args.n}: ECP = {est.percent:.2f}%"
        line += f"  [method {est.method}, clamp {est.clamped}"
        if est.std_error is not None:
            line += f", se {100 * est.std_error:.2f}pp"
        if est.approximate:
            line += ", approximate"
        _emit(line + "]\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _check_reps(args.reps)
    _check_reps(args.search_reps, "search replications")
    spec = GridSpec(
        sizes=tuple(args.sizes),
        fractions=tuple(args.fractions),
        replications=args.reps,
        seed=args.seed,
        kinds=tuple(args.kinds),
        contaminant=parse_contaminant(args.contaminant),
        search=SearchConfig(replications=args.search_reps, seed=args.seed + 1),
        null_replications=args.null_reps,
        null_seed=args.seed + 2,
        workers=args.workers,
    )
    result = run_grid(spec)
    if args.out:
        write_grid_csv(result, args.out)
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(grid_to_dict(result), indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(format_grid(result))
    for cell in result.failed:
        print(f"cell {cell.kind.value} n={cell.n} f={cell.f} failed: {cell.error}", file=sys.stderr)
    return EXIT_COMPUTE if result.failed else EXIT_OK


def _calibration(args, kind):
    return {
        "replications": args.reps,
        "seed": args.seed,
        "null_model": args.models.get(kind, "multinomial"),
        "cache": CriticalValueCache.from_env(),
    }


def panel_a(args) -> list[list]:
    header = ["n"] + [f"{k.value}_p{100 * lv:g}" for k in PLANNING_KINDS for lv in args.levels]
    rows = [header]
    for n in args.sizes or PLANNING_SIZES:
        row = [n]
        for kind in PLANNING_KINDS:
            for lv in args.levels:
                f = min_ecp_for_significance(kind, n, lv, None, **_calibration(args, kind))
                row.append(f"{100 * f:.2f}")
        rows.append(row)
    return rows


def panel_b(args) -> list[list]:
    header = ["f"] + [f"{k.value}_p{100 * lv:g}" for k in PLANNING_KINDS for lv in args.levels]
    curves = {
        (k, lv): critical_value_curve(k, lv, **_calibration(args, k)) for k in PLANNING_KINDS for lv in args.levels
    }
    rows = [header]
    for f in args.fractions or PLANNING_FRACTIONS:
        row = [f"{100 * f:g}%"]
        for kind in PLANNING_KINDS:
            for lv in args.levels:
                row.append(min_n_for_significance(kind, f, lv, critical=curves[(kind, lv)]))
        rows.append(row)
    return rows


def figure_one(args) -> list[list]:
    rows = [["statistic", "n", "f", "value", "label"]]
    grid = np.round(np.linspace(0.0, 1.0, 101), 2)
    for kind in (StatisticKind.SSD, StatisticKind.MAD):
        for n in args.sizes or FIGURE_SIZES:
            for f in grid:
                rows.append([kind.value, n, f"{f:.2f}", f"{expected_statistic(kind, n, float(f)).value:.6g}", ""])
        for cut, label in SSD_CUTOFFS if kind is StatisticKind.SSD else MAD_CUTOFFS:
            rows.append([kind.value, "", "", f"{cut:g}", f"cutoff: {label}"])
    return rows


def cmd_tables(args) -> int:
    _check_reps(args.reps)
    args.models = _null_models(args.null_model, TABLE_NULL_MODELS)
    rows = {"panelA": panel_a, "panelB": panel_b, "figure1": figure_one}[args.which](args)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _check_reps(args.reps)
    models = _null_models(args.null_model)
    cache = CriticalValueCache.from_env()
    tables = []
    for kind in args.kinds:
        for n in args.sizes:
            table = null_critical_values(
                kind, n, args.levels, args.reps, args.seed, args.method,
                null_model=models.get(kind, "multinomial"), cache=cache,
            )
            tables.append(table.to_dict())
    text = json.dumps({"cache": str(cache.path), "tables": tables}, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _common(p, seed=True, contaminant=True, out=True):
    if seed:
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    if contaminant:
        p.add_argument("--contaminant", default="uniform", help="uniform, degenerate:D or file:PATH")
    if out:
        p.add_argument("--out", help="write output to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="benford-ecp", description="First-digit conformity statistics and ECP estimates.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="statistics, critical values and ECPs for a dataset")
    p.add_argument("path")
    p.add_argument("--column", help="column index or header name of a delimited file")
    p.add_argument("--delimiter")
    p.add_argument("--skip-header", action="store_true")
    p.add_argument("--negatives", choices=("abs", "drop"), default="abs")
    p.add_argument("--zeros", choices=("drop", "error"), default="drop")
    p.add_argument("--label")
    p.add_argument("--levels", type=_float_list, default=[0.95, 0.99])
    p.add_argument("--reps", type=int, default=100_000, help="null calibration replications")
    p.add_argument("--search-reps", type=int, default=5000, help="replications per ECP search step")
    p.add_argument("--null-model", action="append", metavar="KIND=MODEL")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ecp-from-stat", help="ECP from a reported statistic and sample size")
    p.add_argument("--kind", type=_kind, required=True)
    p.add_argument("--value", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("auto", "closed", "simulated"), default="auto")
    p.add_argument("--reps", type=int, default=5000, help="replications per search step")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    _common(p)
    p.set_defaults(func=cmd_ecp_from_stat)

    p = sub.add_parser("simulate", help="simulation grid of mean statistics and recovered ECPs")
    p.add_argument("--sizes", type=_int_list, default=list(TABLE1_SIZES))
    p.add_argument("--fractions", type=_float_list, default=list(TABLE1_FRACTIONS))
    p.add_argument("--kinds", type=_kind_list, default=list(ALL_KINDS))
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--search-reps", type=int, default=5000)
    p.add_argument("--null-reps", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json-out", help="also write the grid as JSON")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tables", help="planning tables and figure data")
    p.add_argument("which", choices=("panelA", "panelB", "figure1"))
    p.add_argument("--levels", type=_float_list, default=[0.95, 0.99])
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--fractions", type=_float_list)
    p.add_argument("--reps", type=int, default=100_000, help="null calibration replications")
    p.add_argument("--null-model", action="append", metavar="KIND=MODEL")
    _common(p, contaminant=False)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("calibrate", help="null critical values, cached for reuse")
    p.add_argument("--kind", dest="kinds", type=_kind_list, default=list(ALL_KINDS))
    p.add_argument("--n", dest="sizes", type=_int_list, required=True)
    p.add_argument("--levels", type=_float_list, default=[0.95, 0.99])
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--method", choices=("auto", "analytic", "monte-carlo", "formula"), default="auto")
    p.add_argument("--null-model", action="append", metavar="KIND=MODEL")
    _common(p, contaminant=False)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InversionError, SearchCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (InputError, DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BenfordError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
