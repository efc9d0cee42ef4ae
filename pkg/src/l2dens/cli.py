"""Command-line interface: estimate | simulate | geo.

Option precedence is flags over config file over defaults.  A config file
is plain text, one KEY=VALUE per line, where KEY is the flag name with
underscores (for example ``replicates=500``); blank lines and lines
starting with # are ignored.  All randomness flows from the ``--seed``
flag, so repeated runs with the same inputs produce identical output
bytes regardless of ``--jobs``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .charts import sim_chart
from .data import LabeledDataset
from .estimator import estimate_l2d
from .geo import WindowSpec, analyze, ingest_csv, parse_incident_date
from .simulate import (
    DEFAULT_LADDER,
    DEFAULT_REPLICATES,
    DESIGN_NAMES,
    make_design,
    run_ladder,
    write_results_csv,
)

__all__ = ["main"]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    vals = [int(tok) for tok in str(text).split(",") if tok.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


# converter + default per option, per subcommand; converters also apply to
# config-file values
_ESTIMATOR_SCHEMA = {
    "selector": (str, "plug_in"),
    "points_per_dim": (int, None),
    "padding": (float, 4.0),
    "level": (float, 0.95),
    "max_rounds": (int, 10),
}

_SCHEMAS = {
    "estimate": {
        **_ESTIMATOR_SCHEMA,
        "input": (str, None),
        "output": (str, None),
    },
    "simulate": {
        **_ESTIMATOR_SCHEMA,
        "design": (str, "all"),
        "n": (_parse_int_list, list(DEFAULT_LADDER)),
        "replicates": (int, DEFAULT_REPLICATES),
        "seed": (int, 0),
        "jobs": (int, None),
        "out_dir": (str, "."),
    },
    "geo": {
        **_ESTIMATOR_SCHEMA,
        "input": (str, None),
        "category_col": (str, "category"),
        "date_col": (str, "date"),
        "lon_col": (str, "lon"),
        "lat_col": (str, "lat"),
        "cutoff": (str, None),
        "days_before": (int, 80),
        "days_after": (int, 80),
        "min_count": (int, 100),
        "lon_scale": (_parse_bool, False),
        "jobs": (int, None),
        "out_dir": (str, "."),
    },
}


def _read_config(path: str, schema: dict) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected KEY=VALUE")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in schema:
                raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
            convert, _ = schema[key]
            try:
                values[key] = convert(value.strip())
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return values


def _merge_options(args: argparse.Namespace, subcommand: str) -> dict:
    schema = _SCHEMAS[subcommand]
    merged = {key: default for key, (_, default) in schema.items()}
    flags = {k: v for k, v in vars(args).items() if k in schema}
    config_path = getattr(args, "config", None)
    if config_path:
        merged.update(_read_config(config_path, schema))
    merged.update(flags)
    return merged


def _check_common(parser, opts):
    if not 0.0 < opts["level"] < 1.0:
        parser.error(f"--level must be strictly inside (0, 1), got {opts['level']}")
    if opts["padding"] <= 0:
        parser.error(f"--padding must be positive, got {opts['padding']}")
    if opts["max_rounds"] < 1:
        parser.error(f"--max-rounds must be at least 1, got {opts['max_rounds']}")
    if opts["points_per_dim"] is not None and opts["points_per_dim"] < 2:
        parser.error("--points-per-dim must be at least 2")


def _estimator_options(opts) -> dict:
    out = {
        "selector": opts["selector"],
        "grid_padding": opts["padding"],
        "max_rounds": opts["max_rounds"],
    }
    if opts["points_per_dim"] is not None:
        out["points_per_dim"] = opts["points_per_dim"]
    return out


def _read_labeled_csv(path: str) -> LabeledDataset:
    """Parse rows of (x..., a) floats; a tolerated header row is skipped."""
    points = []
    labels = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for rownum, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                vals = [float(cell) for cell in row]
            except ValueError:
                if rownum == 1:
                    continue
                raise ValueError(f"row {rownum}: non-numeric value in {row}") from None
            if len(vals) not in (2, 3):
                raise ValueError(
                    f"row {rownum}: expected 2 or 3 columns, got {len(vals)}"
                )
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(
                    f"row {rownum}: expected {width} columns, got {len(vals)}"
                )
            if vals[-1] not in (0.0, 1.0):
                raise ValueError(f"row {rownum}: label must be 0 or 1, got {vals[-1]}")
            points.append(vals[:-1])
            labels.append(int(vals[-1]))
    if not points:
        raise ValueError("no data rows found")
    return LabeledDataset(points=points, labels=labels)


def _cmd_estimate(parser, args) -> int:
    opts = _merge_options(args, "estimate")
    _check_common(parser, opts)
    if not opts["input"]:
        parser.error("an input CSV is required")
    dataset = _read_labeled_csv(opts["input"])
    report = estimate_l2d(dataset, level=opts["level"], **_estimator_options(opts))
    fit = report.targeting
    print(f"n0 {report.n0}  n1 {report.n1}  dims {dataset.dims}")
    print(f"psi_kernel {report.psi_kernel:.6g}")
    print(f"psi_tmle {report.psi_tmle:.6g}")
    print(f"se {report.se:.6g}")
    print(f"ci_kernel {report.ci_kernel[0]:.6g} {report.ci_kernel[1]:.6g}")
    print(f"ci_tmle {report.ci_tmle[0]:.6g} {report.ci_tmle[1]:.6g}")
    print(f"rounds {fit.rounds}")
    print(f"criterion_met {str(fit.criterion_met).lower()}")
    if opts["output"]:
        with open(opts["output"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "psi_kernel",
                    "psi_tmle",
                    "se",
                    "ci_kernel_lo",
                    "ci_kernel_hi",
                    "ci_tmle_lo",
                    "ci_tmle_hi",
                    "rounds",
                    "criterion_met",
                ]
            )
            writer.writerow(
                [
                    repr(report.psi_kernel),
                    repr(report.psi_tmle),
                    repr(report.se),
                    repr(report.ci_kernel[0]),
                    repr(report.ci_kernel[1]),
                    repr(report.ci_tmle[0]),
                    repr(report.ci_tmle[1]),
                    fit.rounds,
                    str(fit.criterion_met).lower(),
                ]
            )
    return 0


def _cmd_simulate(parser, args) -> int:
    opts = _merge_options(args, "simulate")
    _check_common(parser, opts)
    if opts["replicates"] < 2:
        parser.error("--replicates must be at least 2")
    names = DESIGN_NAMES if opts["design"] == "all" else (opts["design"],)
    for name in names:
        if name not in DESIGN_NAMES:
            parser.error(
                f"unknown design {name!r}; choose from {', '.join(DESIGN_NAMES)} or all"
            )
    jobs = opts["jobs"] or os.cpu_count() or 1
    os.makedirs(opts["out_dir"], exist_ok=True)
    all_results = []
    for name in names:
        design = make_design(name)
        results = run_ladder(
            design,
            opts["n"],
            opts["replicates"],
            opts["seed"],
            jobs=jobs,
            level=opts["level"],
            **_estimator_options(opts),
        )
        all_results.extend(results)
        svg_path = os.path.join(opts["out_dir"], f"sim_{name}.svg")
        sim_chart(results, svg_path, level=opts["level"])
        failed = sum(r.failures for r in results if r.method == "tmle")
        print(f"{name}: {len(results)} result rows, {failed} failed replicates")
    csv_path = os.path.join(opts["out_dir"], "results.csv")
    write_results_csv(all_results, csv_path)
    print(f"wrote {csv_path}")
    return 0


def _cmd_geo(parser, args) -> int:
    opts = _merge_options(args, "geo")
    _check_common(parser, opts)
    for required in ("input", "cutoff"):
        if not opts[required]:
            parser.error(f"--{required} is required")
    if opts["min_count"] < 2:
        parser.error("--min-count must be at least 2")
    cutoff = parse_incident_date(opts["cutoff"])
    spec = WindowSpec(
        cutoff=cutoff,
        days_before=opts["days_before"],
        days_after=opts["days_after"],
    )
    columns = {
        "category": opts["category_col"],
        "date": opts["date_col"],
        "lon": opts["lon_col"],
        "lat": opts["lat_col"],
    }
    ingest = ingest_csv(opts["input"], columns)
    print(f"parsed {len(ingest.records)} records, skipped {ingest.skipped}")
    jobs = opts["jobs"] or os.cpu_count() or 1
    os.makedirs(opts["out_dir"], exist_ok=True)
    out = analyze(
        ingest.records,
        spec,
        min_count=opts["min_count"],
        lon_scale=opts["lon_scale"],
        jobs=jobs,
        csv_path=os.path.join(opts["out_dir"], "results.csv"),
        svg_path=os.path.join(opts["out_dir"], "ranking.svg"),
        level=opts["level"],
        **_estimator_options(opts),
    )
    for cat, message in out.failures:
        print(f"category {cat} failed: {message}", file=sys.stderr)
    for cr in out.results:
        rep = cr.report
        print(
            f"{cr.category}  n_before {cr.n_before}  n_after {cr.n_after}  "
            f"psi_tmle {rep.psi_tmle:.6g}  "
            f"ci ({rep.ci_tmle[0]:.6g}, {rep.ci_tmle[1]:.6g})"
        )
    print(f"wrote {os.path.join(opts['out_dir'], 'results.csv')}")
    return 0


def _add_estimator_flags(sub):
    sub.add_argument(
        "--selector",
        choices=("plug_in", "normal_reference"),
        help="bandwidth selector (default: plug_in)",
    )
    sub.add_argument(
        "--points-per-dim",
        type=int,
        dest="points_per_dim",
        help="quadrature nodes per axis (default: 401 in 1-D, 201 in 2-D)",
    )
    sub.add_argument(
        "--padding",
        type=float,
        help="grid padding in bandwidths beyond the data range (default: 4.0)",
    )
    sub.add_argument(
        "--level", type=float, help="confidence level (default: 0.95)"
    )
    sub.add_argument(
        "--max-rounds",
        type=int,
        dest="max_rounds",
        help="targeting round cap (default: 10)",
    )
    sub.add_argument("--config", help="KEY=VALUE config file; flags override it")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l2dens",
        description="Estimate the squared L2 distance between two densities",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    est = subs.add_parser(
        "estimate",
        help="estimate from a CSV of (x..., a) rows",
        argument_default=argparse.SUPPRESS,
    )
    est.add_argument("input", nargs="?", help="CSV with 1 or 2 coordinate columns plus a 0/1 label")
    est.add_argument("--output", help="write a machine-readable result CSV here")
    _add_estimator_flags(est)

    sim = subs.add_parser(
        "simulate",
        help="run Monte Carlo ladders for the analytic designs",
        argument_default=argparse.SUPPRESS,
    )
    sim.add_argument(
        "--design",
        choices=DESIGN_NAMES + ("all",),
        help="design to run (default: all)",
    )
    sim.add_argument(
        "--n",
        type=_parse_int_list,
        help="comma-separated per-arm sample sizes "
        f"(default: {','.join(str(v) for v in DEFAULT_LADDER)})",
    )
    sim.add_argument(
        "--replicates",
        type=int,
        help=f"replicates per cell (default: {DEFAULT_REPLICATES})",
    )
    sim.add_argument("--seed", type=int, help="master seed (default: 0)")
    sim.add_argument(
        "--jobs", type=int, help="concurrent replicates (default: machine CPUs)"
    )
    sim.add_argument(
        "--out-dir", dest="out_dir", help="output directory (default: .)"
    )
    _add_estimator_flags(sim)

    geo = subs.add_parser(
        "geo",
        help="before/after category analysis of incident coordinates",
        argument_default=argparse.SUPPRESS,
    )
    geo.add_argument("--input", help="incident CSV file")
    geo.add_argument(
        "--cutoff", help="cutoff date, ISO-8601 or MM/DD/YYYY (day excluded)"
    )
    geo.add_argument(
        "--category-col", dest="category_col", help="category column (default: category)"
    )
    geo.add_argument("--date-col", dest="date_col", help="date column (default: date)")
    geo.add_argument("--lon-col", dest="lon_col", help="longitude column (default: lon)")
    geo.add_argument("--lat-col", dest="lat_col", help="latitude column (default: lat)")
    geo.add_argument(
        "--days-before", type=int, dest="days_before", help="window length (default: 80)"
    )
    geo.add_argument(
        "--days-after", type=int, dest="days_after", help="window length (default: 80)"
    )
    geo.add_argument(
        "--min-count",
        type=int,
        dest="min_count",
        help="minimum incidents per window (default: 100)",
    )
    geo.add_argument(
        "--lon-scale",
        action="store_true",
        dest="lon_scale",
        help="scale longitudes by cos(mean latitude) (default: off)",
    )
    geo.add_argument(
        "--jobs", type=int, help="concurrent categories (default: machine CPUs)"
    )
    geo.add_argument("--out-dir", dest="out_dir", help="output directory (default: .)")
    _add_estimator_flags(geo)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    commands = {
        "estimate": _cmd_estimate,
        "simulate": _cmd_simulate,
        "geo": _cmd_geo,
    }
    try:
        return commands[args.subcommand](parser, args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
