"""Before/after analysis of geolocated incident records.

Ingests a CSV of categorized, dated coordinate points, splits records into
two windows around a cutoff date (the cutoff day itself is excluded), keeps
the categories with enough incidents in both windows, and estimates the
squared L2 distance between each category's before and after coordinate
densities, before-window observations labeled 0 and after-window labeled 1.
Coordinates are used raw in degrees; an optional plate-carree scaling
multiplies longitudes by cos(mean latitude) to roughly equalize axis units.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .charts import ranking_chart
from .data import LabeledDataset
from .estimator import EstimateReport, estimate_l2d

__all__ = [
    "IncidentRecord",
    "WindowSpec",
    "IngestResult",
    "CategoryResult",
    "AnalyzeResult",
    "RESULT_COLUMNS",
    "parse_incident_date",
    "ingest_csv",
    "window_split",
    "eligible_categories",
    "analyze",
    "write_category_csv",
]

COLUMN_KEYS = ("category", "date", "lon", "lat")

RESULT_COLUMNS = (
    "category",
    "n_before",
    "n_after",
    "psi_kernel",
    "psi_tmle",
    "se",
    "ci_kernel_lo",
    "ci_kernel_hi",
    "ci_tmle_lo",
    "ci_tmle_hi",
)


@dataclass(frozen=True)
class IncidentRecord:
    """One incident: normalized category, calendar date, degree coordinates."""

    category: str
    date: dt.date
    lon: float
    lat: float


@dataclass(frozen=True)
class WindowSpec:
    """Cutoff date with window lengths in days on either side."""

    cutoff: dt.date
    days_before: int = 80
    days_after: int = 80

    def __post_init__(self):
        if self.days_before < 1 or self.days_after < 1:
            raise ValueError("window lengths must be at least 1 day")


@dataclass(frozen=True, eq=False)
class IngestResult:
    records: tuple
    skipped: int

    @property
    def total_rows(self) -> int:
        return len(self.records) + self.skipped


def parse_incident_date(text: str) -> dt.date:
    """Parse an ISO-8601 (YYYY-MM-DD) or MM/DD/YYYY date string."""
    s = text.strip()
    try:
        return dt.date.fromisoformat(s)
    except ValueError:
        pass
    try:
        return dt.datetime.strptime(s, "%m/%d/%Y").date()
    except ValueError:
        raise ValueError(f"unparseable date {text!r}") from None


def ingest_csv(path, columns: dict) -> IngestResult:
    """Read incident records from a CSV file using a column map.

    ``columns`` maps the keys {category, date, lon, lat} to header names in
    the file.  Malformed rows (blank or unparseable fields, non-finite
    coordinates) are skipped and counted; more than 50% malformed rows is a
    hard error, as is a mapped column missing from the header.  Category
    strings are trimmed and upper-cased.
    """
    missing_keys = [k for k in COLUMN_KEYS if k not in columns]
    if missing_keys:
        raise ValueError(f"column map lacks keys: {missing_keys}")
    records = []
    skipped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in COLUMN_KEYS:
            if columns[key] not in header:
                raise ValueError(
                    f"column {columns[key]!r} (for {key}) not found in header"
                )
        for row in reader:
            try:
                category = (row[columns["category"]] or "").strip().upper()
                if not category:
                    raise ValueError("blank category")
                date = parse_incident_date(row[columns["date"]] or "")
                lon = float(row[columns["lon"]])
                lat = float(row[columns["lat"]])
                if not (math.isfinite(lon) and math.isfinite(lat)):
                    raise ValueError("non-finite coordinates")
            except (ValueError, TypeError):
                skipped += 1
                continue
            records.append(
                IncidentRecord(category=category, date=date, lon=lon, lat=lat)
            )
    total = len(records) + skipped
    if total and skipped * 2 > total:
        raise ValueError(
            f"{skipped} of {total} rows malformed; refusing to continue"
        )
    return IngestResult(records=tuple(records), skipped=skipped)


def window_split(records, spec: WindowSpec) -> list[str]:
    """Label each record 'before', 'after', or 'excluded'.

    before: cutoff - days_before <= date < cutoff;
    after: cutoff < date <= cutoff + days_after.
    The cutoff day itself is always excluded.
    """
    lo = spec.cutoff - dt.timedelta(days=spec.days_before)
    hi = spec.cutoff + dt.timedelta(days=spec.days_after)
    labels = []
    for rec in records:
        if lo <= rec.date < spec.cutoff:
            labels.append("before")
        elif spec.cutoff < rec.date <= hi:
            labels.append("after")
        else:
            labels.append("excluded")
    return labels


def _window_counts(records, spec):
    counts: dict[str, list[int]] = {}
    for rec, label in zip(records, window_split(records, spec)):
        if label == "excluded":
            continue
        pair = counts.setdefault(rec.category, [0, 0])
        pair[0 if label == "before" else 1] += 1
    return counts


def eligible_categories(records, spec: WindowSpec, min_count: int = 100) -> list[str]:
    """Categories with at least ``min_count`` incidents in each window.

    Sorted by total windowed count descending, ties alphabetically.
    """
    counts = _window_counts(records, spec)
    keep = [
        cat
        for cat, (nb, na) in counts.items()
        if nb >= min_count and na >= min_count
    ]
    return sorted(keep, key=lambda cat: (-sum(counts[cat]), cat))


@dataclass(frozen=True, eq=False)
class CategoryResult:
    category: str
    n_before: int
    n_after: int
    report: EstimateReport


@dataclass(frozen=True, eq=False)
class AnalyzeResult:
    """Ranked per-category results plus recorded per-category failures."""

    results: tuple
    failures: tuple
    skipped_categories: tuple


def _category_worker(args):
    category, points, labels, options = args
    try:
        dataset = LabeledDataset(points=points, labels=labels)
        return "ok", (category, estimate_l2d(dataset, **options))
    except Exception as exc:  # recorded; other categories proceed
        return "fail", (category, f"{type(exc).__name__}: {exc}")


def analyze(
    records,
    spec: WindowSpec,
    *,
    min_count: int = 100,
    lon_scale: bool = False,
    jobs: int = 1,
    csv_path=None,
    svg_path=None,
    **estimator_options,
) -> AnalyzeResult:
    """Estimate the before/after distance for every eligible category.

    Results are ranked by the targeted estimate, descending (ties broken by
    category name).  When ``csv_path`` / ``svg_path`` are given, writes the
    result table and the ranked interval chart.  ``lon_scale`` applies the
    plate-carree longitude scaling computed from all windowed records so
    every category shares one coordinate treatment.
    """
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    records = list(records)
    labels = window_split(records, spec)
    eligible = eligible_categories(records, spec, min_count)
    if not eligible:
        raise ValueError("no category passes the minimum-count threshold")
    counts = _window_counts(records, spec)
    skipped_categories = tuple(sorted(set(counts) - set(eligible)))

    factor = 1.0
    if lon_scale:
        lats = [r.lat for r, lab in zip(records, labels) if lab != "excluded"]
        factor = math.cos(math.radians(sum(lats) / len(lats)))

    tasks = []
    for cat in eligible:
        rows = [
            (rec.lon * factor, rec.lat, 0 if lab == "before" else 1)
            for rec, lab in zip(records, labels)
            if lab != "excluded" and rec.category == cat
        ]
        pts = np.array([[lon, lat] for lon, lat, _ in rows])
        labs = np.array([a for _, _, a in rows], dtype=int)
        tasks.append((cat, pts, labs, estimator_options))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tagged = list(pool.map(_category_worker, tasks))
    else:
        tagged = [_category_worker(t) for t in tasks]

    results = []
    failures = []
    for tag, payload in tagged:
        if tag == "ok":
            cat, report = payload
            nb, na = counts[cat]
            results.append(
                CategoryResult(
                    category=cat, n_before=nb, n_after=na, report=report
                )
            )
        else:
            failures.append(payload)
    results.sort(key=lambda cr: (-cr.report.psi_tmle, cr.category))

    out = AnalyzeResult(
        results=tuple(results),
        failures=tuple(failures),
        skipped_categories=skipped_categories,
    )
    if csv_path is not None:
        write_category_csv(out.results, csv_path)
    if svg_path is not None:
        ranking_chart(out.results, svg_path)
    return out


def write_category_csv(results, path) -> None:
    """Write ranked CategoryResult rows as CSV with a fixed column set."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for cr in results:
            rep = cr.report
            writer.writerow(
                [
                    cr.category,
                    cr.n_before,
                    cr.n_after,
                    repr(rep.psi_kernel),
                    repr(rep.psi_tmle),
                    repr(rep.se),
                    repr(rep.ci_kernel[0]),
                    repr(rep.ci_kernel[1]),
                    repr(rep.ci_tmle[0]),
                    repr(rep.ci_tmle[1]),
                ]
            )
