import csv
import datetime as dt

import numpy as np
import pytest

from l2dens.geo import (
    RESULT_COLUMNS,
    IncidentRecord,
    WindowSpec,
    analyze,
    eligible_categories,
    ingest_csv,
    parse_incident_date,
    window_split,
    write_category_csv,
)

CUTOFF = dt.date(2024, 3, 1)
COLMAP = {"category": "category", "date": "date", "lon": "lon", "lat": "lat"}


def _write_csv(path, rows, header=("category", "date", "lon", "lat")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


class TestDateParsing:
    def test_iso(self):
        assert parse_incident_date("2024-03-01") == CUTOFF

    def test_us_style(self):
        assert parse_incident_date("03/01/2024") == CUTOFF

    def test_whitespace(self):
        assert parse_incident_date("  2024-03-01 ") == CUTOFF

    @pytest.mark.parametrize("bad", ["01-03-2024", "March 1 2024", "", "2024/03/01"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError, match="unparseable date"):
            parse_incident_date(bad)


class TestIngest:
    def test_clean_file(self, tmp_path):
        p = _write_csv(
            tmp_path / "a.csv",
            [
                ["theft", "2024-01-05", "-122.41", "37.77"],
                [" Assault ", "01/06/2024", "-122.40", "37.78"],
                ["THEFT", "2024-01-07", "-122.39", "37.76"],
            ],
        )
        res = ingest_csv(p, COLMAP)
        assert res.skipped == 0
        assert res.total_rows == 3
        assert [r.category for r in res.records] == ["THEFT", "ASSAULT", "THEFT"]
        assert res.records[0].date == dt.date(2024, 1, 5)
        assert res.records[1].lon == -122.40

    def test_malformed_rows_skipped(self, tmp_path):
        good = [
            ["theft", f"2024-01-{day:02d}", "-122.40", "37.75"] for day in range(11, 17)
        ]
        p = _write_csv(
            tmp_path / "b.csv",
            [
                ["theft", "2024-01-05", "-122.41", "37.77"],
                ["", "2024-01-06", "-122.40", "37.78"],
                ["theft", "sometime", "-122.40", "37.78"],
                ["theft", "2024-01-08", "nan", "37.78"],
                ["theft", "2024-01-10", "-122.40", ""],
                *good,
            ],
        )
        res = ingest_csv(p, COLMAP)
        assert res.skipped == 4
        assert len(res.records) == 7
        assert res.total_rows == 11

    def test_mostly_malformed_is_fatal(self, tmp_path):
        p = _write_csv(
            tmp_path / "c.csv",
            [
                ["theft", "2024-01-05", "-122.41", "37.77"],
                ["", "x", "", ""],
                ["", "x", "", ""],
            ],
        )
        with pytest.raises(ValueError, match="malformed"):
            ingest_csv(p, COLMAP)

    def test_missing_map_key(self, tmp_path):
        p = _write_csv(tmp_path / "d.csv", [])
        with pytest.raises(ValueError, match="lacks keys"):
            ingest_csv(p, {"category": "category", "date": "date"})

    def test_unknown_header_column_named(self, tmp_path):
        p = _write_csv(tmp_path / "e.csv", [], header=("kind", "date", "lon", "lat"))
        with pytest.raises(ValueError, match="'category'"):
            ingest_csv(p, COLMAP)

    def test_renamed_headers(self, tmp_path):
        p = _write_csv(
            tmp_path / "f.csv",
            [["theft", "2024-01-05", "-1.0", "2.0"]],
            header=("Offense", "Occurred", "X", "Y"),
        )
        res = ingest_csv(
            p, {"category": "Offense", "date": "Occurred", "lon": "X", "lat": "Y"}
        )
        assert len(res.records) == 1


def _rec(cat, date, lon=0.0, lat=45.0):
    return IncidentRecord(category=cat, date=date, lon=lon, lat=lat)


class TestWindows:
    def test_boundaries(self):
        spec = WindowSpec(cutoff=CUTOFF, days_before=80, days_after=80)
        days = [-81, -80, -1, 0, 1, 80, 81]
        recs = [_rec("A", CUTOFF + dt.timedelta(days=d)) for d in days]
        assert window_split(recs, spec) == [
            "excluded",
            "before",
            "before",
            "excluded",
            "after",
            "after",
            "excluded",
        ]

    def test_window_length_validation(self):
        with pytest.raises(ValueError, match="at least 1 day"):
            WindowSpec(cutoff=CUTOFF, days_before=0)

    def test_eligibility_threshold_and_order(self):
        spec = WindowSpec(cutoff=CUTOFF)
        recs = []
        for cat, nb, na in (("A", 150, 150), ("B", 99, 200), ("C", 100, 100), ("D", 120, 3)):
            recs += [_rec(cat, CUTOFF - dt.timedelta(days=5))] * nb
            recs += [_rec(cat, CUTOFF + dt.timedelta(days=5))] * na
        assert eligible_categories(recs, spec, min_count=100) == ["A", "C"]
        # one incident short of the cutoff in either window drops the category
        assert "B" not in eligible_categories(recs, spec, min_count=100)
        assert eligible_categories(recs, spec, min_count=99) == ["A", "B", "C"]


def _category_records(rng, cat, n_per_window, lon_shift=0.0, lat0=45.0):
    recs = []
    for window, shift in (("before", 0.0), ("after", lon_shift)):
        for _ in range(n_per_window):
            day = int(rng.integers(1, 80))
            date = CUTOFF + dt.timedelta(days=day if window == "after" else -day)
            recs.append(
                _rec(
                    cat,
                    date,
                    lon=float(rng.normal(shift, 0.1)),
                    lat=float(rng.normal(lat0, 0.1)),
                )
            )
    return recs


@pytest.fixture(scope="module")
def two_category_records():
    rng = np.random.default_rng(71)
    recs = _category_records(rng, "SHIFTED", 150, lon_shift=0.4)
    recs += _category_records(rng, "STABLE", 180)
    return recs


class TestAnalyze:
    def test_ranking_and_intervals(self, two_category_records):
        spec = WindowSpec(cutoff=CUTOFF)
        out = analyze(two_category_records, spec)
        assert [cr.category for cr in out.results] == ["SHIFTED", "STABLE"]
        assert out.failures == ()
        shifted, stable = out.results
        assert shifted.n_before == 150 and shifted.n_after == 150
        # a 4-sd relocation separates cleanly from the unmoved category
        assert shifted.report.ci_tmle[0] > stable.report.ci_tmle[1]
        assert shifted.report.psi_tmle > 3.0 * stable.report.psi_tmle
        assert stable.report.psi_tmle >= 0.0

    def test_min_count_filters(self, two_category_records):
        spec = WindowSpec(cutoff=CUTOFF)
        out = analyze(two_category_records, spec, min_count=160)
        assert [cr.category for cr in out.results] == ["STABLE"]
        assert out.skipped_categories == ("SHIFTED",)

    def test_no_eligible_category(self, two_category_records):
        spec = WindowSpec(cutoff=CUTOFF)
        with pytest.raises(ValueError, match="no category"):
            analyze(two_category_records, spec, min_count=10_000)

    def test_csv_and_svg_outputs(self, two_category_records, tmp_path):
        spec = WindowSpec(cutoff=CUTOFF)
        c1 = tmp_path / "r1.csv"
        s1 = tmp_path / "r1.svg"
        out = analyze(two_category_records, spec, csv_path=c1, svg_path=s1)
        with open(c1, newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == RESULT_COLUMNS
        assert [r[0] for r in rows[1:]] == ["SHIFTED", "STABLE"]
        assert float(rows[1][4]) == out.results[0].report.psi_tmle
        assert s1.read_text().lstrip().startswith("<svg")
        # re-running the analysis reproduces the file byte for byte
        c2 = tmp_path / "r2.csv"
        analyze(two_category_records, spec, csv_path=c2)
        assert c1.read_bytes() == c2.read_bytes()
        c3 = tmp_path / "r3.csv"
        write_category_csv(out.results, c3)
        assert c1.read_bytes() == c3.read_bytes()

    def test_jobs_do_not_change_results(self, two_category_records, tmp_path):
        spec = WindowSpec(cutoff=CUTOFF)
        c1 = tmp_path / "serial.csv"
        c2 = tmp_path / "parallel.csv"
        analyze(two_category_records, spec, csv_path=c1)
        analyze(two_category_records, spec, jobs=2, csv_path=c2)
        assert c1.read_bytes() == c2.read_bytes()

    def test_lon_scale_changes_geometry(self, two_category_records):
        spec = WindowSpec(cutoff=CUTOFF)
        plain = analyze(two_category_records, spec)
        scaled = analyze(two_category_records, spec, lon_scale=True)
        assert [cr.category for cr in scaled.results] == ["SHIFTED", "STABLE"]
        # cos(45 deg) shrinks longitudes, so the estimates must move
        assert scaled.results[0].report.psi_tmle != plain.results[0].report.psi_tmle

    def test_category_failure_is_recorded(self, two_category_records):
        # duplicate coordinates collapse a dimension, which the bandwidth
        # selector rejects; the other category still succeeds
        bad = [
            _rec("FLAT", CUTOFF - dt.timedelta(days=3), lon=1.0, lat=50.0)
        ] * 120 + [
            _rec("FLAT", CUTOFF + dt.timedelta(days=3), lon=1.0, lat=50.0)
        ] * 120
        spec = WindowSpec(cutoff=CUTOFF)
        out = analyze(list(two_category_records) + bad, spec)
        assert [cr.category for cr in out.results] == ["SHIFTED", "STABLE"]
        assert len(out.failures) == 1
        assert out.failures[0][0] == "FLAT"
