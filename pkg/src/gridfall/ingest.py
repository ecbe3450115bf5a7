"""Parsers and validators for the five input CSV corpora.

All timestamps are ISO-8601 with an explicit UTC designator (``Z`` or
``+00:00``) and at least minute precision, e.g. ``2018-05-27T09:01Z``.
"""

import csv
import math
import re
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import (CustomersExceedTotal, EmptyPixelList, MalformedRow,
                     MissingVariableId, NoReports)
from .variables import BY_ID, SOCIO_IDS

OUTAGE_HEADER = ["hurricane", "county_fips", "report_time_utc", "customers_out", "customers_total"]
SOCIO_HEADER = ["county_fips", "acs_year", "var_id", "value"]
META_HEADER = ["county_fips", "urban", "customers"]
GUST_HEADER = ["time_utc", "lat", "lon", "fg10_ms"]
PIXEL_HEADER = ["county_fips", "lat", "lon"]
HURRICANE_HEADER = ["hurricane", "landfall_year", "first_report_utc", "last_report_utc", "reports"]

_TS = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2})(?::(\d{2})(?:\.(\d{1,6}))?)?(Z|[+-]00:?00)$")


def parse_time(text):
    """Parse a UTC timestamp; raises ValueError on anything else."""
    m = _TS.match(text.strip())
    if not m:
        raise ValueError(f"not an ISO-8601 UTC timestamp with minute precision: {text!r}")
    y, mo, d, h, mi, s, frac, _ = m.groups()
    micro = int((frac or "0").ljust(6, "0"))
    return datetime(int(y), int(mo), int(d), int(h), int(mi), int(s or 0), micro, tzinfo=timezone.utc)


def format_time(ts):
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    if ts.second:
        return ts.strftime("%Y-%m-%dT%H:%M:%SZ")
    return ts.strftime("%Y-%m-%dT%H:%MZ")


@dataclass(frozen=True)
class HurricaneWindow:
    hurricane: str
    landfall_year: int
    first_report: datetime
    last_report: datetime
    reports: int

    def contains(self, ts):
        return self.first_report <= ts <= self.last_report


def _window(name, year, first, last, reports):
    return HurricaneWindow(name, year, parse_time(first), parse_time(last), reports)


# report counts and first/last report times of the Florida PSC outage reports
DEFAULT_HURRICANES = {
    w.hurricane: w for w in (
        _window("alberto", 2018, "2018-05-27T09:01Z", "2018-05-29T09:20Z", 13),
        _window("dorian", 2019, "2019-09-02T18:51Z", "2019-09-04T18:00Z", 12),
        _window("eta", 2020, "2020-11-08T21:00Z", "2020-11-12T18:00Z", 15),
        _window("isaias", 2020, "2020-08-01T18:00Z", "2020-08-02T18:00Z", 6),
        _window("michael", 2018, "2018-10-09T21:00Z", "2018-11-06T11:18Z", 131),
    )
}


def _rows(path, header):
    """Yield ``(line_number, cells)`` after checking the header row."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file, header row required", path) from None
        if [c.strip() for c in first] != header:
            raise MalformedRow(1, f"header must be {','.join(header)}", path)
        for cells in reader:
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise MalformedRow(reader.line_num, f"expected {len(header)} fields, got {len(cells)}", path)
            yield reader.line_num, [c.strip() for c in cells]


def _convert(line, path, fn, text, what):
    try:
        return fn(text)
    except (ValueError, OverflowError):
        raise MalformedRow(line, f"bad {what}: {text!r}", path) from None


def _finite(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def _write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def load_hurricanes(path):
    """Read a hurricane window table; same layout as :data:`DEFAULT_HURRICANES`."""
    out = {}
    for line, (name, year, first, last, reports) in _rows(path, HURRICANE_HEADER):
        name = name.lower()
        out[name] = HurricaneWindow(
            name,
            _convert(line, path, int, year, "landfall_year"),
            _convert(line, path, parse_time, first, "first_report_utc"),
            _convert(line, path, parse_time, last, "last_report_utc"),
            _convert(line, path, int, reports, "reports"),
        )
    return out


# -- outage reports ----------------------------------------------------------

@dataclass(frozen=True)
class OutageReport:
    hurricane: str
    county: str
    report_time: datetime
    customers_out: int
    customers_total: int

    @property
    def fraction(self):
        return self.customers_out / self.customers_total


def parse_outage_reports(path, windows=DEFAULT_HURRICANES):
    """Parse ``outage_reports.csv`` sorted by (hurricane, county, report_time).

    With ``windows`` given, each hurricane must be known and every report
    must fall inside its window. Pass ``windows=None`` to skip that check.
    """
    out = []
    for line, (hurricane, county, ts, n_out, n_total) in _rows(path, OUTAGE_HEADER):
        hurricane = hurricane.lower()
        if not county:
            raise MalformedRow(line, "empty county_fips", path)
        when = _convert(line, path, parse_time, ts, "report_time_utc")
        n_out = _convert(line, path, int, n_out, "customers_out")
        n_total = _convert(line, path, int, n_total, "customers_total")
        if n_out < 0:
            raise MalformedRow(line, "customers_out must be nonnegative", path)
        if n_total <= 0:
            raise MalformedRow(line, "customers_total must be positive", path)
        if n_out > n_total:
            raise CustomersExceedTotal(line, path)
        if windows is not None:
            if hurricane not in windows:
                raise MalformedRow(line, f"unknown hurricane {hurricane!r}", path)
            if not windows[hurricane].contains(when):
                raise MalformedRow(line, f"report time {ts} outside the {hurricane} report window", path)
        out.append(OutageReport(hurricane, county, when, n_out, n_total))
    out.sort(key=lambda r: (r.hurricane, r.county, r.report_time))
    return out


def write_outage_reports(reports, path):
    _write(path, OUTAGE_HEADER, [
        (r.hurricane, r.county, format_time(r.report_time), r.customers_out, r.customers_total)
        for r in reports])


def report_statistics(reports):
    """Per hurricane: number of distinct report times and the first/last one."""
    times = defaultdict(set)
    for r in reports:
        times[r.hurricane].add(r.report_time)
    return {h: (len(ts), min(ts), max(ts)) for h, ts in sorted(times.items())}


def max_outage_report(reports, county, hurricane):
    """``(report_time, outage_fraction)`` of the worst report; ties go to the earliest."""
    best = None
    for r in reports:
        if r.county != county or r.hurricane != hurricane:
            continue
        # compare fractions exactly via cross-multiplication
        if (best is None
                or r.customers_out * best.customers_total > best.customers_out * r.customers_total
                or (r.customers_out * best.customers_total == best.customers_out * r.customers_total
                    and r.report_time < best.report_time)):
            best = r
    if best is None:
        raise NoReports(county, hurricane)
    return best.report_time, best.fraction


def max_outage_reports(reports):
    """Worst report for every (hurricane, county) key present in ``reports``."""
    grouped = defaultdict(list)
    for r in reports:
        grouped[(r.hurricane, r.county)].append(r)
    return {key: max_outage_report(rs, key[1], key[0]) for key, rs in sorted(grouped.items())}


# -- socioeconomic -----------------------------------------------------------

@dataclass(frozen=True)
class SocioRecord:
    county: str
    acs_year: int
    values: dict   # var_id -> value for ids 2..23


def parse_socioeconomic(path):
    """Parse long-format ACS rows into one record per (county, acs_year)."""
    grouped = defaultdict(dict)
    for line, (county, year, var_id, value) in _rows(path, SOCIO_HEADER):
        year = _convert(line, path, int, year, "acs_year")
        var_id = _convert(line, path, int, var_id, "var_id")
        value = _convert(line, path, _finite, value, "value")
        if var_id not in SOCIO_IDS:
            raise MalformedRow(line, f"var_id {var_id} is not a socioeconomic variable (2-23)", path)
        kind = BY_ID[var_id].kind
        if kind == "pct" and not 0.0 <= value <= 100.0:
            raise MalformedRow(line, f"percentage variable {var_id} out of [0, 100]: {value}", path)
        if value < 0:
            raise MalformedRow(line, f"variable {var_id} must be nonnegative", path)
        slot = grouped[(county, year)]
        if var_id in slot:
            raise MalformedRow(line, f"duplicate var_id {var_id} for county {county}, acs {year}", path)
        slot[var_id] = value
    out = []
    for (county, year), values in sorted(grouped.items()):
        for var_id in SOCIO_IDS:
            if var_id not in values:
                raise MissingVariableId(county, var_id, year)
        out.append(SocioRecord(county, year, {k: values[k] for k in SOCIO_IDS}))
    return out


def write_socioeconomic(records, path):
    _write(path, SOCIO_HEADER, [
        (r.county, r.acs_year, k, repr(float(v))) for r in records for k, v in sorted(r.values.items())])


def acs_year_for(hurricane, windows=DEFAULT_HURRICANES, offset=1, override=None):
    """ACS vintage used for a hurricane: the year before landfall unless overridden."""
    if override and hurricane in override:
        return int(override[hurricane])
    return windows[hurricane].landfall_year - offset


# -- county metadata ---------------------------------------------------------

@dataclass(frozen=True)
class CountyMeta:
    county: str
    urban: bool
    customers: int


def parse_county_meta(path):
    out = {}
    for line, (county, urban, customers) in _rows(path, META_HEADER):
        if urban not in ("0", "1"):
            raise MalformedRow(line, f"urban must be 0 or 1, got {urban!r}", path)
        customers = _convert(line, path, int, customers, "customers")
        if customers <= 0:
            raise MalformedRow(line, "customers must be positive", path)
        if county in out:
            raise MalformedRow(line, f"duplicate county {county}", path)
        out[county] = CountyMeta(county, urban == "1", customers)
    return [out[k] for k in sorted(out)]


def write_county_meta(records, path):
    _write(path, META_HEADER, [(r.county, int(r.urban), r.customers) for r in records])


# -- gust grid ---------------------------------------------------------------

@dataclass(frozen=True)
class GridSample:
    pixel: tuple   # (lat, lon)
    time: datetime
    fg10: float


def parse_gust_grid(path):
    """Parse hourly gust samples; each pixel must have a gap-free hourly series."""
    out = []
    seen = {}
    for line, (ts, lat, lon, fg10) in _rows(path, GUST_HEADER):
        when = _convert(line, path, parse_time, ts, "time_utc")
        if when.minute or when.second or when.microsecond:
            raise MalformedRow(line, f"gust time {ts} is not on the hour", path)
        pixel = (_convert(line, path, _finite, lat, "lat"), _convert(line, path, _finite, lon, "lon"))
        value = _convert(line, path, _finite, fg10, "fg10_ms")
        if value < 0:
            raise MalformedRow(line, "fg10_ms must be nonnegative", path)
        if (pixel, when) in seen:
            raise MalformedRow(line, f"duplicate sample for pixel {pixel} at {ts}", path)
        seen[(pixel, when)] = line
        out.append(GridSample(pixel, when, value))
    by_pixel = defaultdict(list)
    for s in out:
        by_pixel[s.pixel].append(s.time)
    hour = timedelta(hours=1)
    for pixel, times in by_pixel.items():
        times.sort()
        for a, b in zip(times, times[1:]):
            if b - a != hour:
                raise MalformedRow(seen[(pixel, b)], f"gap in the hourly series of pixel {pixel}", path)
    out.sort(key=lambda s: (s.time, s.pixel))
    return out


def write_gust_grid(samples, path):
    _write(path, GUST_HEADER, [
        (format_time(s.time), repr(s.pixel[0]), repr(s.pixel[1]), repr(s.fg10)) for s in samples])


# -- county -> pixel map -----------------------------------------------------

@dataclass(frozen=True)
class CountyPixelMap:
    county: str
    pixels: tuple   # sorted (lat, lon) pairs


def parse_county_pixel_map(path):
    """Group pixel rows per county. A row with blank lat/lon declares a county with no pixels."""
    grouped = defaultdict(set)
    lines = {}
    for line, (county, lat, lon) in _rows(path, PIXEL_HEADER):
        lines.setdefault(county, line)
        if not lat and not lon:
            grouped.setdefault(county, set())
            continue
        grouped[county].add((_convert(line, path, _finite, lat, "lat"), _convert(line, path, _finite, lon, "lon")))
    out = []
    for county in sorted(grouped):
        if not grouped[county]:
            raise EmptyPixelList(county)
        out.append(CountyPixelMap(county, tuple(sorted(grouped[county]))))
    return out


def write_county_pixel_map(maps, path):
    _write(path, PIXEL_HEADER, [(m.county, repr(p[0]), repr(p[1])) for m in maps for p in m.pixels])
