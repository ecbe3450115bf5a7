"""Wind-hazard features from the hourly gust grid.

For each (hurricane, county) pair and a report instant ``at``:

* current max gust: the largest gust over the county's pixels at the hour
  nearest ``at``;
* past max gust: the largest gust over the county's pixels and over every
  hour from the window start up to that same hour, with the hour it happened;
* recovery days: time elapsed from that peak to ``at``.
"""

import bisect
import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .errors import MalformedRow, MissingHazard, NegativeInterval, NoGridCoverage, UnknownCounty
from .ingest import (DEFAULT_HURRICANES, _convert, _finite, _rows, _write,
                     format_time, max_outage_reports, parse_time)

KNOT_MS = 0.514444
DEFAULT_GUST_FACTOR = 1.11
HOUR = timedelta(hours=1)

HAZARD_HEADER = ["hurricane", "county_fips", "current_max_v3_ms", "past_max_v3_ms",
                 "recovery_days", "past_max_time_utc"]
BESTTRACK_HEADER = ["point_time_utc", "lat", "lon", "v60_knots"]
COMPARE_HEADER = ["point_time_utc", "v60_knots", "v3_ms_converted", "era5_local_max_ms"]


def snap_to_hour(ts):
    """Nearest whole hour; exactly half past goes to the earlier hour."""
    floor = ts.replace(minute=0, second=0, microsecond=0)
    return floor + HOUR if ts - floor > timedelta(minutes=30) else floor


class GustField:
    """Dense (pixel x hour) view of gust samples; missing cells are NaN."""

    def __init__(self, samples):
        samples = list(samples)
        self.pixels = sorted({s.pixel for s in samples})
        self.hours = sorted({s.time for s in samples})
        self._prow = {p: i for i, p in enumerate(self.pixels)}
        self._hcol = {h: j for j, h in enumerate(self.hours)}
        self.values = np.full((len(self.pixels), len(self.hours)), np.nan)
        for s in samples:
            self.values[self._prow[s.pixel], self._hcol[s.time]] = s.fg10

    @classmethod
    def coerce(cls, grid):
        return grid if isinstance(grid, cls) else cls(grid)

    def rows_for(self, pixels):
        return [self._prow[p] for p in sorted(pixels) if p in self._prow]

    def hour_slice(self, start, end):
        # columns whose hour lies in [start, end]
        return bisect.bisect_left(self.hours, start), bisect.bisect_right(self.hours, end)

    def scaled(self, c):
        out = object.__new__(GustField)
        out.pixels, out.hours, out._prow, out._hcol = self.pixels, self.hours, self._prow, self._hcol
        out.values = self.values * c
        return out


def _county_pixels(pixels):
    return getattr(pixels, "pixels", pixels)


def _county(pixels):
    return getattr(pixels, "county", "?")


def current_max_gust(grid, pixels, at):
    """Max gust over the county's pixels at the hour nearest ``at`` (m/s)."""
    field = GustField.coerce(grid)
    hour = snap_to_hour(at)
    rows = field.rows_for(_county_pixels(pixels))
    col = field._hcol.get(hour)
    if not rows or col is None:
        raise NoGridCoverage(_county(pixels), at)
    vals = field.values[rows, col]
    if np.all(np.isnan(vals)):
        raise NoGridCoverage(_county(pixels), at)
    return float(np.nanmax(vals))


def past_max_gust(grid, pixels, window_start, at):
    """Max gust over pixels and hours in ``[window_start, at]``, both snapped.

    Returns ``(value, hour)``; ties go to the earliest hour, then to the
    lexicographically first pixel.
    """
    if window_start > at:
        raise ValueError("window_start must not be after at")
    field = GustField.coerce(grid)
    rows = field.rows_for(_county_pixels(pixels))
    lo, hi = field.hour_slice(snap_to_hour(window_start), snap_to_hour(at))
    if not rows or hi <= lo:
        raise NoGridCoverage(_county(pixels), at)
    block = field.values[rows, lo:hi]
    if np.all(np.isnan(block)):
        raise NoGridCoverage(_county(pixels), at)
    filled = np.where(np.isnan(block), -np.inf, block)
    # hour-major flat order gives the (earliest hour, first pixel) tie rule
    flat = int(np.argmax(filled.T))
    j, _ = divmod(flat, len(rows))
    return float(filled.T.ravel()[flat]), field.hours[lo + j]


def recovery_days(past_max_time, report_time):
    """Fractional days from the gust peak to the report."""
    delta = (report_time - past_max_time).total_seconds()
    if delta < 0:
        raise NegativeInterval(f"report {report_time} precedes peak {past_max_time}")
    return delta / 86400.0


def sustained_to_gust(v60_knots, gust_factor=DEFAULT_GUST_FACTOR):
    """Convert a 1-minute sustained wind in knots to a 3-second gust in m/s."""
    if not (math.isfinite(v60_knots) and math.isfinite(gust_factor)):
        raise ValueError("inputs must be finite")
    if v60_knots < 0 or gust_factor <= 0:
        raise ValueError("v60_knots must be >= 0 and gust_factor > 0")
    return v60_knots * KNOT_MS * gust_factor


@dataclass(frozen=True)
class HazardFeatures:
    county: str
    hurricane: str
    current_max_v3: float
    past_max_v3: float
    recovery_days: float
    past_max_time: datetime


def county_hazard(grid, pixels, hurricane, at, window_start):
    field = GustField.coerce(grid)
    current = current_max_gust(field, pixels, at)
    past, when = past_max_gust(field, pixels, window_start, at)
    # the peak hour can be the one rounded up from a report just before it
    days = recovery_days(min(when, at), at)
    return HazardFeatures(_county(pixels), hurricane, current, past, days, when)


def hazard_features(reports, grid, pixel_maps, windows=DEFAULT_HURRICANES, window_start=None):
    """Hazard features at the maximum outage report of every (hurricane, county).

    The past-max window opens at the hurricane's first report unless
    ``window_start`` (a mapping hurricane -> timestamp) says otherwise.
    """
    field = GustField.coerce(grid)
    maps = {m.county: m for m in pixel_maps}
    out = []
    for (hurricane, county), (at, _) in max_outage_reports(reports).items():
        if county not in maps:
            raise UnknownCounty("county_pixels", county)
        if window_start and hurricane in window_start:
            start = window_start[hurricane]
        elif windows and hurricane in windows:
            start = windows[hurricane].first_report
        else:
            start = min(r.report_time for r in reports if r.hurricane == hurricane)
        out.append(county_hazard(field, maps[county], hurricane, at, min(start, at)))
    return out


def write_hazard_features(features, path):
    _write(path, HAZARD_HEADER, [
        (h.hurricane, h.county, repr(h.current_max_v3), repr(h.past_max_v3),
         repr(h.recovery_days), format_time(h.past_max_time)) for h in features])


def parse_hazard_features(path):
    out = []
    for line, (hurricane, county, cur, past, days, when) in _rows(path, HAZARD_HEADER):
        out.append(HazardFeatures(
            county, hurricane.lower(),
            _convert(line, path, _finite, cur, "current_max_v3_ms"),
            _convert(line, path, _finite, past, "past_max_v3_ms"),
            _convert(line, path, _finite, days, "recovery_days"),
            _convert(line, path, parse_time, when, "past_max_time_utc")))
    return out


def hazard_lookup(features):
    table = {}
    for h in features:
        table[(h.hurricane, h.county)] = h
    return table


def require_hazard(table, key):
    try:
        return table[key]
    except KeyError:
        raise MissingHazard(key) from None


# -- best-track comparison ------------------------------------------------------

def parse_besttrack(path):
    out = []
    for line, (ts, lat, lon, v60) in _rows(path, BESTTRACK_HEADER):
        v60 = _convert(line, path, _finite, v60, "v60_knots")
        if v60 < 0:
            raise MalformedRow(line, "v60_knots must be nonnegative", path)
        out.append((_convert(line, path, parse_time, ts, "point_time_utc"),
                    _convert(line, path, _finite, lat, "lat"),
                    _convert(line, path, _finite, lon, "lon"), v60))
    return out


def besttrack_compare(points, grid, gust_factor=DEFAULT_GUST_FACTOR, radius_deg=0.5):
    """Rows of (time, v60, converted v3, max grid gust within ``radius_deg``)."""
    field = GustField.coerce(grid)
    rows = []
    for when, lat, lon, v60 in points:
        near = [p for p in field.pixels if abs(p[0] - lat) <= radius_deg and abs(p[1] - lon) <= radius_deg]
        local = math.nan
        try:
            local = current_max_gust(field, near, when)
        except NoGridCoverage:
            pass
        rows.append((when, v60, sustained_to_gust(v60, gust_factor), local))
    return rows


def write_besttrack_compare(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        for when, v60, v3, local in rows:
            w.writerow([format_time(when), repr(v60), f"{v3:.6g}", "" if math.isnan(local) else f"{local:.6g}"])

