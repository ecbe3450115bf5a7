"""Regenerate the static CSV fixtures in this directory.

    python3 tests/data/generate.py

golden_outage.csv   report times per hurricane match the built-in windows
alberto/            a three-county Alberto pipeline (outage, ACS, meta, grid, pixels)
"""

import csv
import os
from datetime import timedelta

import numpy as np

from gridfall.ingest import DEFAULT_HURRICANES, format_time
from gridfall.variables import BY_ID, SOCIO_IDS

HERE = os.path.dirname(os.path.abspath(__file__))


def report_times(window):
    """``window.reports`` distinct minute-precision times from first to last inclusive."""
    span = (window.last_report - window.first_report).total_seconds() / 60.0
    n = window.reports
    minutes = [round(span * i / (n - 1)) for i in range(n)]
    return [window.first_report + timedelta(minutes=m) for m in minutes]


def write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def golden_outage():
    rng = np.random.default_rng(2018)
    rows = []
    for name, window in DEFAULT_HURRICANES.items():
        for county in ("12005", "12045"):
            total = int(rng.integers(5000, 20000))
            for t in report_times(window):
                rows.append([name, county, format_time(t), int(rng.integers(0, total // 4)), total])
    write(os.path.join(HERE, "golden_outage.csv"),
          ["hurricane", "county_fips", "report_time_utc", "customers_out", "customers_total"], rows)


# Gulf County style restoration curve: outages climb, peak, then recover
GULF_OUT = [0, 150, 420, 980, 1650, 2210, 2480, 2300, 1720, 960, 410, 120, 0]
ALBERTO_COUNTIES = {"12045": (7900, GULF_OUT), "12005": (102000, None), "12013": (6400, None)}


def alberto():
    rng = np.random.default_rng(27)
    out_dir = os.path.join(HERE, "alberto")
    os.makedirs(out_dir, exist_ok=True)
    window = DEFAULT_HURRICANES["alberto"]
    times = report_times(window)

    rows = []
    for county, (total, curve) in ALBERTO_COUNTIES.items():
        if curve is None:
            # a county that stays below the 2% damage threshold
            curve = [int(v) for v in rng.integers(0, int(total * 0.015), len(times))]
        for t, n_out in zip(times, curve):
            rows.append(["alberto", county, format_time(t), n_out, total])
    write(os.path.join(out_dir, "outage_reports.csv"),
          ["hurricane", "county_fips", "report_time_utc", "customers_out", "customers_total"], rows)

    rows = []
    for county in ALBERTO_COUNTIES:
        for var_id in SOCIO_IDS:
            kind = BY_ID[var_id].kind
            value = {"pct": rng.uniform(0, 100), "count": rng.uniform(1e4, 3e5),
                     "density": rng.uniform(10, 400)}[kind]
            rows.append([county, 2017, var_id, f"{value:.2f}"])
    write(os.path.join(out_dir, "socioeconomic.csv"), ["county_fips", "acs_year", "var_id", "value"], rows)

    write(os.path.join(out_dir, "county_meta.csv"), ["county_fips", "urban", "customers"],
          [[c, int(c == "12005"), total] for c, (total, _) in ALBERTO_COUNTIES.items()])

    pixels = {"12045": [(29.75, -85.25), (30.0, -85.25)],
              "12005": [(30.25, -85.5), (30.25, -85.75)],
              "12013": [(30.5, -85.25)]}
    rows = [[c, lat, lon] for c, ps in pixels.items() for lat, lon in ps]
    write(os.path.join(out_dir, "county_pixels.csv"), ["county_fips", "lat", "lon"], rows)

    start = window.first_report.replace(minute=0)
    hours = int((window.last_report - start).total_seconds() // 3600) + 2
    rows = []
    for h in range(hours):
        t = start + timedelta(hours=h)
        for c, ps in pixels.items():
            for lat, lon in ps:
                # storm passes around hour 24
                base = 6.0 + 26.0 * np.exp(-((h - 24) / 8.0) ** 2)
                rows.append([format_time(t), lat, lon, f"{base + rng.uniform(0, 3):.2f}"])
    write(os.path.join(out_dir, "gust_grid.csv"), ["time_utc", "lat", "lon", "fg10_ms"], rows)


if __name__ == "__main__":
    golden_outage()
    alberto()
