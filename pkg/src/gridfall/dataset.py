"""The integrated county table, performance labels, splits and synthetic corpora."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DuplicateKey, MalformedRow, MissingSocio, TooFewRecords, UnknownCounty
from .hazard import hazard_lookup, require_hazard
from .ingest import (DEFAULT_HURRICANES, _convert, _finite, _rows, _write, acs_year_for,
                     max_outage_reports)
from .variables import BY_ID, FEATURE_IDS, SOCIO_IDS, VARIABLES

DEFAULT_THRESHOLD = 0.02
DEFAULT_TEST_FRACTION = 0.30
KEY_COLUMNS = ["hurricane", "county_fips"]
INTEGRATED_HEADER = KEY_COLUMNS + [v.column for v in VARIABLES]


def label_performance(max_outage_fraction, threshold=DEFAULT_THRESHOLD):
    """1 (damaged) when the worst outage fraction reaches ``threshold``, else 0."""
    if not (0.0 <= max_outage_fraction <= 1.0 and 0.0 <= threshold <= 1.0):
        raise ValueError("fraction and threshold must lie in [0, 1]")
    return int(max_outage_fraction >= threshold)


@dataclass(frozen=True)
class IntegratedRecord:
    hurricane: str
    county: str
    label: int
    socio: tuple          # ids 2..23 in order
    urban: int
    customers: int
    current_max_v3: float
    past_max_v3: float
    recovery_days: float

    @property
    def key(self):
        return (self.hurricane, self.county)

    def features(self):
        """The 27 independent variables, ids 2..28 in order."""
        return (*self.socio, self.urban, self.customers,
                self.current_max_v3, self.past_max_v3, self.recovery_days)

    @classmethod
    def from_features(cls, hurricane, county, label, features):
        f = list(features)
        if len(f) != len(FEATURE_IDS):
            raise ValueError(f"expected {len(FEATURE_IDS)} features, got {len(f)}")
        return cls(hurricane, county, int(label), tuple(float(v) for v in f[:22]),
                   int(f[22]), int(f[23]), float(f[24]), float(f[25]), float(f[26]))


def to_matrix(records):
    """``(X, y)`` arrays: X is (n, 27) float, y is (n,) int."""
    X = np.array([r.features() for r in records], dtype=float).reshape(len(records), len(FEATURE_IDS))
    y = np.array([r.label for r in records], dtype=np.int8)
    return X, y


def build_integrated_table(outage, socio, meta, hazard, threshold=DEFAULT_THRESHOLD,
                           windows=DEFAULT_HURRICANES, acs_offset=1, acs_override=None):
    """Join outage maxima, ACS rows, county metadata and hazard features.

    One record per (hurricane, county) present in ``outage``, sorted by key.
    """
    socio_by = {(s.county, s.acs_year): s for s in socio}
    meta_by = {m.county: m for m in meta}
    hz = hazard_lookup(hazard)
    out = []
    for (hurricane, county), (_, fraction) in max_outage_reports(outage).items():
        if county not in meta_by:
            raise UnknownCounty("county_meta", county)
        year = acs_year_for(hurricane, windows, acs_offset, acs_override)
        if (county, year) not in socio_by:
            raise MissingSocio(county, year)
        h = require_hazard(hz, (hurricane, county))
        m = meta_by[county]
        values = socio_by[(county, year)].values
        out.append(IntegratedRecord(
            hurricane, county, label_performance(fraction, threshold),
            tuple(float(values[i]) for i in SOCIO_IDS), int(m.urban), m.customers,
            h.current_max_v3, h.past_max_v3, h.recovery_days))
    return out


def write_integrated(records, path):
    rows = []
    for r in records:
        feats = r.features()
        cells = [repr(float(v)) for v in feats]
        cells[22], cells[23] = str(r.urban), str(r.customers)
        rows.append([r.hurricane, r.county, r.label, *cells])
    _write(path, INTEGRATED_HEADER, rows)


def read_integrated(path):
    out, seen = [], set()
    for line, cells in _rows(path, INTEGRATED_HEADER):
        hurricane, county, label = cells[0], cells[1], cells[2]
        if label not in ("0", "1"):
            raise MalformedRow(line, f"label must be 0 or 1, got {label!r}", path)
        feats = [_convert(line, path, _finite, c, BY_ID[i].column) for i, c in zip(FEATURE_IDS, cells[3:])]
        if (hurricane, county) in seen:
            raise DuplicateKey(f"{path}:{line}: duplicate key ({hurricane}, {county})")
        seen.add((hurricane, county))
        out.append(IntegratedRecord.from_features(hurricane, county, int(label), feats))
    return out


# -- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    seed: int = 0
    iteration: int = 0
    test_fraction: float = DEFAULT_TEST_FRACTION
    stratified: bool = False

    def __post_init__(self):
        if self.seed < 0 or self.iteration < 0:
            raise ValueError("seed and iteration must be nonnegative")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


def holdout_size(n, test_fraction=DEFAULT_TEST_FRACTION):
    return int(math.floor(n * test_fraction + 0.5))


def stratified_order(labels, rng):
    """A random ordering whose every prefix keeps class proportions close to the whole."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    key = np.empty(n)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        ranks = rng.permutation(idx.size)
        key[idx] = (ranks + rng.random(idx.size)) / idx.size
    return np.argsort(key, kind="stable")


def split_indices(n, plan: SplitPlan, labels=None):
    """Sorted ``(train_idx, test_idx)`` drawn from the stream keyed by (seed, iteration)."""
    if n < 10:
        raise TooFewRecords(f"need at least 10 records to split, got {n}")
    rng = np.random.default_rng([int(plan.seed), int(plan.iteration)])
    if plan.stratified:
        if labels is None:
            raise ValueError("stratified splitting needs labels")
        order = stratified_order(labels, rng)
    else:
        order = rng.permutation(n)
    k = holdout_size(n, plan.test_fraction)
    return np.sort(order[k:]), np.sort(order[:k])


def random_split(records, plan: SplitPlan):
    labels = [r.label for r in records] if plan.stratified else None
    train, test = split_indices(len(records), plan, labels)
    return [records[i] for i in train], [records[i] for i in test]


# -- synthetic corpora -------------------------------------------------------

# (low, high) range per variable kind, used to scale synthetic values
_RANGES = {
    "pct": (0.0, 100.0),
    "count": (1.0e4, 3.0e6),
    "density": (10.0, 3500.0),
    "ms": (5.0, 50.0),
    "days": (0.0, 5.0),
}
_CUSTOMER_RANGE = (5.0e3, 1.0e6)
# above this strength a single threshold on the signal feature separates the classes
SEPARABLE_STRENGTH = 0.75


def synth_corpus(seed, n, positive_rate, signal=None, hurricane="synth"):
    """Synthetic integrated table with exactly ``round(n * positive_rate)`` positives.

    ``signal`` maps variable names to strengths in [0, 1] (default: all
    signal in ``past_max_v3`` at strength 1). A signal feature takes the
    normalised value ``0.75 * u + strength * label`` with ``u`` uniform,
    rescaled to its variable's range, so strengths above 0.75 make the
    classes separable by one threshold and strength 0 is pure noise.
    Every other feature is independent noise.
    """
    if n < 20:
        raise ValueError("synthetic corpora need n >= 20")
    if not 0.0 <= positive_rate <= 1.0:
        raise ValueError("positive_rate must lie in [0, 1]")
    signal = {"past_max_v3": 1.0} if signal is None else dict(signal)
    by_name = {v.name: v for v in VARIABLES}
    for name, strength in signal.items():
        if name not in by_name or by_name[name].var_id == 1:
            raise ValueError(f"unknown feature {name!r}")
        if name == "urban":
            raise ValueError("the binary urban flag cannot carry a graded signal")
        if not 0.0 <= strength <= 1.0:
            raise ValueError("signal strengths must lie in [0, 1]")

    rng = np.random.default_rng([int(seed), 0x5EED])
    k = int(math.floor(n * positive_rate + 0.5))
    labels = np.zeros(n, dtype=np.int8)
    labels[rng.permutation(n)[:k]] = 1

    cols = []
    for var_id in FEATURE_IDS:
        var = BY_ID[var_id]
        u = rng.random(n)
        if var.kind == "binary":
            cols.append((u < 0.5).astype(float))
            continue
        lo, hi = _CUSTOMER_RANGE if var.name == "customers" else _RANGES[var.kind]
        z = (0.75 * u + signal.get(var.name, 0.0) * labels) / 1.75
        col = lo + (hi - lo) * z
        if var.name == "customers":
            col = np.maximum(1.0, np.round(col))
        cols.append(col)
    X = np.column_stack(cols)
    return [IntegratedRecord.from_features(hurricane, f"{i:05d}", labels[i], X[i]) for i in range(n)]
