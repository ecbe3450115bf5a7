"""Run configuration: defaults, ``key = value`` files, and CLI overrides.

Precedence is flag > file > environment (``GRIDFALL_SEED``, seed only) > default.
"""

import os
from dataclasses import dataclass

from .errors import ConfigInvalid

SEED_ENV = "GRIDFALL_SEED"


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    t = str(text).strip().lower()
    return None if t in ("", "auto", "none") else int(t)


def _opt_path(text):
    t = str(text).strip()
    return t or None


@dataclass(frozen=True)
class Field:
    name: str
    convert: object
    default: object
    help: str


FIELDS = (
    Field("outage_reports", _opt_path, None, "outage reports CSV"),
    Field("socioeconomic", _opt_path, None, "ACS socioeconomic CSV (long format)"),
    Field("county_meta", _opt_path, None, "county urban flag and customer count CSV"),
    Field("gust_grid", _opt_path, None, "hourly gust grid CSV"),
    Field("county_pixels", _opt_path, None, "county -> grid pixel CSV"),
    Field("hurricanes", _opt_path, None, "hurricane window CSV (built-in report windows if unset)"),
    Field("hazard_features", _opt_path, None, "precomputed hazard_features.csv used by ingest instead of the grid"),
    Field("besttrack", _opt_path, None, "best-track points CSV for the gust comparison table"),
    Field("integrated", _opt_path, None, "integrated table CSV (default: <out_dir>/integrated.csv)"),
    Field("out_dir", str, "out", "output directory"),
    Field("threshold", float, 0.02, "outage fraction at or above which a county is damaged"),
    Field("gust_factor", float, 1.11, "sustained-to-gust factor for best-track winds"),
    Field("besttrack_radius", float, 0.5, "half-width in degrees of the grid box around a track point"),
    Field("acs_offset", int, 1, "ACS vintage = landfall year minus this"),
    Field("test_fraction", float, 0.30, "held-out share of every random split"),
    Field("iterations", int, 1000, "number of random split iterations"),
    Field("seed", int, 0, f"master seed (falls back to ${SEED_ENV})"),
    Field("stratified", _bool, False, "stratify the random splits by label"),
    Field("fixed_hp", _bool, False, "skip the search and use the fixed hyperparameters below"),
    Field("criterion", str, "entropy", "fixed hyperparameter: split criterion (gini|entropy)"),
    Field("max_leaf_nodes", int, 10, "fixed hyperparameter: leaves per tree"),
    Field("max_features", int, 4, "fixed hyperparameter: candidate features per split"),
    Field("n_trees", int, 10, "fixed hyperparameter: trees per forest"),
    Field("min_samples_split", int, 7, "fixed hyperparameter: smallest splittable node"),
    Field("max_features_mode", str, "split", "draw candidate features per 'split' or per 'tree'"),
    Field("n_candidates", int, 27, "successive halving: sampled candidates"),
    Field("factor", int, 3, "successive halving: elimination factor"),
    Field("min_resource", _opt_int, None, "successive halving: first-round samples (auto if unset)"),
    Field("k", int, 5, "cross-validation folds"),
    Field("shuffles", int, 10, "permutations per feature for MDA"),
    Field("mda_on_test", _bool, False, "compute MDA on the test split instead of training OOB"),
    Field("prob_threshold", float, 0.5, "vote fraction at or above which a county is predicted damaged"),
    Field("threads", int, 1, "worker processes for experiment iterations"),
    Field("n", int, 335, "synth: number of records"),
    Field("positive_rate", float, 0.11, "synth: share of damaged records"),
    Field("signal_feature", str, "past_max_v3", "synth: feature carrying the label signal"),
    Field("signal_strength", float, 1.0, "synth: signal strength in [0, 1]"),
    Field("figure_format", str, "png", "report: figure file format (png, svg, pdf)"),
)

BY_NAME = {f.name: f for f in FIELDS}


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    if not os.path.isfile(path):
        raise ConfigInvalid(f"config file not found: {path}")
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigInvalid(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in BY_NAME:
                raise ConfigInvalid(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value
    return values


def resolve(file_values=None, flag_values=None, environ=None):
    """Merge sources into a plain dict of typed values."""
    environ = os.environ if environ is None else environ
    file_values = file_values or {}
    flag_values = {k: v for k, v in (flag_values or {}).items() if v is not None}
    out = {}
    for f in FIELDS:
        if f.name in flag_values:
            raw, source = flag_values[f.name], "flag"
        elif f.name in file_values:
            raw, source = file_values[f.name], "file"
        elif f.name == "seed" and environ.get(SEED_ENV, "").strip():
            raw, source = environ[SEED_ENV], SEED_ENV
        else:
            out[f.name] = f.default
            continue
        try:
            out[f.name] = f.convert(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError):
            raise ConfigInvalid(f"bad value for {f.name} from {source}: {raw!r}") from None
    _validate(out)
    return out


def _validate(cfg):
    def need(cond, msg):
        if not cond:
            raise ConfigInvalid(msg)

    need(0.0 <= cfg["threshold"] <= 1.0, "threshold must lie in [0, 1]")
    need(cfg["gust_factor"] > 0, "gust_factor must be positive")
    need(0.0 < cfg["test_fraction"] < 1.0, "test_fraction must lie in (0, 1)")
    need(cfg["iterations"] >= 1, "iterations must be >= 1")
    need(cfg["seed"] >= 0, "seed must be nonnegative")
    need(cfg["threads"] >= 1, "threads must be >= 1")
    need(cfg["shuffles"] >= 1, "shuffles must be >= 1")
    need(cfg["k"] >= 2, "k must be >= 2")
    need(cfg["n_candidates"] >= 2, "n_candidates must be >= 2")
    need(cfg["factor"] >= 2, "factor must be >= 2")
    need(0.0 <= cfg["positive_rate"] <= 1.0, "positive_rate must lie in [0, 1]")
    need(0.0 <= cfg["signal_strength"] <= 1.0, "signal_strength must lie in [0, 1]")
    need(cfg["criterion"] in ("gini", "entropy"), "criterion must be gini or entropy")
    need(cfg["max_features_mode"] in ("split", "tree"), "max_features_mode must be split or tree")
    need(cfg["figure_format"] in ("png", "svg", "pdf"), "figure_format must be png, svg or pdf")


def require_file(cfg, name):
    path = cfg.get(name)
    if not path:
        raise ConfigInvalid(f"{name} is required for this command")
    if not os.path.isfile(path):
        raise ConfigInvalid(f"{name} file not found: {path}")
    return path


def integrated_path(cfg):
    return cfg["integrated"] or os.path.join(cfg["out_dir"], "integrated.csv")
