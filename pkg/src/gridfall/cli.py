"""``gridfall`` command line: ingest, hazard, train, experiment, synth, report.

Exit codes: 0 ok, 2 config error, 3 data error, 4 internal error. Failures
print one JSON line ``{"error": ..., "message": ..., "exit_code": ...}`` on stderr.
"""

import argparse
import json
import logging
import os
import sys

from . import config as cfgmod
from .config import FIELDS, integrated_path, require_file
from .dataset import build_integrated_table, read_integrated, synth_corpus, to_matrix, write_integrated
from .errors import ConfigInvalid, GridfallError, IterationFailed
from .experiment import ExperimentConfig, emit_outputs, importance_csv, run_experiment
from .forest import Hyperparams, fit_forest
from .hazard import (besttrack_compare, hazard_features, parse_besttrack, parse_hazard_features,
                     write_besttrack_compare, write_hazard_features)
from .importance import mda, normalize_importance
from .ingest import (DEFAULT_HURRICANES, load_hurricanes, parse_county_meta, parse_county_pixel_map,
                     parse_gust_grid, parse_outage_reports, parse_socioeconomic)
from .tuning import HalvingSchedule, SearchSpace, halving_search

log = logging.getLogger("gridfall")


def _windows(cfg):
    return load_hurricanes(require_file(cfg, "hurricanes")) if cfg["hurricanes"] else DEFAULT_HURRICANES


def _hp(cfg):
    try:
        return Hyperparams(cfg["criterion"], cfg["max_leaf_nodes"], cfg["max_features"],
                           cfg["n_trees"], cfg["min_samples_split"], cfg["max_features_mode"])
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None


def _schedule(cfg):
    return HalvingSchedule(cfg["n_candidates"], cfg["factor"], cfg["min_resource"])


def _out(cfg, name):
    os.makedirs(cfg["out_dir"], exist_ok=True)
    return os.path.join(cfg["out_dir"], name)


def _hazard(cfg, reports, windows):
    grid = parse_gust_grid(require_file(cfg, "gust_grid"))
    pixels = parse_county_pixel_map(require_file(cfg, "county_pixels"))
    return hazard_features(reports, grid, pixels, windows), grid


def cmd_hazard(cfg):
    windows = _windows(cfg)
    reports_path = require_file(cfg, "outage_reports")
    require_file(cfg, "gust_grid")
    require_file(cfg, "county_pixels")
    reports = parse_outage_reports(reports_path, windows)
    features, grid = _hazard(cfg, reports, windows)
    written = [_out(cfg, "hazard_features.csv")]
    write_hazard_features(features, written[0])
    if cfg["besttrack"]:
        rows = besttrack_compare(parse_besttrack(require_file(cfg, "besttrack")), grid,
                                 cfg["gust_factor"], cfg["besttrack_radius"])
        written.append(_out(cfg, "besttrack_compare.csv"))
        write_besttrack_compare(rows, written[-1])
    return written


def cmd_ingest(cfg):
    windows = _windows(cfg)
    paths = {name: require_file(cfg, name) for name in ("outage_reports", "socioeconomic", "county_meta")}
    if cfg["hazard_features"]:
        hz_path = require_file(cfg, "hazard_features")
    else:
        require_file(cfg, "gust_grid")
        require_file(cfg, "county_pixels")
    reports = parse_outage_reports(paths["outage_reports"], windows)
    socio = parse_socioeconomic(paths["socioeconomic"])
    meta = parse_county_meta(paths["county_meta"])
    hazard = parse_hazard_features(hz_path) if cfg["hazard_features"] else _hazard(cfg, reports, windows)[0]
    records = build_integrated_table(reports, socio, meta, hazard, cfg["threshold"], windows, cfg["acs_offset"])
    path = integrated_path(cfg)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    write_integrated(records, path)
    log.info("integrated %d records (%d damaged)", len(records), sum(r.label for r in records))
    return [path]


def _load_integrated(cfg):
    path = integrated_path(cfg)
    if not os.path.isfile(path):
        raise ConfigInvalid(f"integrated file not found: {path}")
    return read_integrated(path)


def cmd_train(cfg):
    X, y = to_matrix(_load_integrated(cfg))
    if cfg["fixed_hp"]:
        hp = _hp(cfg)
        trace = {"best": hp.to_dict(), "best_index": None, "n_fits": 0, "rounds": []}
    else:
        result = halving_search(SearchSpace(), _schedule(cfg), X, y, cfg["k"], cfg["seed"])
        hp, trace = result.best, result.to_dict()
    forest = fit_forest(X, y, hp, cfg["seed"])
    raw = mda(forest, X, y, cfg["shuffles"], cfg["seed"])
    written = [_out(cfg, "forest.json"), _out(cfg, "tuning_trace.json"), _out(cfg, "importance.csv")]
    with open(written[2], "w", encoding="utf-8", newline="") as fh:
        fh.write(importance_csv(raw, normalize_importance(raw), cfg["shuffles"]))
    with open(written[0], "w", encoding="utf-8") as fh:
        fh.write(forest.to_json() + "\n")
    with open(written[1], "w", encoding="utf-8") as fh:
        fh.write(json.dumps(trace, indent=1, sort_keys=True) + "\n")
    return written


def experiment_config(cfg):
    return ExperimentConfig(
        seed=cfg["seed"], iterations=cfg["iterations"], test_fraction=cfg["test_fraction"],
        stratified=cfg["stratified"], tune=not cfg["fixed_hp"], fixed_hp=_hp(cfg),
        schedule=_schedule(cfg), k=cfg["k"], shuffles=cfg["shuffles"], mda_on_test=cfg["mda_on_test"],
        prob_threshold=cfg["prob_threshold"], threads=cfg["threads"])


def cmd_experiment(cfg):
    records = _load_integrated(cfg)
    summary = run_experiment(records, experiment_config(cfg))
    return emit_outputs(summary, cfg["out_dir"])


def cmd_synth(cfg):
    try:
        records = synth_corpus(cfg["seed"], cfg["n"], cfg["positive_rate"],
                               {cfg["signal_feature"]: cfg["signal_strength"]})
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None
    path = integrated_path(cfg)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    write_integrated(records, path)
    return [path]


def cmd_report(cfg):
    from .plotting import render_report

    summary = os.path.join(cfg["out_dir"], "summary.json")
    if not os.path.isfile(summary):
        raise ConfigInvalid(f"no experiment outputs in {cfg['out_dir']} (missing {summary})")
    return render_report(cfg["out_dir"], cfg["figure_format"])


COMMANDS = {
    "ingest": (cmd_ingest, "parse the input CSVs and write integrated.csv"),
    "hazard": (cmd_hazard, "extract wind-hazard features to hazard_features.csv"),
    "train": (cmd_train, "tune and fit one forest on the integrated table"),
    "experiment": (cmd_experiment, "run the repeated split experiment and write its tables"),
    "synth": (cmd_synth, "write a synthetic integrated table"),
    "report": (cmd_report, "render figures from an experiment output directory"),
}


def _fields_help():
    lines = ["config fields (key = value in --config, or --flag):"]
    for f in FIELDS:
        lines.append(f"  {f.name:<18} default {f.default!r:<14} {f.help}")
    return "\n".join(lines)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    for f in FIELDS:
        flag = "--" + f.name.replace("_", "-")
        common.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper(),
                            help=f"{f.help} (default: {f.default!r})")
    parser = argparse.ArgumentParser(
        prog="gridfall", description="County power-outage performance classification pipeline.",
        epilog=_fields_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def _fail(exc, code):
    payload = {"error": getattr(exc, "kind", type(exc).__name__), "message": str(exc), "exit_code": code}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        file_values = cfgmod.read_config_file(args.config) if args.config else {}
        flags = {f.name: getattr(args, f.name) for f in FIELDS}
        cfg = cfgmod.resolve(file_values, flags)
        written = COMMANDS[args.command][0](cfg)
    except IterationFailed as exc:
        return _fail(exc.cause if isinstance(exc.cause, GridfallError) else exc, exc.exit_code)
    except GridfallError as exc:
        return _fail(exc, exc.exit_code)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc, 4)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
