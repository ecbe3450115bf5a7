import filecmp
import json
import os
import subprocess
import sys

import pytest

from conftest import ALBERTO
from gridfall import config as cfgmod
from gridfall.cli import build_parser, main
from gridfall.config import FIELDS
from gridfall.dataset import read_integrated
from gridfall.errors import ConfigInvalid
from gridfall.forest import Forest


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def inputs(*names):
    flags = []
    for name in names:
        flags += [f"--{name.replace('_', '-')}", os.path.join(ALBERTO, f"{name}.csv")]
    return flags


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)

    def clean(c):
        if c.left_only or c.right_only or c.diff_files or c.funny_files:
            return False
        _, mismatch, errors = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
        return not mismatch and not errors and all(clean(s) for s in c.subdirs.values())
    return clean(cmp)


def test_synth_37_positives(tmp_path, capsys):
    code, out, _ = run(["synth", "--out-dir", str(tmp_path), "--n", "335", "--positive-rate", "0.11"], capsys)
    assert code == 0
    recs = read_integrated(out.strip())
    assert len(recs) == 335 and sum(r.label for r in recs) == 37


def test_missing_gust_grid_names_path(tmp_path, capsys):
    missing = str(tmp_path / "nope" / "gust_grid.csv")
    code, _, err = run(["hazard", "--out-dir", str(tmp_path), *inputs("outage_reports", "county_pixels"),
                        "--gust-grid", missing], capsys)
    assert code == 2
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "ConfigInvalid" and missing in payload["message"]
    code, _, err = run(["hazard", "--out-dir", str(tmp_path), *inputs("outage_reports", "county_pixels")], capsys)
    assert code == 2 and "gust_grid" in err


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "o.csv"
    bad.write_text("hurricane,county_fips,report_time_utc,customers_out,customers_total\n"
                   "alberto,12045,2018-05-27T10:00Z,11,10\n")
    code, _, err = run(["hazard", "--outage-reports", str(bad), *inputs("gust_grid", "county_pixels"),
                        "--out-dir", str(tmp_path)], capsys)
    assert code == 3
    payload = json.loads(err.strip())
    assert payload["error"] == "CustomersExceedTotal" and payload["exit_code"] == 3
    assert payload["message"].startswith(f"{bad}:2:")


def test_pipeline_on_alberto_fixture(tmp_path, capsys):
    out = str(tmp_path / "out")
    code, stdout, _ = run(["hazard", "--out-dir", out, *inputs("outage_reports", "gust_grid", "county_pixels")], capsys)
    assert code == 0 and stdout.strip().endswith("hazard_features.csv")
    code, stdout, _ = run(["ingest", "--out-dir", out, *inputs("outage_reports", "socioeconomic", "county_meta"),
                           "--hazard-features", os.path.join(out, "hazard_features.csv")], capsys)
    assert code == 0
    via_hazard = read_integrated(stdout.strip())
    code, stdout, _ = run(["ingest", "--out-dir", str(tmp_path / "b"), *inputs(
        "outage_reports", "socioeconomic", "county_meta", "gust_grid", "county_pixels")], capsys)
    assert code == 0
    assert read_integrated(stdout.strip()) == via_hazard
    assert [r.label for r in via_hazard] == [0, 0, 1]


def test_train_outputs(tmp_path, capsys):
    out = str(tmp_path)
    run(["synth", "--out-dir", out, "--n", "120", "--seed", "2"], capsys)
    code, stdout, _ = run(["train", "--out-dir", out, "--fixed-hp", "true"], capsys)
    assert code == 0
    files = stdout.split()
    assert [os.path.basename(f) for f in files] == ["forest.json", "tuning_trace.json", "importance.csv"]
    with open(files[0]) as fh:
        forest = Forest.from_json(fh.read())
    assert len(forest.trees) == 10
    code, stdout, _ = run(["train", "--out-dir", out, "--n-candidates", "9", "--k", "3"], capsys)
    assert code == 0
    with open(stdout.split()[1]) as fh:
        trace = json.load(fh)
    assert [len(r["candidates"]) for r in trace["rounds"]] == [9, 3]
    final = trace["rounds"][-1]["candidates"]
    top = max(final, key=lambda c: (c["cv_score"], -c["index"]))
    assert trace["best"] == top["hyperparams"] and trace["best_index"] == top["index"]


def test_experiment_determinism_and_report(tmp_path, capsys):
    run(["synth", "--out-dir", str(tmp_path / "data"), "--n", "120", "--seed", "4"], capsys)
    data = str(tmp_path / "data" / "integrated.csv")
    dirs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        code, _, _ = run(["experiment", "--integrated", data, "--out-dir", out, "--seed", "7",
                          "--iterations", "10", "--fixed-hp", "true"], capsys)
        assert code == 0
        dirs.append(out)
    assert same_tree(*dirs)
    code, stdout, _ = run(["report", "--out-dir", dirs[0]], capsys)
    assert code == 0
    figs = stdout.split()
    assert len(figs) == 3 and all(os.path.getsize(f) > 0 for f in figs)
    run(["report", "--out-dir", dirs[1]], capsys)
    assert same_tree(*dirs)
    code, stdout, _ = run(["report", "--out-dir", dirs[0], "--figure-format", "svg"], capsys)
    assert code == 0 and all(f.endswith(".svg") for f in stdout.split())


def test_report_without_outputs(tmp_path, capsys):
    code, _, err = run(["report", "--out-dir", str(tmp_path)], capsys)
    assert code == 2 and "summary.json" in err


def test_experiment_missing_integrated(tmp_path, capsys):
    code, _, err = run(["experiment", "--out-dir", str(tmp_path)], capsys)
    assert code == 2 and "integrated" in err


def test_help_lists_every_field():
    text = build_parser().format_help()
    for f in FIELDS:
        assert f.name in text and repr(f.default) in text
    sub = build_parser()._subparsers._group_actions[0].choices["experiment"].format_help()
    for f in FIELDS:
        assert "--" + f.name.replace("_", "-") in sub


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gridfall", "synth", "--out-dir", str(tmp_path), "--n", "30"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip().endswith("integrated.csv")


# -- configuration -----------------------------------------------------------

def test_defaults_match_reported_values():
    cfg = cfgmod.resolve({}, {}, environ={})
    assert cfg["threshold"] == 0.02 and cfg["test_fraction"] == 0.30 and cfg["iterations"] == 1000
    assert cfg["gust_factor"] == 1.11 and cfg["k"] == 5 and cfg["factor"] == 3
    assert (cfg["criterion"], cfg["max_leaf_nodes"], cfg["max_features"], cfg["n_trees"],
            cfg["min_samples_split"]) == ("entropy", 10, 4, 10, 7)


def test_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nseed = 5\niterations = 12  # trailing\nmda-on-test = yes\n")
    file_values = cfgmod.read_config_file(str(path))
    assert cfgmod.resolve(file_values, {}, environ={})["seed"] == 5
    assert cfgmod.resolve(file_values, {"seed": "9"}, environ={})["seed"] == 9
    assert cfgmod.resolve({}, {}, environ={"GRIDFALL_SEED": "11"})["seed"] == 11
    assert cfgmod.resolve(file_values, {}, environ={"GRIDFALL_SEED": "11"})["seed"] == 5
    cfg = cfgmod.resolve(file_values, {}, environ={})
    assert cfg["iterations"] == 12 and cfg["mda_on_test"] is True


@pytest.mark.parametrize("text", ["bogus = 1\n", "seed 5\n", "seed = -1\n", "threshold = 2\n",
                                  "criterion = mse\n", "iterations = many\n"])
def test_bad_config(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigInvalid):
        cfgmod.resolve(cfgmod.read_config_file(str(path)), {}, environ={})


def test_config_file_via_cli(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text(f"out_dir = {tmp_path / 'o'}\nn = 50\npositive_rate = 0.2\n")
    code, out, _ = run(["synth", "--config", str(path)], capsys)
    assert code == 0
    assert sum(r.label for r in read_integrated(out.strip())) == 10
    code, _, err = run(["synth", "--config", str(tmp_path / "none.cfg")], capsys)
    assert code == 2
