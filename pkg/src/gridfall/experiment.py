"""Repeated split / tune / fit / evaluate / MDA protocol and its outputs."""

import csv
import io
import json
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .dataset import DEFAULT_TEST_FRACTION, SplitPlan, split_indices, to_matrix
from .errors import GridfallError, IoFailure, IterationFailed, SingleClassLabels
from .forest import REPORTED_OPTIMUM, Hyperparams, fit_forest
from .importance import DEFAULT_SHUFFLES, holdout_mda, mda, normalize_importance
from .metrics import class_report, confusion, roc_auc
from .tuning import DEFAULT_K, HalvingSchedule, SearchSpace, derived_seed, halving_search
from .variables import BY_ID, FEATURE_IDS

SUMMARY_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    iterations: int = 1000
    test_fraction: float = DEFAULT_TEST_FRACTION
    stratified: bool = False
    tune: bool = True
    fixed_hp: Hyperparams = REPORTED_OPTIMUM
    space: SearchSpace = field(default_factory=SearchSpace)
    schedule: HalvingSchedule = field(default_factory=HalvingSchedule)
    k: int = DEFAULT_K
    shuffles: int = DEFAULT_SHUFFLES
    mda_on_test: bool = False
    prob_threshold: float = 0.5
    threads: int = 1

    def describe(self):
        """JSON-ready echo of the settings that shape the results."""
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "test_fraction": self.test_fraction,
            "stratified": self.stratified,
            "tune": self.tune,
            "fixed_hp": None if self.tune else self.fixed_hp.to_dict(),
            "n_candidates": self.schedule.n_candidates if self.tune else None,
            "factor": self.schedule.factor if self.tune else None,
            "min_resource": self.schedule.min_resource if self.tune else None,
            "k": self.k if self.tune else None,
            "shuffles": self.shuffles,
            "mda_on_test": self.mda_on_test,
            "prob_threshold": self.prob_threshold,
        }


@dataclass
class IterationResult:
    iteration: int
    hyperparams: Hyperparams
    accuracy: float
    confusion: object
    report: dict
    roc: object          # RocCurve, or None when the test split holds one class
    raw_mda: tuple
    pct: tuple


def run_iteration(X, y, config: ExperimentConfig, i):
    try:
        train, test = split_indices(y.shape[0], SplitPlan(config.seed, i, config.test_fraction,
                                                          config.stratified), y)
        Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]
        hp = config.fixed_hp
        if config.tune:
            hp = halving_search(config.space, config.schedule, Xtr, ytr, config.k,
                                derived_seed(config.seed, i, 1)).best
        forest = fit_forest(Xtr, ytr, hp, derived_seed(config.seed, i, 2))
        proba = forest.predict_proba(Xte)
        cm = confusion(yte, proba >= config.prob_threshold)
        try:
            roc = roc_auc(yte, proba)
        except SingleClassLabels:
            roc = None
        mda_seed = derived_seed(config.seed, i, 3)
        if config.mda_on_test:
            raw = holdout_mda(forest, Xte, yte, config.shuffles, mda_seed, config.prob_threshold)
        else:
            raw = mda(forest, Xtr, ytr, config.shuffles, mda_seed)
    except GridfallError as exc:
        raise IterationFailed(i, exc) from exc
    report = class_report(cm)
    return IterationResult(i, hp, report["accuracy"], cm, report, roc,
                           tuple(float(v) for v in raw), tuple(float(v) for v in normalize_importance(raw)))


def representative_models(results):
    """Iteration indices of the worst, mean and best model by test accuracy.

    The mean model is the one whose accuracy is nearest the average accuracy.
    All ties go to the lower iteration index.
    """
    if not results:
        raise ValueError("no results")
    acc = [(r.accuracy, r.iteration) for r in results]
    lo = min(acc, key=lambda a: (a[0], a[1]))[1]
    hi = min(acc, key=lambda a: (-a[0], a[1]))[1]
    avg = float(np.mean([a for a, _ in acc]))
    mid = min(acc, key=lambda a: (abs(a[0] - avg), a[1]))[1]
    return {"min": lo, "mean": mid, "max": hi}


@dataclass
class ExperimentSummary:
    results: list
    representative: dict
    avg_pct: tuple
    std_pct: tuple
    config: dict = field(default_factory=dict)
    feature_ids: tuple = FEATURE_IDS

    def result(self, iteration):
        for r in self.results:
            if r.iteration == iteration:
                return r
        raise KeyError(iteration)

    def table5(self):
        """Rows ``(var_id, min_pct, mean_pct, max_pct, avg_pct, std_pct)`` by descending average."""
        models = {k: self.result(v) for k, v in self.representative.items()}
        rows = []
        for j, var_id in enumerate(self.feature_ids):
            rows.append((var_id, models["min"].pct[j], models["mean"].pct[j], models["max"].pct[j],
                         self.avg_pct[j], self.std_pct[j]))
        rows.sort(key=lambda r: (-r[4], r[0]))
        return rows

    def ranking(self):
        """Feature ids ordered by average importance, most important first."""
        return [r[0] for r in self.table5()]


def summarize(results, config_echo=None):
    if not results:
        raise ValueError("no results to summarize")
    pct = np.array([r.pct for r in results])
    std = pct.std(axis=0, ddof=1) if len(results) > 1 else np.zeros(pct.shape[1])
    return ExperimentSummary(list(results), representative_models(results),
                             tuple(pct.mean(axis=0).tolist()), tuple(std.tolist()),
                             dict(config_echo or {}))


def run_experiment(records, config: ExperimentConfig = ExperimentConfig()):
    """Run ``config.iterations`` independent iterations and aggregate them.

    Iteration ``i`` derives every random stream from ``(config.seed, i)``,
    so serial and parallel runs give identical summaries.
    """
    X, y = to_matrix(records) if not isinstance(records, tuple) else records
    task = partial(run_iteration, X, y, config)
    if config.threads > 1 and config.iterations > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(task, range(config.iterations),
                                    chunksize=max(1, config.iterations // (4 * config.threads))))
    else:
        results = [task(i) for i in range(config.iterations)]
    return summarize(results, config.describe())


# -- outputs -----------------------------------------------------------------

def sig6(x):
    """Round to 6 significant digits (the serialisation precision of every output)."""
    if x is None:
        return None
    x = float(x)
    if not np.isfinite(x):
        return x
    return float(f"{x:.6g}")


def _fmt(x):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def _json_report(report):
    out = {"accuracy": sig6(report["accuracy"])}
    for cls in ("0", "1"):
        row = report[cls]
        out[cls] = {k: (sig6(v) if isinstance(v, float) else v) for k, v in row.items()}
    return out


def _result_dict(r: IterationResult):
    return {
        "iteration": r.iteration,
        "hyperparams": r.hyperparams.to_dict(),
        "accuracy": sig6(r.accuracy),
        "confusion": {"tp": r.confusion.tp, "fp": r.confusion.fp, "tn": r.confusion.tn, "fn": r.confusion.fn},
        "report": _json_report(r.report),
        "auc": sig6(r.roc.auc) if r.roc is not None else None,
        "raw_mda": [sig6(v) for v in r.raw_mda],
        "pct": [sig6(v) for v in r.pct],
    }


def summary_dict(summary: ExperimentSummary):
    return {
        "schema": "gridfall-experiment-summary",
        "version": SUMMARY_VERSION,
        "config": summary.config,
        "feature_ids": list(summary.feature_ids),
        "representative": summary.representative,
        "avg_pct": [sig6(v) for v in summary.avg_pct],
        "std_pct": [sig6(v) for v in summary.std_pct],
        "results": [_result_dict(r) for r in summary.results],
    }


def roc_csv(roc):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "fpr", "tpr"])
    if roc is not None:
        for t, f, p in zip(roc.thresholds, roc.fpr, roc.tpr):
            w.writerow([_fmt(t), _fmt(f), _fmt(p)])
    return buf.getvalue()


def report_json(report):
    """Per-class precision/recall/f1/support plus the global accuracy."""
    out = {"accuracy": sig6(report["accuracy"])}
    for cls in ("0", "1"):
        row = report[cls]
        out[cls] = {"precision": sig6(row["precision"]), "recall": sig6(row["recall"]),
                    "f1": sig6(row["f1"]), "support": row["support"]}
    return json.dumps(out, indent=1, sort_keys=True) + "\n"


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def importance_csv(raw, pct, shuffles, feature_ids=FEATURE_IDS):
    """One row per feature ``var_id,raw_mda,pct,shuffles`` by descending pct."""
    rows = sorted(zip(feature_ids, raw, pct), key=lambda r: (-r[2], r[0]))
    return _table(["var_id", "raw_mda", "pct", "shuffles"],
                  [[v, _fmt(r), _fmt(p), shuffles] for v, r, p in rows])


def render_outputs(summary: ExperimentSummary):
    """Mapping file name -> text for every experiment output."""
    if not summary.results:
        raise ValueError("no results to emit")
    files = {"summary.json": json.dumps(summary_dict(summary), indent=1, sort_keys=True) + "\n"}
    table = summary.table5()
    files["table5.csv"] = _table(
        ["var_id", "name", "min_pct", "mean_pct", "max_pct", "avg_pct", "std_pct"],
        [[r[0], BY_ID[r[0]].name, *(_fmt(v) for v in r[1:])] for r in table])
    files["importance_bars.csv"] = _table(
        ["var_id", "name", "pct", "std"],
        [[r[0], BY_ID[r[0]].name, _fmt(r[4]), _fmt(r[5])] for r in table])
    raw = np.mean([r.raw_mda for r in summary.results], axis=0)
    files["importance.csv"] = importance_csv(raw, summary.avg_pct, summary.config.get("shuffles", DEFAULT_SHUFFLES),
                                             summary.feature_ids)
    for tag, it in summary.representative.items():
        res = summary.result(it)
        files[f"roc_{tag}.csv"] = roc_csv(res.roc)
        files[f"report_{tag}.json"] = report_json(res.report)
    return files


def emit_outputs(summary: ExperimentSummary, out_dir):
    """Write the rendered outputs into ``out_dir``; nothing is written on failure."""
    files = render_outputs(summary)
    try:
        os.makedirs(out_dir, exist_ok=True)
        staging = tempfile.mkdtemp(prefix=".staging-", dir=out_dir)
        try:
            for name, text in files.items():
                with open(os.path.join(staging, name), "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            for name in files:
                os.replace(os.path.join(staging, name), os.path.join(out_dir, name))
        finally:
            shutil.rmtree(staging, ignore_errors=True)
    except OSError as exc:
        raise IoFailure(f"cannot write outputs to {out_dir}: {exc}") from exc
    return sorted(os.path.join(out_dir, n) for n in files)
