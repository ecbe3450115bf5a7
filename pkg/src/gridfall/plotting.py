"""Matplotlib figures rendered from the experiment's CSV/JSON outputs."""

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "gridfall",
}
MODEL_COLORS = {"min": "tab:red", "mean": "tab:blue", "max": "tab:green"}
MODEL_LABELS = {"min": "worst", "mean": "average", "max": "best"}
# strips timestamps so repeated renders are byte-identical
_METADATA = {
    "png": {"Software": None},
    "svg": {"Date": None, "Creator": None},
    "pdf": {"CreationDate": None, "ModDate": None, "Producer": None, "Creator": None},
}


def _save(fig, path):
    fmt = os.path.splitext(path)[1].lstrip(".").lower()
    fig.savefig(path, format=fmt, bbox_inches="tight", metadata=_METADATA.get(fmt))
    plt.close(fig)
    return path


def read_roc(path):
    fpr, tpr = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            fpr.append(float(row["fpr"]))
            tpr.append(float(row["tpr"]))
    return fpr, tpr


def plot_roc(curves, path):
    """``curves`` maps a model tag to ``(fpr, tpr, auc)``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.4))
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls="--")
        for tag, (fpr, tpr, auc) in curves.items():
            if not fpr:
                continue
            label = f"{MODEL_LABELS.get(tag, tag)} (AUC = {auc:.3f})" if auc is not None else tag
            ax.plot(fpr, tpr, color=MODEL_COLORS.get(tag), lw=1.4, label=label)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_title("ROC curve")
        ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)


def plot_importance(rows, path, top=None):
    """Bar chart of average MDA percentages with std whiskers.

    ``rows`` are ``(var_id, pct, std)`` in display order.
    """
    rows = list(rows)[:top] if top else list(rows)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7.0, 3.2))
        x = range(len(rows))
        ax.bar(x, [r[1] for r in rows], color="tab:blue", width=0.7)
        ax.errorbar(x, [r[1] for r in rows], yerr=[r[2] for r in rows], fmt="none",
                    ecolor="black", elinewidth=0.6, capsize=0)
        ax.set_xticks(list(x))
        ax.set_xticklabels([str(r[0]) for r in rows])
        ax.set_xlabel("Variable id")
        ax.set_ylabel("Permutation importance MDA (%)")
        ax.set_ylim(bottom=0)
        return _save(fig, path)


def plot_class_report(report, path, title="Classification report"):
    """Heat-map table of precision / recall / f1 per class from a report dict."""
    metrics = ("precision", "recall", "f1")
    classes = ("0", "1")
    cells = [[report[c][m] for m in metrics] for c in classes]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.0))
        im = ax.imshow(cells, cmap="RdYlGn", vmin=0.0, vmax=1.0, aspect="auto")
        for i, row in enumerate(cells):
            for j, v in enumerate(row):
                ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=8)
        ax.set_xticks(range(len(metrics)))
        ax.set_xticklabels(metrics)
        ax.set_yticks(range(len(classes)))
        ax.set_yticklabels([f"{c} (n={report[c]['support']})" for c in classes])
        ax.set_title(f"{title} - accuracy {report['accuracy']:.0%}")
        fig.colorbar(im, ax=ax, fraction=0.05)
        return _save(fig, path)


def render_report(out_dir, fmt="png"):
    """Render every figure for an experiment output directory into ``out_dir/figures``."""
    with open(os.path.join(out_dir, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    by_iter = {r["iteration"]: r for r in summary["results"]}
    curves = {}
    for tag, it in summary["representative"].items():
        fpr, tpr = read_roc(os.path.join(out_dir, f"roc_{tag}.csv"))
        curves[tag] = (fpr, tpr, by_iter[it]["auc"])
    written = [plot_roc(curves, os.path.join(fig_dir, f"roc.{fmt}"))]

    rows = []
    with open(os.path.join(out_dir, "importance_bars.csv"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append((int(row["var_id"]), float(row["pct"]), float(row["std"])))
    written.append(plot_importance(rows, os.path.join(fig_dir, f"importance.{fmt}")))

    with open(os.path.join(out_dir, "report_mean.json"), encoding="utf-8") as fh:
        report = json.load(fh)
    written.append(plot_class_report(report, os.path.join(fig_dir, f"class_report.{fmt}"),
                                     "Classification report (mean model)"))
    return written

