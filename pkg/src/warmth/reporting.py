"""CSV tables and SVG plots derived from a cross-validation report."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import AVERAGINGS, roc_curve  # noqa: E402

plt.rcParams["svg.hashsalt"] = "warmth"


def _safe(key: str) -> str:
    return key.replace("#", "_")


def summary_rows(report: dict) -> list[dict]:
    rows = []
    for key, rec in report["classifiers"].items():
        for a in AVERAGINGS:
            rows.append(
                {
                    "classifier": key,
                    "averaging": a,
                    "mean": rec["mean"][a],
                    "std_runs": rec["std_runs"][a],
                    "std_folds": rec["std_folds"][a],
                }
            )
    return rows


def format_summary(report: dict, averaging: str | None = None) -> str:
    averaging = averaging or report.get("headline_averaging", "weighted")
    lines = [f"{'classifier':<12} {'F1 (' + averaging + ')':>18} {'std runs':>9} {'std folds':>10}"]
    for key, rec in report["classifiers"].items():
        lines.append(
            f"{key:<12} {100 * rec['mean'][averaging]:>18.1f} {100 * rec['std_runs'][averaging]:>9.1f}"
            f" {100 * rec['std_folds'][averaging]:>10.1f}"
        )
    return "\n".join(lines)


def format_compare(rows: list[dict], alpha: float = 0.05) -> str:
    lines = [f"{'classifier':<12} {'mean A':>8} {'mean B':>8} {'p':>10}"]
    for r in rows:
        star = " *" if r["p_value"] < alpha else ""
        lines.append(f"{r['classifier']:<12} {100 * r['mean_a']:>8.1f} {100 * r['mean_b']:>8.1f} {r['p_value']:>10.4g}{star}")
    lines.append(f"* p < {alpha}")
    return "\n".join(lines)


def recompute_roc(report: dict, key: str, run: int) -> dict:
    """ROC curves of one run rebuilt from the stored out-of-fold scores."""
    rec = report["classifiers"][key]
    scores = np.asarray(rec["oof_scores"][run])
    out = {}
    for j, c in enumerate(report["classes"]):
        pts, auc = roc_curve(report["labels"], scores[:, j], c)
        out[c] = {"fpr": pts[:, 0].tolist(), "tpr": pts[:, 1].tolist(), "auc": auc}
    return out


def plot_confusion(cm, classes, path, title=""):
    cm = np.asarray(cm)
    norm = cm / np.maximum(cm.sum(axis=1, keepdims=True), 1)
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    ax.imshow(norm, cmap="Blues", vmin=0, vmax=1)
    for i in range(len(classes)):
        for j in range(len(classes)):
            ax.text(j, i, f"{cm[i, j]}\n{norm[i, j]:.0%}", ha="center", va="center",
                    color="white" if norm[i, j] > 0.5 else "black", fontsize=8)
    ax.set_xticks(range(len(classes)), classes)
    ax.set_yticks(range(len(classes)), classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_roc(roc: dict, path, title=""):
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    for c, cur in roc.items():
        ax.plot(cur["fpr"], cur["tpr"], label=f"{c} (AUC {cur['auc']:.3f})")
    ax.plot([0, 1], [0, 1], color="grey", lw=0.8, ls="--")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title, fontsize=9)
    ax.legend(fontsize=7, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_artifacts(report: dict, out: str | Path, run: int = 0) -> None:
    """Summary CSV plus per-classifier confusion and ROC CSVs; SVGs for ``run``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    classes = report["classes"]
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, ["classifier", "averaging", "mean", "std_runs", "std_folds"], lineterminator="\n")
        w.writeheader()
        w.writerows(summary_rows(report))
    for key, rec in report["classifiers"].items():
        name = _safe(key)
        with (out / f"confusion_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "true", *(f"pred_{c}" for c in classes)])
            for r, cm in enumerate(rec["confusion"]):
                for c, row in zip(classes, cm):
                    w.writerow([r, c, *row])
        with (out / f"roc_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "class", "fpr", "tpr", "auc"])
            for r, roc in enumerate(rec["roc"]):
                for c in classes:
                    cur = roc[c]
                    for fpr, tpr in zip(cur["fpr"], cur["tpr"]):
                        w.writerow([r, c, repr(fpr), repr(tpr), repr(cur["auc"])])
        plot_confusion(rec["confusion"][run], classes, out / f"confusion_{name}.svg", f"{key}, run {run}")
        plot_roc(rec["roc"][run], out / f"roc_{name}.svg", f"{key}, run {run}")
