"""Repeated stratified cross-validation and the metrics reported from it.

Protocol: for run ``r`` in ``range(plan.runs)`` samples are shuffled within
class with seed ``base_seed + r`` and dealt into ``k`` folds; every fold is
held out once, so each sample is tested exactly once per run. Fold-dependent
feature steps (TF-IDF vocabulary, standardization) are re-fitted on each
fold's training rows through :attr:`CvDataset.featurize`.

F1 is reported with macro, weighted and micro averaging; ``weighted`` is
the headline number. Overall mean/std are taken over the per-run means,
and the std over all ``runs * k`` fold scores is kept alongside.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .matrix import FeatureMatrix
from .models import ClassifierSpec, train

log = logging.getLogger(__name__)

AVERAGINGS = ("macro", "weighted", "micro")
HEADLINE = "weighted"


# ---------------------------------------------------------------------------
# folds


def stratified_kfold(y: Sequence, k: int = 5, seed: int = 0, groups: Sequence | None = None) -> np.ndarray:
    """Fold index (0..k-1) for every sample.

    Within each class samples are shuffled and dealt round-robin, so per-fold
    class counts differ by at most one. Classes with fewer than ``k`` members
    are spread one per fold. With ``groups`` whole groups are assigned
    greedily instead, and stratification is best-effort.
    """
    y = list(y)
    n = len(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    classes = sorted(set(y), key=str)
    if groups is not None:
        return _group_folds(y, list(groups), k, rng, classes)
    y_arr = np.array([classes.index(v) for v in y])
    dealt = np.concatenate([rng.permutation(np.flatnonzero(y_arr == c)) for c in range(len(classes))])
    folds = np.empty(n, dtype=np.int64)
    folds[dealt] = np.arange(n) % k
    return folds


def _group_folds(y, groups, k, rng, classes):
    if len(groups) != len(y):
        raise ValueError("groups and y differ in length")
    names = sorted(set(groups), key=str)
    if len(names) < k:
        raise ValueError(f"cannot split {len(names)} groups into {k} folds")
    ci = {c: i for i, c in enumerate(classes)}
    members = {g: [] for g in names}
    for i, g in enumerate(groups):
        members[g].append(i)
    counts = {g: np.bincount([ci[y[i]] for i in members[g]], minlength=len(classes)) for g in names}
    order = [names[i] for i in rng.permutation(len(names))]
    order.sort(key=lambda g: -len(members[g]))  # stable: large groups first, shuffled within size
    total = np.bincount([ci[v] for v in y], minlength=len(classes)).astype(float)
    target = total / k
    fold_counts = np.zeros((k, len(classes)))
    folds = np.empty(len(y), dtype=np.int64)
    for g in order:
        # marginal change in squared deviation from the per-fold target
        cost = np.sum(counts[g] ** 2 + 2 * counts[g] * (fold_counts - target), axis=1)
        sizes = fold_counts.sum(axis=1)
        best = min(range(k), key=lambda f: (cost[f], sizes[f], f))
        fold_counts[best] += counts[g]
        folds[members[g]] = best
    return folds


# ---------------------------------------------------------------------------
# metrics


def _check_pair(y_true, y_pred):
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted labels")
    return y_true, y_pred


def confusion_matrix(y_true, y_pred, classes: Sequence | None = None) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    y_true, y_pred = _check_pair(y_true, y_pred)
    classes = list(classes) if classes is not None else sorted(set(y_true) | set(y_pred), key=str)
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in index or p not in index:
            raise ValueError(f"label {t if t not in index else p!r} not in class list")
        cm[index[t], index[p]] += 1
    return cm


def f1_from_confusion(cm: np.ndarray, averaging: str = HEADLINE) -> float:
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    if averaging == "micro":
        total = cm.sum()
        return float(tp.sum() / total) if total else 0.0
    pred = cm.sum(axis=0)
    support = cm.sum(axis=1)
    prec = np.divide(tp, pred, out=np.zeros_like(tp), where=pred > 0)
    rec = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    denom = prec + rec
    f1 = np.divide(2 * prec * rec, denom, out=np.zeros_like(tp), where=denom > 0)
    if averaging == "macro":
        return float(f1.mean())
    if averaging == "weighted":
        return float(np.dot(f1, support) / support.sum()) if support.sum() else 0.0
    raise ValueError(f"unknown averaging {averaging!r}; expected one of {AVERAGINGS}")


def f1_score(y_true, y_pred, averaging: str = HEADLINE, classes: Sequence | None = None) -> float:
    """F1 over the classes in ``classes`` (default: labels seen in either input).

    Per-class F1 is 0 when precision + recall is 0.
    """
    return f1_from_confusion(confusion_matrix(y_true, y_pred, classes), averaging)


def roc_curve(y_true, scores, positive_class, classes: Sequence | None = None):
    """One-vs-rest ROC for ``positive_class``.

    ``scores`` is either one score per sample or a per-class score matrix
    whose columns follow ``classes``. Returns ``(points, auc)`` with
    ``points`` an ``(m, 2)`` array of (FPR, TPR) from (0, 0) to (1, 1);
    tied scores form a single step. AUC uses the trapezoid rule.
    """
    y_true = list(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim == 2:
        if classes is None:
            raise ValueError("classes required with a score matrix")
        s = s[:, list(classes).index(positive_class)]
    if len(s) != len(y_true):
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    pos = np.array([t == positive_class for t in y_true])
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"AUC undefined: class {positive_class!r} is {'absent' if n_pos == 0 else 'the only class'}")
    order = np.argsort(-s, kind="stable")
    s_sorted, pos_sorted = s[order], pos[order]
    tps = np.cumsum(pos_sorted)
    fps = np.cumsum(~pos_sorted)
    last_of_tie = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), len(s) - 1]
    tpr = np.r_[0.0, tps[last_of_tie] / n_pos]
    fpr = np.r_[0.0, fps[last_of_tie] / n_neg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return np.column_stack([fpr, tpr]), auc


def t_test(scores_a, scores_b, paired: bool = True) -> float:
    """Two-sided p-value for equal mean scores (paired t or Welch).

    When the relevant variance is zero, p is 1.0 for equal means and 0.0
    otherwise.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if paired:
        if len(a) != len(b):
            raise ValueError("paired test needs equal-length score vectors")
        if len(a) < 2:
            raise ValueError("need at least two paired scores")
        d = a - b
        mean, sd = d.mean(), d.std(ddof=1)
        if sd == 0:
            return 1.0 if mean == 0 else 0.0
        t = mean / (sd / math.sqrt(len(d)))
        df = len(d) - 1
    else:
        if len(a) < 2 or len(b) < 2:
            raise ValueError("Welch test needs at least two scores per group")
        va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
        diff = a.mean() - b.mean()
        if va + vb == 0:
            return 1.0 if diff == 0 else 0.0
        t = diff / math.sqrt(va + vb)
        df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))


# ---------------------------------------------------------------------------
# cross-validation driver


@dataclass(frozen=True)
class CvPlan:
    k: int = 5
    runs: int = 5
    base_seed: int = 0
    grouping: str = "none"

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.grouping not in ("none", "by_interview"):
            raise ValueError(f"grouping must be 'none' or 'by_interview', not {self.grouping!r}")

    def to_dict(self):
        return {"k": self.k, "runs": self.runs, "base_seed": self.base_seed, "grouping": self.grouping}


Featurizer = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class CvDataset:
    """Labels plus a per-fold featurizer ``(train_idx, test_idx) -> (X_train, X_test)``."""

    sample_ids: list[str]
    labels: list
    featurize: Featurizer
    groups: list | None = None
    classes: list | None = None

    @classmethod
    def static(cls, X, labels, sample_ids=None, groups=None, classes=None) -> "CvDataset":
        """Dataset whose features do not depend on the fold."""
        if isinstance(X, FeatureMatrix):
            sample_ids = sample_ids or X.sample_ids
            X = X.values
        X = np.asarray(X, dtype=np.float64)
        ids = list(sample_ids) if sample_ids is not None else [str(i) for i in range(len(X))]
        return cls(ids, list(labels), lambda tr, te: (X[tr], X[te]), groups, classes)

    def class_list(self) -> list:
        present = set(self.labels)
        if self.classes is not None:
            return [c for c in self.classes if c in present]
        return sorted(present, key=str)


def spec_key(specs: Sequence[ClassifierSpec]) -> list[str]:
    keys, seen = [], {}
    for s in specs:
        seen[s.kind] = seen.get(s.kind, 0) + 1
        keys.append(s.kind if seen[s.kind] == 1 else f"{s.kind}#{seen[s.kind]}")
    return keys


def _expand_scores(model, X, classes):
    s = model.decision_scores(X)
    if list(model.classes) == list(classes):
        return s
    out = np.empty((len(X), len(classes)))
    fill = s.min(axis=1) - 1.0
    for j, c in enumerate(classes):
        out[:, j] = s[:, model.classes.index(c)] if c in model.classes else fill
    return out


def run_cv(dataset: CvDataset, specs: Sequence[ClassifierSpec], plan: CvPlan = CvPlan()) -> dict:
    """Run every classifier over the same repeated fold partitions.

    Returns a JSON-ready report dict; see :func:`summarize` for the layout.
    """
    y = list(dataset.labels)
    n = len(y)
    classes = dataset.class_list()
    if len(classes) < 2:
        raise ValueError("need at least two classes for cross-validation")
    groups = dataset.groups if plan.grouping == "by_interview" else None
    if plan.grouping == "by_interview" and groups is None:
        raise ValueError("grouping=by_interview needs group ids")
    keys = spec_key(specs)
    per = {
        key: {
            "spec": spec.to_dict(),
            "f1": {a: [] for a in AVERAGINGS},
            "confusion": [],
            "roc": [],
            "oof_scores": [],
            "oof_predictions": [],
        }
        for key, spec in zip(keys, specs)
    }
    fold_assign = []
    for r in range(plan.runs):
        folds = stratified_kfold(y, plan.k, plan.base_seed + r, groups)
        fold_assign.append(folds.tolist())
        preds = {key: [None] * n for key in keys}
        scores = {key: np.zeros((n, len(classes))) for key in keys}
        fold_f1 = {key: {a: [] for a in AVERAGINGS} for key in keys}
        for f in range(plan.k):
            te = np.flatnonzero(folds == f)
            tr = np.flatnonzero(folds != f)
            Xtr, Xte = dataset.featurize(tr, te)
            ytr = [y[i] for i in tr]
            yte = [y[i] for i in te]
            for key, spec in zip(keys, specs):
                fold_spec = ClassifierSpec(spec.kind, spec.hyperparameters, spec.seed + 1000 * r + f)
                model = train(fold_spec, Xtr, ytr, classes)
                p = model.predict(Xte)
                for i, lab in zip(te, p):
                    preds[key][i] = lab
                scores[key][te] = _expand_scores(model, Xte, classes)
                for a in AVERAGINGS:
                    fold_f1[key][a].append(f1_score(yte, p, a))
            log.info("run %d: %s", r, {k: round(float(np.mean(v[HEADLINE])), 4) for k, v in fold_f1.items()})
        for key in keys:
            rec = per[key]
            for a in AVERAGINGS:
                rec["f1"][a].append(fold_f1[key][a])
            rec["confusion"].append(confusion_matrix(y, preds[key], classes).tolist())
            roc = {}
            for j, c in enumerate(classes):
                pts, auc = roc_curve(y, scores[key][:, j], c)
                roc[str(c)] = {"fpr": pts[:, 0].tolist(), "tpr": pts[:, 1].tolist(), "auc": auc}
            rec["roc"].append(roc)
            rec["oof_scores"].append(scores[key].tolist())
            rec["oof_predictions"].append([str(v) for v in preds[key]])
    for rec in per.values():
        rec.update(summarize(rec["f1"]))
    counts = {str(c): int(sum(1 for v in y if v == c)) for c in classes}
    return {
        "plan": plan.to_dict(),
        "seeds": {"base_seed": plan.base_seed, "fold_seeds": [plan.base_seed + r for r in range(plan.runs)]},
        "classes": [str(c) for c in classes],
        "class_counts": counts,
        "sample_ids": list(dataset.sample_ids),
        "labels": [str(v) for v in y],
        "folds": fold_assign,
        "headline_averaging": HEADLINE,
        "classifiers": per,
    }


def summarize(f1: dict) -> dict:
    """Run means, overall mean, std over run means and std over all folds."""
    out = {"run_means": {}, "mean": {}, "std_runs": {}, "std_folds": {}}
    for a, runs in f1.items():
        arr = np.array(runs, dtype=np.float64)
        means = arr.mean(axis=1)
        out["run_means"][a] = means.tolist()
        out["mean"][a] = float(means.mean())
        out["std_runs"][a] = float(means.std())
        out["std_folds"][a] = float(arr.std())
    return out


def fold_scores(report: dict, key: str, averaging: str = HEADLINE) -> list[float]:
    """The flat ``runs * k`` fold scores of one classifier, run-major."""
    return [s for run in report["classifiers"][key]["f1"][averaging] for s in run]
