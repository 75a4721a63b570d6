"""Four classifiers behind one train / predict / decision_scores interface.

Defaults (recorded in every report through :meth:`ClassifierSpec.resolved`):

============  ===============================================================
logreg        multinomial softmax, L2 penalty 1/C on weights (C=1.0, intercept
              unpenalized), L-BFGS until gradient max-norm < 1e-4 or 5000 iters
linsvc        one-vs-rest squared hinge, L2 penalty incl. intercept (C=1.0),
              finite Newton until relative objective improvement < 1e-4 or 5000 steps
rforest       100 bootstrap trees, Gini, floor(sqrt(d)) candidate features per
              split, grown until pure or fewer than 2 samples, majority vote
knn           Euclidean, k=5, vote fractions
============  ===============================================================

No model rescales its inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import FormatError
from .matrix import FeatureMatrix

KINDS = ("logreg", "linsvc", "rforest", "knn")
MODEL_FORMAT = "warmth-model"
MODEL_VERSION = 1

DEFAULTS: dict[str, dict[str, Any]] = {
    "logreg": {"C": 1.0, "tol": 1e-4, "max_iter": 5000},
    "linsvc": {"C": 1.0, "tol": 1e-4, "max_iter": 5000},
    "rforest": {"n_estimators": 100, "max_features": "sqrt", "min_samples_split": 2, "bootstrap": True},
    "knn": {"k": 5},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")
        p = self.resolved()
        if self.kind in ("logreg", "linsvc"):
            if not p["C"] > 0 or not p["tol"] > 0 or int(p["max_iter"]) < 1:
                raise ValueError(f"{self.kind}: need C > 0, tol > 0, max_iter >= 1")
        elif self.kind == "rforest":
            if int(p["n_estimators"]) < 1 or int(p["min_samples_split"]) < 2:
                raise ValueError("rforest: need n_estimators >= 1 and min_samples_split >= 2")
        elif int(p["k"]) < 1:
            raise ValueError("knn: k must be >= 1")

    def resolved(self) -> dict[str, Any]:
        return {**DEFAULTS[self.kind], **self.hyperparameters}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": self.resolved(), "seed": self.seed}


def _as_array(X) -> np.ndarray:
    if isinstance(X, FeatureMatrix):
        X = X.values
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or Inf")
    return X


class TrainedModel:
    kind: str = ""

    def __init__(self, classes: Sequence, n_features: int, params: dict):
        self.classes = list(classes)
        self.n_features = n_features
        self.params = params

    def _check(self, X) -> np.ndarray:
        X = _as_array(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"X has {X.shape[1]} features, model was trained on {self.n_features}")
        return X

    def decision_scores(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> list:
        s = self.decision_scores(X)
        return [self.classes[i] for i in np.argmax(s, axis=1)]

    # serialization hooks
    def _state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_state(cls, classes, n_features, params, state) -> "TrainedModel":
        raise NotImplementedError


# ---------------------------------------------------------------------------
# logistic regression


class LogisticRegressionModel(TrainedModel):
    kind = "logreg"

    def __init__(self, classes, n_features, params, coef, intercept, trace=(), n_iter=0, converged=True):
        super().__init__(classes, n_features, params)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = np.asarray(intercept, dtype=np.float64)
        self.trace = list(trace)
        self.n_iter = n_iter
        self.converged = converged

    def decision_scores(self, X):
        z = self._check(X) @ self.coef.T + self.intercept
        return np.exp(z - logsumexp(z, axis=1, keepdims=True))

    def _state(self):
        return {"coef": self.coef.tolist(), "intercept": self.intercept.tolist()}

    @classmethod
    def _from_state(cls, classes, n_features, params, state):
        return cls(classes, n_features, params, state["coef"], state["intercept"])


def _softmax_objective(C, X, Y):
    n, d = X.shape
    k = Y.shape[1]

    def fun(theta):
        W = theta[: k * d].reshape(k, d)
        b = theta[k * d :]
        z = X @ W.T + b
        lse = logsumexp(z, axis=1)
        loss = np.sum(lse - np.sum(Y * z, axis=1))
        P = np.exp(z - lse[:, None])
        G = C * (P - Y)
        f = 0.5 * np.sum(W * W) + C * loss
        grad = np.concatenate([(G.T @ X + W).ravel(), G.sum(axis=0)])
        return f, grad

    return fun


def _train_logreg(p, X, yi, classes):
    n, d = X.shape
    k = len(classes)
    Y = np.eye(k)[yi]
    fun = _softmax_objective(float(p["C"]), X, Y)
    theta0 = np.zeros(k * d + k)
    trace = [fun(theta0)[0]]
    res = minimize(
        fun,
        theta0,
        jac=True,
        method="L-BFGS-B",
        callback=lambda th: trace.append(fun(th)[0]),
        options={"maxiter": int(p["max_iter"]), "gtol": float(p["tol"]), "ftol": 0.0, "maxcor": 10},
    )
    theta = res.x
    gmax = float(np.max(np.abs(fun(theta)[1])))
    return LogisticRegressionModel(
        classes, d, p, theta[: k * d].reshape(k, d), theta[k * d :], trace, int(res.nit), gmax < float(p["tol"])
    )


# ---------------------------------------------------------------------------
# linear SVC (one-vs-rest, squared hinge)


class LinearSVCModel(TrainedModel):
    kind = "linsvc"

    def __init__(self, classes, n_features, params, coef, intercept, n_iter=()):
        super().__init__(classes, n_features, params)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = np.asarray(intercept, dtype=np.float64)
        self.n_iter = list(n_iter)

    def decision_scores(self, X):
        X = self._check(X)
        s = X @ self.coef.T + self.intercept
        return s

    def _state(self):
        return {"coef": self.coef.tolist(), "intercept": self.intercept.tolist()}

    @classmethod
    def _from_state(cls, classes, n_features, params, state):
        return cls(classes, n_features, params, state["coef"], state["intercept"])


def train_binary_squared_hinge(X, t, C=1.0, tol=1e-4, max_iter=5000):
    """Minimize ``0.5 (|w|^2 + b^2) + C sum max(0, 1 - t (w.x + b))^2`` for ``t`` in {-1, +1}.

    Finite Newton method: the objective is quadratic on each active set
    ``{i : t_i (w.x_i + b) < 1}``, so each step solves that quadratic and a
    backtracking line search keeps the objective decreasing. Stops once a
    step improves the objective by less than ``tol * max(1, f)``.

    Returns ``(w, b, n_iter, trace)``.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])

    def objective(w):
        m = 1.0 - t * (Xa @ w)
        act = m > 0
        return 0.5 * np.dot(w, w) + C * np.dot(m[act], m[act]), act, m

    w = np.zeros(d + 1)
    f, act, m = objective(w)
    trace = [f]
    it = 0
    for it in range(1, int(max_iter) + 1):
        XA = Xa[act]
        g = w - 2.0 * C * (XA.T @ (t[act] * m[act]))
        if len(XA) < d + 1:
            # Woodbury: (I + 2C A'A)^-1 g = g - 2C A' (I + 2C AA')^-1 A g
            S = np.eye(len(XA)) + 2.0 * C * (XA @ XA.T)
            step_dir = -(g - 2.0 * C * (XA.T @ np.linalg.solve(S, XA @ g)))
        else:
            H = np.eye(d + 1) + 2.0 * C * (XA.T @ XA)
            step_dir = -np.linalg.solve(H, g)
        slope = float(np.dot(g, step_dir))
        if slope >= 0:
            break
        step = 1.0
        while True:
            w_new = w + step * step_dir
            f_new, act_new, m_new = objective(w_new)
            if f_new <= f + 1e-4 * step * slope or step < 1e-12:
                break
            step *= 0.5
        if f_new > f:
            break
        improvement = f - f_new
        w, f, act, m = w_new, f_new, act_new, m_new
        trace.append(f)
        if improvement <= tol * max(1.0, abs(f)):
            break
    return w[:d], float(w[d]), it, trace


def _train_linsvc(p, X, yi, classes):
    coef, icpt, iters = [], [], []
    for c in range(len(classes)):
        t = np.where(yi == c, 1.0, -1.0)
        w, b, it, _ = train_binary_squared_hinge(X, t, float(p["C"]), float(p["tol"]), int(p["max_iter"]))
        coef.append(w)
        icpt.append(b)
        iters.append(it)
    return LinearSVCModel(classes, X.shape[1], p, np.array(coef), np.array(icpt), iters)


# ---------------------------------------------------------------------------
# random forest


@dataclass
class Tree:
    """Flat binary tree; ``feature < 0`` marks a leaf whose vote is ``label``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.label[node]
            go_left = X[rows[inner], f[inner]] <= self.threshold[node[inner]]
            node[inner] = np.where(go_left, self.left[node[inner]], self.right[node[inner]])

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "label")}

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["label"], dtype=np.int64),
        )


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of class-count vectors along the last axis."""
    counts = np.asarray(counts, dtype=np.float64)
    tot = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / tot[..., None]
    return np.where(tot > 0, 1.0 - np.sum(p * p, axis=-1), 0.0)


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int, features: np.ndarray):
    """Lowest weighted-Gini threshold split among ``features``.

    Returns ``(feature, threshold, impurity)`` or ``None`` when every
    candidate feature is constant on these rows.
    """
    m = len(y)
    sub = X[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    sv = np.take_along_axis(sub, order, axis=0)
    onehot = np.eye(n_classes)[y]
    left = np.cumsum(onehot[order], axis=0)[:-1]  # (m-1, f, K)
    total = onehot.sum(axis=0)
    right = total - left
    nl = np.arange(1, m)[:, None]
    imp = (nl * gini(left) + (m - nl) * gini(right)) / m
    valid = sv[1:] > sv[:-1]
    if not valid.any():
        return None
    imp = np.where(valid, imp, np.inf)
    i, j = np.unravel_index(np.argmin(imp), imp.shape)
    lo, hi = sv[i, j], sv[i + 1, j]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[j]), float(thr), float(imp[i, j])


def grow_tree(X, y, n_classes, max_features, rng, min_samples_split=2) -> Tree:
    d = X.shape[1]
    feature, threshold, left, right, label = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        label.append(-1)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        label[node] = int(np.argmax(counts))
        if len(idx) < min_samples_split or np.count_nonzero(counts) == 1:
            continue
        # keep drawing candidate features until one admits a split
        perm = rng.permutation(d)
        split = None
        for s in range(0, d, max_features):
            split = best_split(X[idx], y[idx], n_classes, perm[s : s + max_features])
            if split is not None:
                break
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[idx, f] <= thr
        l, r = new_node(), new_node()
        feature[node], threshold[node], left[node], right[node] = f, thr, l, r
        stack.append((r, idx[~go_left]))
        stack.append((l, idx[go_left]))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(label, dtype=np.int64),
    )


def _n_candidate_features(spec, d: int) -> int:
    if spec == "sqrt":
        return max(1, int(math.floor(math.sqrt(d))))
    if spec in (None, "all"):
        return d
    return max(1, min(d, int(spec)))


class RandomForestModel(TrainedModel):
    kind = "rforest"

    def __init__(self, classes, n_features, params, trees):
        super().__init__(classes, n_features, params)
        self.trees = list(trees)

    def decision_scores(self, X):
        X = self._check(X)
        votes = np.zeros((len(X), len(self.classes)))
        rows = np.arange(len(X))
        for t in self.trees:
            np.add.at(votes, (rows, t.apply(X)), 1.0)
        return votes / len(self.trees)

    def _state(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def _from_state(cls, classes, n_features, params, state):
        return cls(classes, n_features, params, [Tree.from_dict(t) for t in state["trees"]])


def _train_rforest(p, X, yi, classes, seed):
    n, d = X.shape
    mtry = _n_candidate_features(p["max_features"], d)
    trees = []
    for ti in range(int(p["n_estimators"])):
        # one stream per tree, independent of build order
        rng = np.random.default_rng([int(seed), ti])
        idx = rng.integers(0, n, size=n) if p["bootstrap"] else np.arange(n)
        trees.append(grow_tree(X[idx], yi[idx], len(classes), mtry, rng, int(p["min_samples_split"])))
    return RandomForestModel(classes, d, p, trees)


# ---------------------------------------------------------------------------
# k nearest neighbours


class KNNModel(TrainedModel):
    """Neighbours are ordered by distance, then class index.

    Label ties are broken in favour of the tied class owning the nearest
    neighbour; equal-distance ties fall back to the lowest class index.
    """

    kind = "knn"

    def __init__(self, classes, n_features, params, X, yi):
        super().__init__(classes, n_features, params)
        self.X = np.asarray(X, dtype=np.float64)
        self.yi = np.asarray(yi, dtype=np.int64)

    def neighbours(self, Q) -> np.ndarray:
        Q = self._check(Q)
        k = min(int(self.params["k"]), len(self.X))
        dist = np.array([np.sum((self.X - q) ** 2, axis=1) for q in Q]).reshape(len(Q), len(self.X))
        out = np.empty((len(Q), k), dtype=np.int64)
        for i, drow in enumerate(dist):
            out[i] = np.lexsort((self.yi, drow))[:k]
        return out

    def decision_scores(self, X):
        nb = self.neighbours(X)
        votes = np.zeros((len(nb), len(self.classes)))
        for i, row in enumerate(nb):
            np.add.at(votes[i], self.yi[row], 1.0)
        return votes / nb.shape[1]

    def predict(self, X):
        nb = self.neighbours(X)
        out = []
        for row in nb:
            labels = self.yi[row]
            counts = np.bincount(labels, minlength=len(self.classes))
            tied = np.flatnonzero(counts == counts.max())
            winner = next(lab for lab in labels if lab in tied)
            out.append(self.classes[winner])
        return out

    def _state(self):
        return {"X": self.X.tolist(), "y": self.yi.tolist()}

    @classmethod
    def _from_state(cls, classes, n_features, params, state):
        return cls(classes, n_features, params, np.array(state["X"]).reshape(-1, n_features), state["y"])


# ---------------------------------------------------------------------------


_MODEL_CLASSES = {c.kind: c for c in (LogisticRegressionModel, LinearSVCModel, RandomForestModel, KNNModel)}


def train(spec: ClassifierSpec, X, y: Sequence, classes: Sequence | None = None) -> TrainedModel:
    """Fit the classifier described by ``spec``.

    ``classes`` fixes the column order of decision scores; by default the
    sorted distinct labels of ``y``. Labels absent from ``y`` are dropped.
    """
    X = _as_array(X)
    y = list(y)
    if len(y) != len(X):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)} labels")
    present = set(y)
    order = list(classes) if classes is not None else sorted(present)
    unknown = present - set(order)
    if unknown:
        raise ValueError(f"labels {sorted(map(str, unknown))} not in class list")
    cls_list = [c for c in order if c in present]
    if len(cls_list) < 2:
        raise ValueError("training data must contain at least two classes")
    index = {c: i for i, c in enumerate(cls_list)}
    yi = np.array([index[v] for v in y], dtype=np.int64)
    p = spec.resolved()
    if spec.kind == "logreg":
        return _train_logreg(p, X, yi, cls_list)
    if spec.kind == "linsvc":
        return _train_linsvc(p, X, yi, cls_list)
    if spec.kind == "rforest":
        return _train_rforest(p, X, yi, cls_list, spec.seed)
    return KNNModel(cls_list, X.shape[1], p, X.copy(), yi)


def predict(m: TrainedModel, X) -> list:
    return m.predict(X)


def decision_scores(m: TrainedModel, X) -> np.ndarray:
    return m.decision_scores(X)


def save_model(m: TrainedModel, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": m.kind,
        "classes": m.classes,
        "n_features": m.n_features,
        "params": m.params,
        "state": m._state(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a model file ({exc.msg})") from None
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {doc.get('version')!r}")
    cls = _MODEL_CLASSES.get(doc["kind"])
    if cls is None:
        raise FormatError(f"{path}: unknown model kind {doc['kind']!r}")
    return cls._from_state(doc["classes"], doc["n_features"], doc["params"], doc["state"])
