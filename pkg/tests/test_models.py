import math
from collections import Counter

import numpy as np
import pytest

from warmth.errors import FormatError
from warmth.models import (
    KINDS,
    ClassifierSpec,
    LogisticRegressionModel,
    decision_scores,
    load_model,
    predict,
    save_model,
    train,
    train_binary_squared_hinge,
)


def brute_force_knn(X, y, q, k=5):
    """Plain-Python neighbour search and vote; ties go to the nearest tied label."""
    order = sorted(range(len(X)), key=lambda i: sum((a - b) ** 2 for a, b in zip(X[i], q)))
    labels = [y[i] for i in order[:k]]
    counts = Counter(labels)
    top = max(counts.values())
    return next(lab for lab in labels if counts[lab] == top)


def three_class(seed, n=60, d=4):
    rng = np.random.default_rng(seed)
    y = rng.choice(["a", "b", "c"], size=n)
    X = rng.standard_normal((n, d)) + np.array([{"a": 0, "b": 2, "c": -2}[v] for v in y])[:, None]
    return X, list(y)


class TestKnn:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((50, 10))
        y = list(rng.choice(["low", "moderate", "high"], size=50))
        Q = np.vstack([rng.standard_normal((30, 10)), X[:10]])
        m = train(ClassifierSpec("knn"), X, y)
        assert predict(m, Q) == [brute_force_knn(X.tolist(), y, q) for q in Q.tolist()]

    def test_single_training_point_per_class(self):
        m = train(ClassifierSpec("knn", {"k": 1}), [[0.0], [10.0]], ["x", "y"])
        assert predict(m, [[-5.0], [4.0], [6.0]]) == ["x", "x", "y"]

    def test_vote_fractions(self):
        X = [[0.0], [0.1], [0.2], [1.0], [1.1], [50.0]]
        y = ["p", "p", "p", "q", "q", "q"]
        m = train(ClassifierSpec("knn"), X, y)
        np.testing.assert_allclose(decision_scores(m, [[0.0]]), [[0.6, 0.4]])

    def test_training_row_order(self):
        X, y = three_class(1)
        perm = np.random.default_rng(2).permutation(len(y))
        Q = np.random.default_rng(3).standard_normal((40, 4))
        a = train(ClassifierSpec("knn"), X, y)
        b = train(ClassifierSpec("knn"), X[perm], [y[i] for i in perm])
        assert predict(a, Q) == predict(b, Q)
        np.testing.assert_array_equal(decision_scores(a, Q), decision_scores(b, Q))


class TestLogreg:
    def test_separable(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, (80, 2))
        X[:, 0] += np.sign(X[:, 0]) * 0.2
        y = ["pos" if v > 0 else "neg" for v in X[:, 0]]
        m = train(ClassifierSpec("logreg"), X, y)
        assert predict(m, X) == y

    def test_probabilities(self):
        X, y = three_class(4)
        s = decision_scores(train(ClassifierSpec("logreg"), X, y), X)
        np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(s >= 0)

    def test_objective_trace_non_increasing(self):
        X, y = three_class(5)
        m = train(ClassifierSpec("logreg"), X, y)
        assert isinstance(m, LogisticRegressionModel)
        t = np.asarray(m.trace)
        assert len(t) >= 2
        assert np.all(np.diff(t) <= 1e-12 * np.abs(t[:-1]))
        assert m.converged


class TestLinsvc:
    def test_binary_closed_form(self):
        # symmetric pair: b = 0 and 0.5 w^2 + 2 (1 - w)^2 is minimised at w = 4/5
        X = np.array([[-1.0], [1.0]])
        t = np.array([-1.0, 1.0])
        w, b, _, _ = train_binary_squared_hinge(X, t, C=1.0, tol=1e-10)
        assert abs(w[0] - 0.8) < 1e-8
        assert abs(b) < 1e-8

    def test_ovr_columns_independent(self):
        X, y = three_class(6)
        m = train(ClassifierSpec("linsvc"), X, y)
        s = decision_scores(m, X)
        m.coef[1] = -m.coef[1]
        m.intercept[1] = -m.intercept[1]
        s2 = decision_scores(m, X)
        np.testing.assert_array_equal(s2[:, [0, 2]], s[:, [0, 2]])
        np.testing.assert_allclose(s2[:, 1], -s[:, 1])

    def test_learns(self):
        X, y = three_class(7, n=120)
        m = train(ClassifierSpec("linsvc"), X, y)
        assert np.mean(np.array(predict(m, X)) == np.array(y)) > 0.85


class TestForest:
    def test_memorises_distinct_rows(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((100, 6))
        y = list(rng.choice(["a", "b", "c"], size=100))
        m = train(ClassifierSpec("rforest", seed=1), X, y)
        assert np.mean(np.array(predict(m, X)) == np.array(y)) >= 0.95

    def test_unanimous(self):
        X = np.r_[np.zeros((10, 2)), np.ones((10, 2)) * 10]
        y = ["a"] * 10 + ["b"] * 10
        s = decision_scores(train(ClassifierSpec("rforest"), X, y), [[0.0, 0.0]])
        assert s.tolist() == [[1.0, 0.0]]

    def test_seed_matters(self):
        X, y = three_class(9)
        Q = np.random.default_rng(0).standard_normal((30, 4)) * 2
        a = decision_scores(train(ClassifierSpec("rforest", seed=0), X, y), Q)
        b = decision_scores(train(ClassifierSpec("rforest", seed=1), X, y), Q)
        assert not np.array_equal(a, b)


@pytest.mark.parametrize("kind", KINDS)
class TestAllKinds:
    def test_argmax_matches_predict(self, kind):
        X, y = three_class(10)
        m = train(ClassifierSpec(kind), X, y)
        Q = np.r_[X, np.random.default_rng(11).standard_normal((40, 4)) * 3]
        s = decision_scores(m, Q)
        pred = predict(m, Q)
        if kind == "knn":
            # ties between vote fractions use the nearest-neighbour rule
            best = s.max(axis=1, keepdims=True)
            assert all(s[i, m.classes.index(p)] == best[i, 0] for i, p in enumerate(pred))
        else:
            assert pred == [m.classes[i] for i in np.argmax(s, axis=1)]

    def test_deterministic(self, kind):
        X, y = three_class(12)
        a, b = train(ClassifierSpec(kind, seed=3), X, y), train(ClassifierSpec(kind, seed=3), X, y)
        np.testing.assert_array_equal(decision_scores(a, X), decision_scores(b, X))

    def test_round_trip(self, kind, tmp_path):
        X, y = three_class(13)
        m = train(ClassifierSpec(kind), X, y)
        save_model(m, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.classes == m.classes and back.kind == kind
        np.testing.assert_array_equal(decision_scores(back, X), decision_scores(m, X))
        assert predict(back, X) == predict(m, X)

    def test_errors(self, kind):
        with pytest.raises(ValueError, match="two classes"):
            train(ClassifierSpec(kind), [[0.0], [1.0]], ["a", "a"])
        with pytest.raises(ValueError):
            train(ClassifierSpec(kind), [[math.nan], [1.0]], ["a", "b"])
        m = train(ClassifierSpec(kind), [[0.0], [1.0], [2.0], [3.0]], ["a", "b", "a", "b"])
        with pytest.raises(ValueError, match="features"):
            predict(m, [[0.0, 1.0]])


def test_class_order_follows_argument():
    X, y = three_class(14)
    m = train(ClassifierSpec("logreg"), X, y, classes=["c", "b", "a"])
    assert m.classes == ["c", "b", "a"]


def test_bad_spec():
    with pytest.raises(ValueError):
        ClassifierSpec("svm")
    with pytest.raises(ValueError):
        ClassifierSpec("knn", {"C": 1})
    with pytest.raises(ValueError):
        ClassifierSpec("logreg", {"C": 0})


def test_load_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(FormatError):
        load_model(p)
    p.write_text("not json")
    with pytest.raises(FormatError):
        load_model(p)
