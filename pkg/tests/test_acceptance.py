"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The end-to-end checks (7, 8, 9) synthesize 100-interview corpora and run
the full 5 x 5 cross-validation, so this module takes a few minutes.
"""

import math
import time

import numpy as np
import pytest

from test_evaluation import FROZEN, labels_from_cm, t_pvalue_reference
from test_models import brute_force_knn

from warmth.acoustic import Signal, compute_llds, estimate_f0, magnitude_spectrum
from warmth.evaluation import CvDataset, CvPlan, f1_score, fold_scores, roc_curve, run_cv, stratified_kfold, t_test
from warmth.models import KINDS, ClassifierSpec, decision_scores, predict, train
from warmth.pipeline import Manifest, build_experiment, report_bytes
from warmth.synth import SynthConfig, generate_corpus
from warmth.textfeat import TokenStream, Variant, fit_tfidf, tfidf_matrix, transform_tfidf

SR = 16000
E2E_SEED = 7
E2E_N = 100


def test_c01_dft_oracle(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (8, 64, 257, 1024):
        k = np.arange(n // 2 + 1)[:, None]
        basis = np.exp(-2j * np.pi * k * np.arange(n)[None, :] / n)
        for seed in range(100):
            x = np.random.default_rng([n, seed]).standard_normal(n)
            slow = np.abs(basis @ x)
            worst = max(worst, np.max(np.abs(magnitude_spectrum(x) - slow)) / np.max(slow))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-9 and elapsed < 10, f"max relative error {worst:.2e} (<= 1e-9), {elapsed:.2f} s (< 10 s)")


def test_c02_f0_oracle(verdict):
    t = np.arange(SR) / SR
    notes = []
    ok = True
    for freq in (110.0, 220.0, 440.0):
        l = compute_llds(Signal(0.5 * np.sin(2 * np.pi * freq * t), SR))
        f0 = l.columns["f0"][l.voiced_mask]
        hit = float(np.mean(np.abs(f0 - freq) <= 3.0)) if len(f0) else 0.0
        ok &= hit >= 0.95 and l.voiced_mask.mean() >= 0.95
        notes.append(f"{freq:.0f} Hz {hit:.0%} within 3 Hz")
    silent = compute_llds(Signal(np.zeros(SR), SR))
    ok &= not silent.voiced_mask.any()
    unvoiced = sum(estimate_f0(np.random.default_rng(s).standard_normal(400), SR)[0] == 0 for s in range(100))
    ok &= unvoiced >= 95
    verdict(2, ok, f"{'; '.join(notes)}; silence unvoiced={not silent.voiced_mask.any()}; noise unvoiced {unvoiced}/100")


def test_c03_tfidf_hand_oracle(verdict):
    d = lambda *toks: TokenStream(tuple(toks), Variant.STRIPPED)  # noqa: E731
    m = fit_tfidf([d("a", "b"), d("a")])
    idf = [math.log(3 / 3) + 1, math.log(3 / 2) + 1]
    raw = [2 * idf[0], idf[1]]
    norm = math.hypot(*raw)
    v = transform_tfidf(m, d("a", "a", "b"))
    err = max(abs(m.idf[0] - idf[0]), abs(m.idf[1] - idf[1]), abs(v[0] - raw[0] / norm), abs(v[1] - raw[1] / norm))
    train_docs = [d("warm", "kind"), d("cold", "kind")]
    leak_model = fit_tfidf(train_docs)
    held = tfidf_matrix(leak_model, ["h"], [d("onlyheldout", "warm")])
    isolated = "onlyheldout" not in leak_model.vocabulary and "tfidf:onlyheldout" not in held.feature_names
    verdict(3, err <= 1e-12 and isolated, f"max abs error {err:.1e} (<= 1e-12); held-out term isolated={isolated}")


def test_c04_classifier_oracles(verdict):
    knn_ok = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((50, 10))
        y = list(rng.choice(["low", "moderate", "high"], size=50))
        Q = np.vstack([rng.standard_normal((30, 10)), X])
        m = train(ClassifierSpec("knn"), X, y)
        knn_ok += predict(m, Q) == [brute_force_knn(X.tolist(), y, q) for q in Q.tolist()]

    rng = np.random.default_rng(100)
    Xs = rng.uniform(-1, 1, (100, 2))
    Xs[:, 0] += np.sign(Xs[:, 0]) * 0.1
    ys = ["pos" if v > 0 else "neg" for v in Xs[:, 0]]
    lr_acc = np.mean(np.array(predict(train(ClassifierSpec("logreg"), Xs, ys), Xs)) == np.array(ys))

    Xr = rng.standard_normal((120, 8))
    yr = list(rng.choice(["low", "moderate", "high"], size=120))
    rf_acc = np.mean(np.array(predict(train(ClassifierSpec("rforest"), Xr, yr), Xr)) == np.array(yr))

    argmax_ok = True
    Xa = rng.standard_normal((90, 5)) + np.repeat([[0], [1.5], [3]], 30, axis=0)
    ya = ["low"] * 30 + ["moderate"] * 30 + ["high"] * 30
    Qa = np.r_[Xa, rng.standard_normal((60, 5)) * 3]
    for kind in KINDS:
        m = train(ClassifierSpec(kind), Xa, ya)
        s = decision_scores(m, Qa)
        pred = predict(m, Qa)
        if kind == "knn":
            top = s.max(axis=1)
            argmax_ok &= all(s[i, m.classes.index(p)] == top[i] for i, p in enumerate(pred))
        else:
            argmax_ok &= pred == [m.classes[i] for i in np.argmax(s, axis=1)]
    ok = knn_ok == 20 and lr_acc == 1.0 and rf_acc >= 0.95 and argmax_ok
    verdict(4, ok, f"knn {knn_ok}/20 match; logreg train acc {lr_acc:.3f}; rforest train acc {rf_acc:.3f}; argmax==predict {argmax_ok}")


def test_c05_cv_protocol(verdict):
    y = ["low"] * 33 + ["moderate"] * 32 + ["high"] * 9
    strat_ok = True
    for seed in range(5):
        folds = stratified_kfold(y, 5, seed)
        for f in range(5):
            part = [y[i] for i in np.flatnonzero(folds == f)]
            for c, n_c in (("low", 33), ("moderate", 32), ("high", 9)):
                strat_ok &= abs(part.count(c) - n_c / 5) <= 1
    rng = np.random.default_rng(0)
    X = rng.standard_normal((74, 4)) + np.array([["low", "moderate", "high"].index(v) for v in y])[:, None]
    specs = [ClassifierSpec("linsvc"), ClassifierSpec("rforest", {"n_estimators": 20})]
    rep = run_cv(CvDataset.static(X, y), specs, CvPlan())
    counts = [rep["class_counts"][c] for c in rep["classes"]]
    once = all(
        len(f) == 74 and set(f) == set(range(5)) and np.array(cm).sum(axis=1).tolist() == counts
        for f, cm in zip(rep["folds"], rep["classifiers"]["linsvc"]["confusion"])
    )
    n_scores = {k: len(fold_scores(rep, k)) for k in rep["classifiers"]}
    again = run_cv(CvDataset.static(X, y), specs, CvPlan())
    identical = report_bytes(rep) == report_bytes(again)
    ok = strat_ok and once and set(n_scores.values()) == {25} and identical
    verdict(5, ok, f"stratified +-1={strat_ok}; tested once per run={once}; fold scores {n_scores}; byte-identical={identical}")


def test_c06_metric_oracle(verdict):
    err = 0.0
    for cm, *want in FROZEN:
        yt, yp = labels_from_cm(cm)
        for avg, w in zip(("macro", "weighted", "micro"), want):
            err = max(err, abs(f1_score(yt, yp, avg, classes=["low", "moderate", "high"]) - float(w)))
    micro_ok = True
    for seed in range(10):
        r = np.random.default_rng(seed)
        a, b = r.choice(3, 40), r.choice(3, 40)
        micro_ok &= abs(f1_score(a, b, "micro") - np.mean(a == b)) < 1e-12
    auc1 = roc_curve(["p", "p", "n", "n"], [0.9, 0.8, 0.2, 0.1], "p")[1]
    auc05 = roc_curve(["p", "n", "p", "n"], [0.3] * 4, "p")[1]
    mono = True
    for seed in range(10):
        r = np.random.default_rng(seed)
        yy, s = list(r.choice(["p", "n"], 50)), r.standard_normal(50)
        base = roc_curve(yy, s, "p")[1]
        mono &= abs(roc_curve(yy, np.exp(2 * s) + 5, "p")[1] - base) < 1e-12
    ok = err < 1e-12 and micro_ok and auc1 == 1.0 and auc05 == 0.5 and mono
    verdict(6, ok, f"F1 max error {err:.1e}; micro==accuracy {micro_ok}; AUC {auc1} / {auc05}; monotone invariant {mono}")


@pytest.fixture(scope="module")
def e2e_corpora(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    out = {}
    for strength in (1.0, 0.5, 0.0):
        out[strength] = generate_corpus(SynthConfig(n_interviews=E2E_N, signal_strength=strength, acoustic_noise_db=20.0, seed=E2E_SEED), root / f"s{strength}")
    return out


def _cv(corpus, acoustic, text, kinds):
    man = Manifest.from_dict({"corpus": str(corpus), "acoustic": acoustic, "text": text, "n_jobs": 1})
    exp = build_experiment(man)
    rep = run_cv(exp.dataset, [ClassifierSpec(k) for k in kinds], man.plan)
    return rep, exp.dataset.labels


@pytest.mark.slow
def test_c07_end_to_end_separability(verdict, e2e_corpora):
    t0 = time.perf_counter()
    rep, labels = _cv(e2e_corpora[1.0], "lite", "tfidf-pun", ["linsvc"])
    elapsed = time.perf_counter() - t0
    f1 = rep["classifiers"]["linsvc"]["mean"]["weighted"]
    verdict(7, len(labels) == 200 and f1 >= 0.90 and elapsed < 300, f"{len(labels)} samples; Lin-SVC fused weighted F1 {f1:.4f} (>= 0.90); {elapsed:.0f} s (< 300 s)")


@pytest.mark.slow
def test_c08_fusion_dominance(verdict, e2e_corpora):
    kinds = ["linsvc", "logreg"]
    means = {}
    for name, ac, tx in (("acoustic", "lite", "none"), ("text", "none", "tfidf-pun"), ("fused", "lite", "tfidf-pun")):
        rep, _ = _cv(e2e_corpora[0.5], ac, tx, kinds)
        means[name] = {k: rep["classifiers"][k]["mean"]["weighted"] for k in kinds}
    ok = True
    notes = []
    for k in kinds:
        bar = max(means["acoustic"][k], means["text"][k]) - 0.02
        ok &= means["fused"][k] >= bar
        notes.append(f"{k} fused {means['fused'][k]:.4f} vs bar {bar:.4f} (ac {means['acoustic'][k]:.4f}, tx {means['text'][k]:.4f})")
    verdict(8, ok, "; ".join(notes))


@pytest.mark.slow
def test_c09_null_signal(verdict, e2e_corpora):
    rep, labels = _cv(e2e_corpora[0.0], "lite", "tfidf-pun", list(KINDS))
    majority = max(set(labels), key=labels.count)
    baseline = f1_score(labels, [majority] * len(labels), "weighted")
    gaps = {k: rec["mean"]["weighted"] - baseline for k, rec in rep["classifiers"].items()}
    ok = all(abs(g) <= 0.08 for g in gaps.values())
    detail = ", ".join(f"{k} {baseline + g:.4f} ({g:+.4f})" for k, g in gaps.items())
    verdict(9, ok, f"majority baseline {baseline:.4f}; {detail}; tolerance 0.08")


def test_c10_t_test_oracle(verdict):
    worst = 0.0
    for seed in range(20):
        r = np.random.default_rng(1000 + seed)
        a = r.normal(0.55, 0.05, 25)
        b = a + r.normal(r.uniform(-0.03, 0.03), 0.03, 25)
        d = a - b
        t = d.mean() / (d.std(ddof=1) / math.sqrt(25))
        worst = max(worst, abs(t_test(a, b) - t_pvalue_reference(t, 24)))
    same = t_test(a, a)
    verdict(10, worst < 1e-6 and same == 1.0, f"max |p - quadrature| {worst:.1e} (< 1e-6); identical-input p = {same}")
