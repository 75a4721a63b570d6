"""Synthesize a corpus and compare feature sets under repeated 5-fold CV.

Run with ``python demos/03_cross_validation.py [strength]``; the default
signal strength is 0.5. Takes a minute or two on one core.
"""

import sys
import tempfile
from pathlib import Path

from warmth.evaluation import CvPlan, fold_scores, run_cv, t_test
from warmth.models import ClassifierSpec
from warmth.pipeline import Manifest, build_experiment
from warmth.reporting import format_summary
from warmth.synth import SynthConfig, generate_corpus

strength = float(sys.argv[1]) if len(sys.argv) > 1 else 0.5
root = Path(tempfile.mkdtemp()) / "corpus"
generate_corpus(SynthConfig(n_interviews=40, signal_strength=strength, seed=1), root)
print(f"corpus with signal strength {strength} in {root}\n")

specs = [ClassifierSpec("linsvc"), ClassifierSpec("knn")]
plan = CvPlan(k=5, runs=5, base_seed=0)
reports = {}
for name, ac, tx in [("acoustic", "lite", "none"), ("text", "none", "tfidf-pun"), ("fused", "lite", "tfidf-pun")]:
    man = Manifest.from_dict({"corpus": str(root), "acoustic": ac, "text": tx, "n_jobs": 1})
    exp = build_experiment(man)
    reports[name] = run_cv(exp.dataset, specs, plan)
    print(f"== {name}")
    print(format_summary(reports[name]))

# same seeds means same folds, so a paired test is fair
print("\npaired t-test, fused vs each single modality (weighted F1 over 25 folds)")
for other in ("acoustic", "text"):
    for key in ("linsvc", "knn"):
        p = t_test(fold_scores(reports["fused"], key), fold_scores(reports[other], key))
        print(f"  {key:<7} fused vs {other:<9} p = {p:.3g}")
