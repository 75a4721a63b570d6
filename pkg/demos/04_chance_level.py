"""What weighted F1 does a classifier score when there is nothing to learn?

The majority-class baseline is one reference point, but a classifier that
guesses in proportion to the class priors scores higher on weighted F1.
This script works out both and then checks them against cross-validated
classifiers on pure noise features. Run with
``python demos/04_chance_level.py``; about a minute on one core.
"""

import numpy as np

from warmth.evaluation import CvDataset, CvPlan, f1_score, run_cv
from warmth.models import ClassifierSpec

counts = {"low": 113, "moderate": 65, "high": 22}
n = sum(counts.values())
p = np.array(list(counts.values())) / n

# majority baseline: every sample gets the largest class
y = [c for c, k in counts.items() for _ in range(k)]
print("majority baseline:", round(f1_score(y, ["low"] * n), 4))

# guessing with the priors: expected per-class F1 equals p_c, so weighted F1 = sum p_c^2
print("prior-matched guesser (expected):", round(float(np.sum(p**2)), 4))

# random guessing at several mixes between the two
for mix in (0.0, 0.5, 1.0):
    q = mix * p + (1 - mix) * np.eye(3)[0]
    f1 = 2 * p * q / np.where(p + q > 0, p + q, 1)
    print(f"  guess mix {mix:.1f}: expected weighted F1 {np.dot(p, f1):.4f}")

print("\nCV on noise features (5 x 5 folds)")
for seed in range(3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 20))
    labels = list(rng.permutation(y))
    rep = run_cv(CvDataset.static(X, labels), [ClassifierSpec("knn"), ClassifierSpec("linsvc")], CvPlan())
    print(f"  seed {seed}:", {k: round(v["mean"]["weighted"], 4) for k, v in rep["classifiers"].items()})
