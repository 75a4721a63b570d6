"""Early fusion of acoustic and text feature matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matrix import FeatureMatrix


def concat(ac: FeatureMatrix, tx: FeatureMatrix) -> FeatureMatrix:
    """Columns of ``ac`` (prefixed ``ac:``) then ``tx`` (``tx:``), rows in ``ac`` order."""
    a, t = set(ac.sample_ids), set(tx.sample_ids)
    if a != t:
        diff = sorted(a ^ t)
        shown = ", ".join(diff[:10]) + (" ..." if len(diff) > 10 else "")
        raise ValueError(f"sample ids differ between matrices: {shown}")
    tx = tx.rows(ac.sample_ids)
    names = [f"ac:{n}" for n in ac.feature_names] + [f"tx:{n}" for n in tx.feature_names]
    return FeatureMatrix(ac.sample_ids, names, np.hstack([ac.values, tx.values]))


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "Standardizer":
        values = np.asarray(values, dtype=np.float64)
        if len(values) == 0:
            raise ValueError("cannot fit a standardizer on zero rows")
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        const = std == 0
        # constant columns pass through unchanged
        return cls(np.where(const, 0.0, mean), np.where(const, 1.0, std))

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.scale


def standardize(m: FeatureMatrix, stats_from: Sequence[str]) -> FeatureMatrix:
    """Z-score every column with mean and population std of the ``stats_from`` rows."""
    st = Standardizer.fit(m.rows(stats_from).values)
    return FeatureMatrix(m.sample_ids, m.feature_names, st.transform(m.values))
