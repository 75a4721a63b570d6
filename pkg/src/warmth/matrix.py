"""Named feature matrices and their CSV form.

The CSV layout is ``sample_id,<feature>,...`` with one row per sample.
Values are written with ``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError


@dataclass
class FeatureMatrix:
    sample_ids: list[str]
    feature_names: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.sample_ids = [str(s) for s in self.sample_ids]
        self.feature_names = [str(f) for f in self.feature_names]
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            self.values = self.values.reshape(len(self.sample_ids), len(self.feature_names))
        if self.values.shape != (len(self.sample_ids), len(self.feature_names)):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.sample_ids)} ids x {len(self.feature_names)} names"
            )
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise ValueError("duplicate sample ids")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("duplicate feature names")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains NaN or Inf")

    @property
    def shape(self):
        return self.values.shape

    def rows(self, ids: Sequence[str]) -> "FeatureMatrix":
        """Subset (and reorder) rows by sample id."""
        index = {s: i for i, s in enumerate(self.sample_ids)}
        try:
            sel = [index[s] for s in ids]
        except KeyError as exc:
            raise KeyError(f"sample id {exc.args[0]!r} not in matrix") from None
        return FeatureMatrix(list(ids), list(self.feature_names), self.values[sel])

    def prefixed(self, prefix: str) -> "FeatureMatrix":
        return FeatureMatrix(self.sample_ids, [prefix + n for n in self.feature_names], self.values)


def write_features(path: str | Path, m: FeatureMatrix) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", *m.feature_names])
        for sid, row in zip(m.sample_ids, m.values):
            w.writerow([sid, *(repr(float(v)) for v in row)])


def import_features(path: str | Path) -> FeatureMatrix:
    """Read a feature CSV, rejecting duplicates, ragged rows and non-finite cells."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "sample_id":
            raise FormatError(f"{path}: header must start with sample_id")
        names = [h.strip() for h in header[1:]]
        if len(set(names)) != len(names):
            raise FormatError(f"{path}: duplicate feature names in header")
        ids: list[str] = []
        seen: set[str] = set()
        rows: list[list[float]] = []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: row {rowno} has {len(row)} fields, expected {len(header)}")
            sid = row[0].strip()
            if sid in seen:
                raise FormatError(f"{path}: row {rowno}: duplicate sample_id {sid!r}")
            seen.add(sid)
            vals = []
            for cell in row[1:]:
                try:
                    v = float(cell)
                except ValueError:
                    raise FormatError(f"{path}: row {rowno}: non-numeric cell {cell!r}") from None
                if not math.isfinite(v):
                    raise FormatError(f"{path}: row {rowno}: non-finite cell {cell!r}")
                vals.append(v)
            ids.append(sid)
            rows.append(vals)
    values = np.array(rows, dtype=np.float64).reshape(len(ids), len(names))
    return FeatureMatrix(ids, names, values)
