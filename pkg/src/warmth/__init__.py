"""Caregiver warmth classification from tagged speech samples."""

from .corpus import MergeScheme, merge_labels, parse_tag, parse_transcript, split_by_twin
from .evaluation import CvDataset, CvPlan, f1_score, run_cv, stratified_kfold
from .matrix import FeatureMatrix, import_features, write_features
from .models import ClassifierSpec, train

__version__ = "0.1.0"

__all__ = [
    "ClassifierSpec",
    "CvDataset",
    "CvPlan",
    "FeatureMatrix",
    "MergeScheme",
    "f1_score",
    "import_features",
    "merge_labels",
    "parse_tag",
    "parse_transcript",
    "run_cv",
    "split_by_twin",
    "stratified_kfold",
    "train",
    "write_features",
]
