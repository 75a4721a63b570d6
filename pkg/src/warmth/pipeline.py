"""Manifest-driven experiments: corpus -> features -> fusion -> cross-validation.

A manifest is a YAML mapping; every omitted field takes the default shown
here and the resolved manifest is written next to the report::

    corpus: data/synth            # or {transcripts, labels, audio, vocabulary}
    merge_scheme: {low: [0, 1], moderate: [2, 3], high: [4, 5]}
    acoustic: lite                # lite | none | {import: features.csv}
    text: tfidf-pun               # tfidf | tfidf-pun | embedding:<path> | import:<path> | none
    fusion: {standardize: false}
    classifiers:
      - {kind: logreg}
      - {kind: linsvc}
      - {kind: rforest, seed: 0}
      - {kind: knn}
    cv: {k: 5, runs: 5, base_seed: 0, grouping: none}
    output: results/run1
    n_jobs: null                  # null = all cores

Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import reporting
from .acoustic import FrameConfig, extract_lite
from .corpus import WARMTH_CLASSES, Corpus, MergeScheme, TwinSample, build_samples, load_corpus
from .errors import ManifestError, ValidationError
from .evaluation import AVERAGINGS, HEADLINE, CvDataset, CvPlan, fold_scores, run_cv, t_test
from .fusion import Standardizer
from .matrix import FeatureMatrix, import_features
from .models import ClassifierSpec
from .textfeat import Variant, embedding_matrix, fit_tfidf, load_embeddings, sample_document, tfidf_matrix

log = logging.getLogger(__name__)

DEFAULT_CLASSIFIERS = [{"kind": "logreg"}, {"kind": "linsvc"}, {"kind": "rforest", "seed": 0}, {"kind": "knn"}]
_KEYS = {"corpus", "merge_scheme", "acoustic", "text", "fusion", "classifiers", "cv", "output", "n_jobs", "frame"}


@dataclass
class Manifest:
    corpus: Corpus
    merge_scheme: MergeScheme = field(default_factory=MergeScheme)
    acoustic: str | Path = "lite"
    text: str = "tfidf-pun"
    standardize: bool = False
    classifiers: list[ClassifierSpec] = field(default_factory=lambda: [ClassifierSpec(**c) for c in DEFAULT_CLASSIFIERS])
    plan: CvPlan = field(default_factory=CvPlan)
    output: Path = Path("results")
    n_jobs: int | None = None
    frame: FrameConfig = field(default_factory=FrameConfig)

    @classmethod
    def from_dict(cls, raw: dict, base: str | Path = ".") -> "Manifest":
        if not isinstance(raw, dict):
            raise ManifestError("manifest must be a mapping")
        unknown = set(raw) - _KEYS
        if unknown:
            raise ManifestError(f"unknown manifest fields: {sorted(unknown)}")
        base = Path(base)

        def path(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        try:
            c = raw.get("corpus")
            if c is None:
                raise ManifestError("manifest needs a corpus")
            if isinstance(c, (str, Path)):
                corpus = Corpus.from_dir(path(c))
            else:
                corpus = Corpus(
                    path(c["transcripts"]),
                    path(c["labels"]),
                    path(c["audio"]),
                    path(c["vocabulary"]) if c.get("vocabulary") else None,
                )
            ac = raw.get("acoustic", "lite")
            if isinstance(ac, dict):
                if set(ac) != {"import"}:
                    raise ManifestError("acoustic mapping must be {import: <csv>}")
                ac = path(ac["import"])
            elif ac not in ("lite", "none"):
                raise ManifestError(f"acoustic must be lite, none or {{import: path}}, not {ac!r}")
            text = str(raw.get("text", "tfidf-pun"))
            kind, _, arg = text.partition(":")
            if kind in ("embedding", "import"):
                if not arg:
                    raise ManifestError(f"text={text!r} needs a path")
                text = f"{kind}:{path(arg)}"
            elif text not in ("tfidf", "tfidf-pun", "none"):
                raise ManifestError(f"unknown text feature {text!r}")
            if ac == "none" and text == "none":
                raise ManifestError("at least one of acoustic and text features is required")
            fusion = raw.get("fusion") or {}
            specs = [
                ClassifierSpec(c["kind"], dict(c.get("hyperparameters") or {}), int(c.get("seed", 0)))
                for c in (raw.get("classifiers") or DEFAULT_CLASSIFIERS)
            ]
            cv = raw.get("cv") or {}
            plan = CvPlan(int(cv.get("k", 5)), int(cv.get("runs", 5)), int(cv.get("base_seed", 0)), str(cv.get("grouping", "none")))
            frame = FrameConfig(**(raw.get("frame") or {}))
            return cls(
                corpus=corpus,
                merge_scheme=MergeScheme.from_config(raw.get("merge_scheme")),
                acoustic=ac,
                text=text,
                standardize=bool(fusion.get("standardize", False)),
                classifiers=specs,
                plan=plan,
                output=path(raw.get("output", "results")),
                n_jobs=raw.get("n_jobs"),
                frame=frame,
            )
        except ManifestError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"invalid manifest: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ManifestError(f"{path}: invalid YAML: {exc}") from None
        return cls.from_dict(raw, path.parent)

    def resolved(self) -> dict[str, Any]:
        """Every setting, defaults included, in manifest form."""
        return {
            "corpus": {
                "transcripts": str(self.corpus.transcripts),
                "labels": str(self.corpus.labels),
                "audio": str(self.corpus.audio),
                "vocabulary": str(self.corpus.vocabulary) if self.corpus.vocabulary else None,
            },
            "merge_scheme": self.merge_scheme.to_config(),
            "acoustic": self.acoustic if isinstance(self.acoustic, str) else {"import": str(self.acoustic)},
            "frame": {k: getattr(self.frame, k) for k in self.frame.__dataclass_fields__},
            "text": self.text,
            "fusion": {"standardize": self.standardize},
            "classifiers": [s.to_dict() for s in self.classifiers],
            "cv": self.plan.to_dict(),
            "output": str(self.output),
            "n_jobs": self.n_jobs,
        }

    def validate(self) -> None:
        """Check that every referenced file exists."""
        for label, p in (("transcripts", self.corpus.transcripts), ("labels", self.corpus.labels)):
            if not Path(p).exists():
                raise ManifestError(f"{label} path does not exist: {p}")
        if self.corpus.vocabulary is not None and not Path(self.corpus.vocabulary).exists():
            raise ManifestError(f"vocabulary file does not exist: {self.corpus.vocabulary}")
        if isinstance(self.acoustic, Path) and not self.acoustic.exists():
            raise ManifestError(f"acoustic feature file does not exist: {self.acoustic}")
        kind, _, arg = self.text.partition(":")
        if arg and not Path(arg).exists():
            raise ManifestError(f"{kind} file does not exist: {arg}")


def _fixed_rows(m: FeatureMatrix, samples, what: str) -> np.ndarray:
    ids = [s.sample_id for s in samples]
    missing = sorted(set(ids) - set(m.sample_ids))
    if missing:
        raise ManifestError(f"{what} features lack samples: {', '.join(missing[:10])}")
    return m.rows(ids).values


@dataclass
class Experiment:
    samples: list[TwinSample]
    dataset: CvDataset
    feature_names: list[str]


def build_experiment(man: Manifest) -> Experiment:
    """Load the corpus and wire up the per-fold featurizer."""
    interviews = load_corpus(man.corpus)
    samples = build_samples(interviews, man.merge_scheme)
    if man.acoustic == "lite":
        for iv in interviews:
            if not Path(iv.audio_path).exists():
                raise ManifestError(f"audio file not found: {iv.audio_path}")
    ids = [s.sample_id for s in samples]

    blocks: list[np.ndarray] = []
    names: list[str] = []
    if man.acoustic == "lite":
        ac = extract_lite(samples, man.frame, man.n_jobs or os.cpu_count())
        blocks.append(ac.values)
        names += [f"ac:{n}" for n in ac.feature_names]
    elif isinstance(man.acoustic, Path):
        ac = import_features(man.acoustic)
        blocks.append(_fixed_rows(ac, samples, "acoustic"))
        names += [f"ac:{n}" for n in ac.feature_names]
    fixed = np.hstack(blocks) if blocks else np.zeros((len(samples), 0))

    kind, _, arg = man.text.partition(":")
    docs = None
    if kind in ("tfidf", "tfidf-pun"):
        variant = Variant.WITH_PUNCTUATION if kind == "tfidf-pun" else Variant.STRIPPED
        docs = [sample_document(s.caregiver_utterances, variant) for s in samples]
    elif kind == "embedding":
        table = load_embeddings(arg)
        docs_e = [sample_document(s.caregiver_utterances, Variant.STRIPPED) for s in samples]
        em = embedding_matrix(table, ids, docs_e)
        fixed = np.hstack([fixed, em.values])
        names += [f"tx:{n}" for n in em.feature_names]
    elif kind == "import":
        tx = import_features(arg)
        fixed = np.hstack([fixed, _fixed_rows(tx, samples, "text")])
        names += [f"tx:{n}" for n in tx.feature_names]

    standardize = man.standardize

    def featurize(tr: np.ndarray, te: np.ndarray):
        Xtr, Xte = fixed[tr], fixed[te]
        if docs is not None:
            model = fit_tfidf([docs[i] for i in tr])
            Xtr = np.hstack([Xtr, tfidf_matrix(model, [ids[i] for i in tr], [docs[i] for i in tr]).values])
            Xte = np.hstack([Xte, tfidf_matrix(model, [ids[i] for i in te], [docs[i] for i in te]).values])
        if standardize:
            st = Standardizer.fit(Xtr)
            Xtr, Xte = st.transform(Xtr), st.transform(Xte)
        return Xtr, Xte

    ds = CvDataset(
        ids,
        [s.label3 for s in samples],
        featurize,
        groups=[s.source_interview for s in samples],
        classes=list(WARMTH_CLASSES),
    )
    return Experiment(samples, ds, names)


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=1) + "\n").encode("utf-8")


def run_experiment(man: Manifest) -> dict:
    """Run a manifest end to end and write its artifacts to ``man.output``."""
    man.validate()
    out = Path(man.output)
    out.mkdir(parents=True, exist_ok=True)
    resolved = man.resolved()
    lines = [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in resolved.items()]
    for ln in lines:
        log.info("resolved %s", ln)
    exp = build_experiment(man)
    report = run_cv(exp.dataset, man.classifiers, man.plan)
    report["manifest"] = resolved
    report["fixed_feature_names"] = exp.feature_names
    (out / "report.json").write_bytes(report_bytes(report))
    (out / "manifest.resolved.yaml").write_text(yaml.safe_dump(resolved, sort_keys=True), encoding="utf-8")
    (out / "run.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
    reporting.write_artifacts(report, out)
    return report


def load_report(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read report {path}: {exc}") from None


def compare(report_a: dict, report_b: dict, paired: bool = True, averaging: str = HEADLINE, alpha: float = 0.05) -> list[dict]:
    """Per-classifier p-values between two reports over the same folds."""
    if paired:
        for key in ("plan", "seeds", "folds", "sample_ids"):
            if report_a.get(key) != report_b.get(key):
                raise ValidationError(f"reports differ in {key}; paired comparison needs identical folds")
    if averaging not in AVERAGINGS:
        raise ValidationError(f"unknown averaging {averaging!r}")
    rows = []
    for key in report_a["classifiers"]:
        if key not in report_b["classifiers"]:
            continue
        a = fold_scores(report_a, key, averaging)
        b = fold_scores(report_b, key, averaging)
        p = t_test(a, b, paired=paired)
        rows.append(
            {
                "classifier": key,
                "mean_a": report_a["classifiers"][key]["mean"][averaging],
                "mean_b": report_b["classifiers"][key]["mean"][averaging],
                "p_value": p,
                "significant": p < alpha,
            }
        )
    if not rows:
        raise ValidationError("reports share no classifiers")
    return rows
