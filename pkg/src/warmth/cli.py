"""``warmth`` command line.

Exit codes: 0 success, 1 validation error (bad input or manifest),
2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ValidationError

log = logging.getLogger("warmth")


def _cmd_synth(args):
    from .synth import SynthConfig, generate_corpus

    kw = {}
    if args.priors:
        kw["class_priors"] = tuple(float(p) for p in args.priors.split(","))
    cfg = SynthConfig(args.n_interviews, args.strength, args.snr, seed=args.seed, **kw)
    generate_corpus(cfg, args.out)
    print(f"wrote {cfg.n_interviews} interviews to {args.out}")


def _load_samples(corpus_dir, scheme_json):
    from .corpus import Corpus, MergeScheme, build_samples, load_corpus

    scheme = MergeScheme.from_config(json.loads(scheme_json)) if scheme_json else MergeScheme()
    return build_samples(load_corpus(Corpus.from_dir(corpus_dir)), scheme), scheme


def _cmd_ingest(args):
    samples, scheme = _load_samples(args.corpus, args.merge_scheme)
    doc = {
        "merge_scheme": scheme.to_config(),
        "samples": [
            {
                "sample_id": s.sample_id,
                "interview": s.source_interview,
                "twin": s.twin.value,
                "label6": s.label6,
                "label3": s.label3,
                "n_utterances": len(s.caregiver_utterances),
            }
            for s in samples
        ],
    }
    text = json.dumps(doc, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    counts = {}
    for s in samples:
        counts[s.label3] = counts.get(s.label3, 0) + 1
    print(f"{len(samples)} samples; classes {dict(sorted(counts.items()))}")


def _cmd_features(args):
    from .acoustic import FrameConfig, extract_lite
    from .matrix import write_features
    from .textfeat import Variant, embedding_matrix, fit_tfidf, load_embeddings, sample_document, tfidf_matrix

    samples, _ = _load_samples(args.corpus, args.merge_scheme)
    ids = [s.sample_id for s in samples]
    kind, _, arg = args.kind.partition(":")
    if kind == "lite":
        m = extract_lite(samples, FrameConfig(), args.jobs)
    elif kind in ("tfidf", "tfidf-pun"):
        log.warning("TF-IDF fitted on every sample; use 'run' for leakage-free cross-validation")
        variant = Variant.WITH_PUNCTUATION if kind == "tfidf-pun" else Variant.STRIPPED
        docs = [sample_document(s.caregiver_utterances, variant) for s in samples]
        m = tfidf_matrix(fit_tfidf(docs), ids, docs)
    elif kind == "embedding" and arg:
        docs = [sample_document(s.caregiver_utterances, Variant.STRIPPED) for s in samples]
        m = embedding_matrix(load_embeddings(arg), ids, docs)
    else:
        raise ValidationError(f"unknown feature kind {args.kind!r}")
    write_features(args.out, m)
    print(f"wrote {m.shape[0]}x{m.shape[1]} features to {args.out}")


def _cmd_run(args):
    from .pipeline import Manifest, run_experiment
    from .reporting import format_summary

    man = Manifest.load(args.manifest)
    if args.output:
        man.output = Path(args.output)
    report = run_experiment(man)
    print(format_summary(report))
    print(f"report written to {Path(man.output) / 'report.json'}")


def _cmd_compare(args):
    from .pipeline import compare, load_report
    from .reporting import format_compare

    rows = compare(load_report(args.report_a), load_report(args.report_b), paired=not args.welch, averaging=args.averaging)
    print(format_compare(rows))


def _cmd_report(args):
    from .pipeline import load_report
    from .reporting import format_summary, write_artifacts

    report = load_report(args.report)
    out = Path(args.out) if args.out else Path(args.report).parent
    write_artifacts(report, out, run=args.run)
    print(format_summary(report, args.averaging))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="warmth", description="Caregiver warmth classification from speech samples.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--n-interviews", type=int, default=37)
    s.add_argument("--strength", type=float, default=1.0)
    s.add_argument("--snr", type=float, default=20.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--priors", help="six comma-separated warmth-code probabilities")
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("ingest", help="validate a corpus and list its twin samples")
    s.add_argument("corpus")
    s.add_argument("--merge-scheme", help='JSON, e.g. {"low":[0,1],"moderate":[2,3],"high":[4,5]}')
    s.add_argument("--out")
    s.set_defaults(func=_cmd_ingest)

    s = sub.add_parser("features", help="write a feature CSV for a corpus")
    s.add_argument("corpus")
    s.add_argument("--kind", default="lite", help="lite | tfidf | tfidf-pun | embedding:<path>")
    s.add_argument("--merge-scheme")
    s.add_argument("--jobs", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_features)

    s = sub.add_parser("run", help="run an experiment manifest")
    s.add_argument("manifest")
    s.add_argument("--output", help="override the manifest's output directory")
    s.set_defaults(func=_cmd_run)

    s = sub.add_parser("compare", help="t-test two reports classifier by classifier")
    s.add_argument("report_a")
    s.add_argument("report_b")
    s.add_argument("--welch", action="store_true", help="unpaired Welch test instead of paired")
    s.add_argument("--averaging", default="weighted", choices=["macro", "weighted", "micro"])
    s.set_defaults(func=_cmd_compare)

    s = sub.add_parser("report", help="re-emit tables and plots from a report")
    s.add_argument("report")
    s.add_argument("--out")
    s.add_argument("--run", type=int, default=0)
    s.add_argument("--averaging", choices=["macro", "weighted", "micro"])
    s.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
