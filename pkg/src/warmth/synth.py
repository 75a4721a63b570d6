"""Seeded synthetic speech-sample corpora with a tunable warmth signal.

Caregiver speech is a harmonic stack whose mean F0 is
``140 + 25 * class_index * signal_strength`` Hz (plus a small per-speaker
offset) and whose amplitude-modulation depth, hence energy variance, also
grows with the class. Transcript words come from a shared pool and, with
probability ``0.5 * signal_strength`` per word, from a pool specific to the
twin's merged class. At ``signal_strength = 0`` neither modality carries
any class information.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .acoustic import ANALYSIS_RATE, Signal, write_wav
from .corpus import (
    DEFAULT_TOPICS,
    TWINS,
    WARMTH_CLASSES,
    MergeScheme,
    Speaker,
    Subject,
    Utterance,
    UtteranceTag,
    merge_labels,
    write_labels,
    write_transcript,
)

# default merged-class mix is roughly 0.6 / 0.3 / 0.1
DEFAULT_PRIORS = (0.25, 0.35, 0.15, 0.15, 0.06, 0.04)

SHARED_WORDS = (
    "he she is was really quite always sometimes goes plays with his her brother sister at "
    "school home likes to the and a bit when he's she's doesn't gets very time eat sleep bed "
    "park friends toys tv mum dad nursery morning night but so just little lot things thinks"
).split()
CLASS_WORDS = {
    "low": "difficult tiring moody stubborn naughty whiny annoying trouble hard cross demanding fussy".split(),
    "moderate": "fine okay alright normal usual average decent steady ordinary reasonable quiet sensible".split(),
    "high": "lovely wonderful adore gorgeous precious delightful cuddly sweet fantastic brilliant treasure darling".split(),
}
PROMPTS = (
    "what is {} like",
    "tell me about {}",
    "how does {} get on",
    "in what ways would you like {} to be different",
)


@dataclass(frozen=True)
class SynthConfig:
    n_interviews: int = 37
    signal_strength: float = 1.0
    acoustic_noise_db: float = 20.0
    class_priors: tuple[float, ...] = DEFAULT_PRIORS
    seed: int = 0
    utterances_per_twin: int = 3
    merge_scheme: MergeScheme = field(default_factory=MergeScheme)

    def __post_init__(self):
        if self.n_interviews < 1:
            raise ValueError("n_interviews must be >= 1")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValueError("signal_strength must lie in [0, 1]")
        pri = np.asarray(self.class_priors, dtype=float)
        if pri.shape != (6,) or np.any(pri < 0) or not np.isclose(pri.sum(), 1.0):
            raise ValueError("class_priors must be 6 non-negative values summing to 1")

    def to_dict(self):
        d = asdict(self)
        d["class_priors"] = list(self.class_priors)
        d["merge_scheme"] = self.merge_scheme.to_config()
        return d


def _tone(rng, duration, f0, mod_depth, sr=ANALYSIS_RATE, n_harm=8):
    n = int(round(duration * sr))
    t = np.arange(n) / sr
    vib_rate = rng.uniform(4.0, 6.0)
    contour = f0 * (1.0 + 0.015 * np.sin(2 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(contour) / sr
    harm = np.arange(1, n_harm + 1)
    x = (np.sin(np.outer(phase, harm) + rng.uniform(0, 2 * np.pi, n_harm)) / harm).sum(axis=1)
    syll = rng.uniform(2.5, 4.0)
    env = 1.0 - mod_depth * (0.5 + 0.5 * np.sin(2 * np.pi * syll * t + rng.uniform(0, 2 * np.pi)))
    ramp = min(n // 2, int(0.03 * sr))
    edge = np.ones(n)
    if ramp:
        w = np.hanning(2 * ramp)
        edge[:ramp], edge[-ramp:] = w[:ramp], w[ramp:]
    return 0.25 * x * env * edge / np.max(np.abs(x))


def _sentence(rng, n_words, pool, strength):
    words = []
    for _ in range(n_words):
        if pool is not None and rng.random() < 0.5 * strength:
            words.append(pool[rng.integers(len(pool))])
        else:
            words.append(SHARED_WORDS[rng.integers(len(SHARED_WORDS))])
    if n_words > 5 and rng.random() < 0.5:
        words[rng.integers(2, n_words - 2)] += ","
    text = " ".join(words)
    return text[0].upper() + text[1:] + (".", ".", "!", "?")[rng.integers(4)]


def _draw_labels(rng, cfg: SynthConfig) -> dict:
    return {tw: int(rng.choice(6, p=np.asarray(cfg.class_priors))) for tw in TWINS}


def interview_labels(cfg: SynthConfig, index: int) -> dict:
    """The warmth codes :func:`generate_interview` would assign, without synthesizing audio."""
    return _draw_labels(np.random.default_rng([cfg.seed, index]), cfg)


def generate_interview(cfg: SynthConfig, index: int):
    """Return ``(interview_id, utterances, labels6, signal)`` for one interview."""
    rng = np.random.default_rng([cfg.seed, index])
    iid = f"iv{index:03d}"
    labels6 = _draw_labels(rng, cfg)
    cls = {tw: WARMTH_CLASSES.index(merge_labels(labels6[tw], cfg.merge_scheme)) for tw in TWINS}
    speaker_offset = rng.normal(0.0, 4.0)
    s = cfg.signal_strength
    f0 = {tw: 140.0 + 25.0 * cls[tw] * s + speaker_offset for tw in TWINS}
    depth = {tw: 0.2 + 0.25 * cls[tw] * s for tw in TWINS}
    f0[Subject.BOTH] = (f0[Subject.TWIN1] + f0[Subject.TWIN2]) / 2
    depth[Subject.BOTH] = (depth[Subject.TWIN1] + depth[Subject.TWIN2]) / 2

    topics = [DEFAULT_TOPICS[i] for i in rng.permutation(len(DEFAULT_TOPICS))]
    plan = [(Subject.BOTH, "general")]
    for j, tw in enumerate(TWINS):
        plan.append((tw, topics[j]))
        plan.extend((tw, topics[j]) for _ in range(cfg.utterances_per_twin - 1))

    pieces, utts = [], []
    clock = 0.3
    pieces.append(np.zeros(int(round(clock * ANALYSIS_RATE))))
    prompted = set()
    for subject, topic in plan:
        if (subject, topic) not in prompted:
            prompted.add((subject, topic))
            dur = round(rng.uniform(0.6, 0.9), 3)
            who = {Subject.TWIN1: "the elder twin", Subject.TWIN2: "the younger twin", Subject.BOTH: "the twins"}[subject]
            prompt = PROMPTS[rng.integers(len(PROMPTS))].format(who)
            utts.append(Utterance(round(clock, 3), round(clock + dur, 3), UtteranceTag(Speaker.INTERVIEWER, subject, topic), prompt.capitalize() + "?"))
            pieces.append(_tone(rng, dur, 110.0, 0.3, n_harm=6))
            clock += dur
            gap = round(rng.uniform(0.2, 0.4), 3)
            pieces.append(np.zeros(int(round(gap * ANALYSIS_RATE))))
            clock += gap
        dur = round(rng.uniform(1.0, 1.6), 3)
        pool = CLASS_WORDS[WARMTH_CLASSES[cls[subject]]] if subject in TWINS else None
        text = _sentence(rng, int(rng.integers(8, 15)), pool, s)
        utts.append(Utterance(round(clock, 3), round(clock + dur, 3), UtteranceTag(Speaker.CAREGIVER, subject, topic), text))
        pieces.append(_tone(rng, dur, f0[subject], depth[subject]))
        clock += dur
        gap = round(rng.uniform(0.2, 0.4), 3)
        pieces.append(np.zeros(int(round(gap * ANALYSIS_RATE))))
        clock += gap
    x = np.concatenate(pieces)
    active = x != 0
    p_sig = float(np.mean(x[active] ** 2)) if active.any() else 0.0
    noise_rms = np.sqrt(p_sig / 10 ** (cfg.acoustic_noise_db / 10.0))
    x = x + rng.normal(0.0, noise_rms, size=len(x))
    return iid, utts, labels6, Signal(np.clip(x, -1.0, 1.0), ANALYSIS_RATE)


def generate_corpus(cfg: SynthConfig, out_dir: str | Path) -> Path:
    """Write ``labels.csv``, ``transcripts/``, ``audio/`` and ``topics.txt`` under ``out_dir``."""
    out = Path(out_dir)
    try:
        (out / "transcripts").mkdir(parents=True, exist_ok=True)
        (out / "audio").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create corpus directory {out}: {exc}") from exc
    labels = {}
    for i in range(cfg.n_interviews):
        iid, utts, lab, sig = generate_interview(cfg, i)
        write_transcript(out / "transcripts" / f"{iid}.jsonl", utts)
        write_wav(out / "audio" / f"{iid}.wav", sig)
        labels[iid] = lab
    write_labels(out / "labels.csv", labels)
    with resources.as_file(resources.files("warmth").joinpath("data/topics.txt")) as src:
        shutil.copyfile(src, out / "topics.txt")
    (out / "synth.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out
