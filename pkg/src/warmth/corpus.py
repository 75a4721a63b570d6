"""Tagged transcripts, warmth labels and per-twin samples.

A corpus on disk is a directory of JSON-lines transcripts (one utterance
per line), one WAV file per interview and a CSV label table::

    corpus/
        labels.csv              interview_id,twin,warmth6
        transcripts/<id>.jsonl  {"start_s", "end_s", "tag", "text"}
        audio/<id>.wav

Every utterance carries a tag ``<speaker>-<subject>-<topic>`` such as
``mum-t1-away`` (caregiver talking about the elder twin being away) or
``int-both-support`` (interviewer prompt about both twins).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IngestionError, SchemaError

log = logging.getLogger(__name__)


class Speaker(str, Enum):
    INTERVIEWER = "int"
    CAREGIVER = "mum"


class Subject(str, Enum):
    TWIN1 = "t1"
    TWIN2 = "t2"
    BOTH = "both"


TWINS = (Subject.TWIN1, Subject.TWIN2)
WARMTH_CLASSES = ("low", "moderate", "high")


def load_vocabulary(path: str | Path | None = None) -> tuple[str, ...]:
    """Read topic identifiers, one per line; ``#`` starts a comment.

    Without a path the bundled 19-topic vocabulary is returned.
    """
    if path is None:
        text = resources.files("warmth").joinpath("data/topics.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    topics = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "-" in line or any(c.isspace() for c in line):
            raise SchemaError(f"topic {line!r} may not contain '-' or whitespace")
        if line in topics:
            raise SchemaError(f"duplicate topic {line!r}")
        topics.append(line)
    if not topics:
        raise SchemaError("empty topic vocabulary")
    return tuple(topics)


DEFAULT_TOPICS = load_vocabulary()


@dataclass(frozen=True)
class UtteranceTag:
    speaker: Speaker
    subject: Subject
    topic: str

    def __str__(self):
        return f"{self.speaker.value}-{self.subject.value}-{self.topic}"


def parse_tag(s: str, topics: Sequence[str] = DEFAULT_TOPICS) -> UtteranceTag:
    parts = s.split("-")
    if len(parts) != 3 or not all(parts):
        raise SchemaError(f"malformed tag {s!r}: expected <speaker>-<subject>-<topic>")
    speaker, subject, topic = parts
    try:
        sp = Speaker(speaker)
    except ValueError:
        raise SchemaError(f"unknown speaker {speaker!r} in tag {s!r}") from None
    try:
        su = Subject(subject)
    except ValueError:
        raise SchemaError(f"unknown subject {subject!r} in tag {s!r}") from None
    if topic not in topics:
        raise SchemaError(f"topic {topic!r} in tag {s!r} is not in the vocabulary")
    return UtteranceTag(sp, su, topic)


def all_tags(subject: Subject, topics: Sequence[str] = DEFAULT_TOPICS) -> list[str]:
    """Every valid tag string for one subject (speakers x topics)."""
    return [f"{sp.value}-{subject.value}-{t}" for sp in Speaker for t in topics]


@dataclass(frozen=True)
class Utterance:
    start_s: float
    end_s: float
    tag: UtteranceTag
    text: str

    def __post_init__(self):
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ValueError("utterance times must be finite")
        if self.start_s < 0:
            raise ValueError(f"start_s={self.start_s} is negative")
        if not self.end_s > self.start_s:
            raise ValueError(f"end_s={self.end_s} is not after start_s={self.start_s}")

    @property
    def span(self) -> tuple[float, float]:
        return (self.start_s, self.end_s)


@dataclass(frozen=True)
class MergeScheme:
    """Total, monotone mapping from 6-way warmth codes to 3 classes."""

    mapping: tuple[str, ...] = ("low", "low", "moderate", "moderate", "high", "high")

    def __post_init__(self):
        if len(self.mapping) != 6:
            raise ValueError("merge scheme must map exactly the codes 0..5")
        ranks = []
        for c in self.mapping:
            if c not in WARMTH_CLASSES:
                raise ValueError(f"unknown warmth class {c!r}")
            ranks.append(WARMTH_CLASSES.index(c))
        if any(b < a for a, b in zip(ranks, ranks[1:])):
            raise ValueError(f"merge scheme {self.mapping} is not monotone")

    @classmethod
    def from_config(cls, cfg: Mapping | Sequence | None) -> "MergeScheme":
        """Accept ``None``, a 6-sequence, or a ``{class: [codes]}`` mapping."""
        if cfg is None:
            return cls()
        if isinstance(cfg, Mapping):
            mapping = [None] * 6
            for cls_name, codes in cfg.items():
                for code in codes:
                    if not 0 <= int(code) <= 5 or mapping[int(code)] is not None:
                        raise ValueError(f"bad or repeated code {code!r} in merge scheme")
                    mapping[int(code)] = cls_name
            if None in mapping:
                raise ValueError("merge scheme is not total on 0..5")
            return cls(tuple(mapping))
        return cls(tuple(cfg))

    def to_config(self) -> dict[str, list[int]]:
        return {c: [i for i, m in enumerate(self.mapping) if m == c] for c in WARMTH_CLASSES}


def merge_labels(label6: int, scheme: MergeScheme = MergeScheme()) -> str:
    if isinstance(label6, bool) or int(label6) != label6 or not 0 <= label6 <= 5:
        raise ValueError(f"warmth code {label6!r} outside 0..5")
    return scheme.mapping[int(label6)]


@dataclass
class Interview:
    id: str
    audio_path: str
    utterances: list[Utterance]
    labels6: dict[Subject, int]

    def __post_init__(self):
        if set(self.labels6) != set(TWINS):
            raise ValueError(f"interview {self.id}: labels must cover exactly t1 and t2")
        for twin, code in self.labels6.items():
            if not 0 <= code <= 5:
                raise ValueError(f"interview {self.id}: {twin.value} code {code} outside 0..5")
        for a, b in zip(self.utterances, self.utterances[1:]):
            if b.start_s < a.start_s:
                raise ValueError(f"interview {self.id}: utterances out of time order")


@dataclass
class TwinSample:
    sample_id: str
    source_interview: str
    twin: Subject
    caregiver_utterances: list[Utterance]
    label6: int
    label3: str
    audio_path: str = ""

    @property
    def segments(self) -> list[tuple[float, float]]:
        return [u.span for u in self.caregiver_utterances]

    @property
    def text(self) -> str:
        return " ".join(u.text for u in self.caregiver_utterances)


def read_labels(path: str | Path) -> dict[str, dict[Subject, int]]:
    """Read ``interview_id,twin,warmth6`` rows into ``{id: {twin: code}}``."""
    path = Path(path)
    out: dict[str, dict[Subject, int]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["interview_id", "twin", "warmth6"]:
            raise IngestionError("header must be interview_id,twin,warmth6", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise IngestionError(f"expected 3 fields, got {len(row)}", path, lineno)
            iid, twin, code = (c.strip() for c in row)
            try:
                tw = Subject(twin)
            except ValueError:
                tw = None
            if tw not in TWINS:
                raise IngestionError(f"twin must be t1 or t2, got {twin!r}", path, lineno)
            try:
                value = int(code)
            except ValueError:
                raise IngestionError(f"warmth6 {code!r} is not an integer", path, lineno) from None
            if not 0 <= value <= 5:
                raise IngestionError(f"warmth6 {value} outside 0..5", path, lineno)
            entry = out.setdefault(iid, {})
            if tw in entry:
                raise IngestionError(f"duplicate label for {iid} {twin}", path, lineno)
            entry[tw] = value
    return out


def write_labels(path: str | Path, labels: Mapping[str, Mapping[Subject, int]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["interview_id", "twin", "warmth6"])
        for iid in labels:
            for tw in TWINS:
                w.writerow([iid, tw.value, labels[iid][tw]])


def parse_transcript(
    path: str | Path,
    labels: Mapping[str, Mapping[Subject, int]],
    interview_id: str | None = None,
    audio_path: str | Path | None = None,
    topics: Sequence[str] = DEFAULT_TOPICS,
) -> Interview:
    """Parse one JSON-lines transcript into a validated :class:`Interview`.

    The interview id defaults to the file stem. Errors carry the offending
    line number.
    """
    path = Path(path)
    iid = interview_id if interview_id is not None else path.stem
    if iid not in labels:
        raise IngestionError(f"no label rows for interview {iid!r}", path)
    lab = labels[iid]
    missing = [t.value for t in TWINS if t not in lab]
    if missing:
        raise IngestionError(f"interview {iid!r} lacks labels for {', '.join(missing)}", path)
    for tw in TWINS:
        if not 0 <= lab[tw] <= 5:
            raise IngestionError(f"warmth6 {lab[tw]} for {iid} {tw.value} outside 0..5", path)

    utterances: list[Utterance] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"invalid JSON: {exc.msg}", path, lineno) from None
            if not isinstance(rec, dict):
                raise IngestionError("expected a JSON object", path, lineno)
            for key in ("start_s", "end_s", "tag", "text"):
                if key not in rec:
                    raise IngestionError(f"missing field {key!r}", path, lineno)
            start, end = rec["start_s"], rec["end_s"]
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (start, end)):
                raise IngestionError("start_s and end_s must be numbers", path, lineno)
            if not isinstance(rec["tag"], str) or not isinstance(rec["text"], str):
                raise IngestionError("tag and text must be strings", path, lineno)
            try:
                tag = parse_tag(rec["tag"], topics)
                utt = Utterance(float(start), float(end), tag, rec["text"])
            except (SchemaError, ValueError) as exc:
                raise IngestionError(str(exc), path, lineno) from None
            if utterances and utt.start_s < utterances[-1].start_s:
                raise IngestionError("start_s decreases relative to previous utterance", path, lineno)
            utterances.append(utt)

    if audio_path is None:
        audio_path = path.parent.parent / "audio" / f"{iid}.wav"
    return Interview(iid, str(audio_path), utterances, {tw: int(lab[tw]) for tw in TWINS})


def write_transcript(path: str | Path, utterances: Iterable[Utterance]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for u in utterances:
            rec = {"start_s": u.start_s, "end_s": u.end_s, "tag": str(u.tag), "text": u.text}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def split_by_twin(iv: Interview, scheme: MergeScheme = MergeScheme()) -> tuple[TwinSample, TwinSample]:
    """Split an interview into one sample per twin.

    Caregiver utterances about ``both`` twins go into both samples;
    interviewer speech is never included.
    """
    samples = []
    for twin in TWINS:
        utts = [
            u
            for u in iv.utterances
            if u.tag.speaker is Speaker.CAREGIVER and u.tag.subject in (twin, Subject.BOTH)
        ]
        if not utts:
            log.warning("interview %s has no caregiver utterances for %s", iv.id, twin.value)
        code = iv.labels6[twin]
        samples.append(
            TwinSample(
                sample_id=f"{iv.id}-{twin.value}",
                source_interview=iv.id,
                twin=twin,
                caregiver_utterances=utts,
                label6=code,
                label3=merge_labels(code, scheme),
                audio_path=iv.audio_path,
            )
        )
    return samples[0], samples[1]


@dataclass
class Corpus:
    """Paths making up an on-disk corpus."""

    transcripts: Path
    labels: Path
    audio: Path
    vocabulary: Path | None = None
    interviews: list[Interview] = field(default_factory=list, repr=False)

    @classmethod
    def from_dir(cls, root: str | Path) -> "Corpus":
        root = Path(root)
        vocab = root / "topics.txt"
        return cls(root / "transcripts", root / "labels.csv", root / "audio", vocab if vocab.exists() else None)


def load_corpus(corpus: Corpus) -> list[Interview]:
    """Parse every transcript in the corpus, sorted by interview id."""
    topics = load_vocabulary(corpus.vocabulary)
    labels = read_labels(corpus.labels)
    paths = sorted(Path(corpus.transcripts).glob("*.jsonl"))
    if not paths:
        raise IngestionError("no *.jsonl transcripts found", corpus.transcripts)
    interviews = []
    for p in paths:
        interviews.append(
            parse_transcript(p, labels, audio_path=Path(corpus.audio) / f"{p.stem}.wav", topics=topics)
        )
    return interviews


def build_samples(interviews: Iterable[Interview], scheme: MergeScheme = MergeScheme()) -> list[TwinSample]:
    out = []
    for iv in interviews:
        out.extend(split_by_twin(iv, scheme))
    return out
