"""Text features from caregiver utterances.

Tokenization rules (applied after lowercasing, curly apostrophes folded
to ``'``):

* a word is a run of word characters, optionally joined by apostrophes;
* the clitics ``n't 's 're 've 'll 'd 'm`` are split off a word
  (``he's`` -> ``he 's``, ``don't`` -> ``do n't``);
* every run of other non-space characters is one punctuation token
  (``!``, ``...``, ``-``).

The ``stripped`` variant drops punctuation tokens; ``with_punctuation``
keeps them as ordinary vocabulary terms.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .matrix import FeatureMatrix

_TOKEN = re.compile(r"\w+(?:'\w+)*|[^\w\s]+")
_CLITICS = ("'s", "'re", "'ve", "'ll", "'d", "'m")


class Variant(str, Enum):
    STRIPPED = "stripped"
    WITH_PUNCTUATION = "with_punctuation"


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]
    variant: Variant

    def __add__(self, other: "TokenStream") -> "TokenStream":
        if other.variant != self.variant:
            raise ValueError("cannot concatenate token streams of different variants")
        return TokenStream(self.tokens + other.tokens, self.variant)

    def __len__(self):
        return len(self.tokens)


def is_punctuation(tok: str) -> bool:
    return not any(c.isalnum() or c == "_" for c in tok)


def _split_clitic(word: str) -> list[str]:
    if "'" not in word:
        return [word]
    if word.endswith("n't") and len(word) > 3:
        return [word[:-3], "n't"]
    head, _, tail = word.rpartition("'")
    if head and "'" + tail in _CLITICS:
        return [*_split_clitic(head), "'" + tail]
    return [word]


def tokenize(text: str) -> list[str]:
    text = text.lower().replace("’", "'").replace("‘", "'")
    out = []
    for tok in _TOKEN.findall(text):
        out.extend(_split_clitic(tok) if not is_punctuation(tok) else [tok])
    return out


def preprocess(text: str, variant: Variant | str = Variant.STRIPPED) -> TokenStream:
    variant = Variant(variant)
    toks = tokenize(text)
    if variant is Variant.STRIPPED:
        toks = [t for t in toks if not is_punctuation(t)]
    return TokenStream(tuple(toks), variant)


def sample_document(utterances: Iterable, variant: Variant | str = Variant.STRIPPED) -> TokenStream:
    """Token stream for one sample: its utterances concatenated in order."""
    variant = Variant(variant)
    doc = TokenStream((), variant)
    for u in utterances:
        doc = doc + preprocess(u.text, variant)
    return doc


# ---------------------------------------------------------------------------
# TF-IDF


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    fitted_on: int

    @property
    def terms(self) -> list[str]:
        return sorted(self.vocabulary, key=self.vocabulary.__getitem__)


def fit_tfidf(train_docs: Sequence[TokenStream]) -> TfidfModel:
    """Smoothed idf, ``ln((1 + N) / (1 + df)) + 1``, over training documents only."""
    if not train_docs:
        raise ValueError("need at least one training document")
    df: Counter[str] = Counter()
    for doc in train_docs:
        df.update(set(doc.tokens))
    if not df:
        raise ValueError("all training documents are empty")
    terms = sorted(df)
    n = len(train_docs)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms])
    return TfidfModel({t: i for i, t in enumerate(terms)}, idf, n)


def transform_tfidf(model: TfidfModel, doc: TokenStream) -> np.ndarray:
    """Raw counts times idf, L2-normalized; unseen terms are ignored."""
    v = np.zeros(len(model.vocabulary))
    for tok, c in Counter(doc.tokens).items():
        j = model.vocabulary.get(tok)
        if j is not None:
            v[j] = c * model.idf[j]
    norm = np.sqrt(np.dot(v, v))
    return v / norm if norm > 0 else v


def tfidf_matrix(model: TfidfModel, ids: Sequence[str], docs: Sequence[TokenStream]) -> FeatureMatrix:
    vals = np.array([transform_tfidf(model, d) for d in docs]).reshape(len(docs), len(model.vocabulary))
    return FeatureMatrix(list(ids), [f"tfidf:{t}" for t in model.terms], vals)


# ---------------------------------------------------------------------------
# word embeddings


@dataclass
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, term):
        return term in self.vectors


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a whitespace-separated text embedding file.

    A first line of exactly two integers (``count dim``) is taken as a
    header and skipped.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                raise FormatError(f"{path}:{lineno}: expected a term and at least one value")
            term, raw = parts[0], parts[1:]
            try:
                vec = np.array([float(x) for x in raw])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed float") from None
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite value")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FormatError(f"{path}:{lineno}: dimension {len(vec)} differs from {dim}")
            vectors[term] = vec
    if dim is None:
        raise FormatError(f"{path}: no vectors")
    return EmbeddingTable(dim, vectors)


def embed_document(doc: TokenStream, table: EmbeddingTable) -> np.ndarray:
    known = [table.vectors[t] for t in doc.tokens if t in table.vectors]
    if not known:
        return np.zeros(table.dimension)
    return np.mean(known, axis=0)


def embedding_matrix(table: EmbeddingTable, ids: Sequence[str], docs: Sequence[TokenStream]) -> FeatureMatrix:
    vals = np.array([embed_document(d, table) for d in docs]).reshape(len(docs), table.dimension)
    return FeatureMatrix(list(ids), [f"emb{i}" for i in range(table.dimension)], vals)


# ---------------------------------------------------------------------------
# contextual-embedding chunking


@dataclass(frozen=True)
class ChunkAggregationConfig:
    chunk_len: int = 512
    overlap: float = 0.5
    layer_count: int = 3

    def __post_init__(self):
        if self.chunk_len < 1:
            raise ValueError("chunk_len must be >= 1")
        if not 0 <= self.overlap < 1:
            raise ValueError("overlap must lie in [0, 1)")
        if self.layer_count < 1:
            raise ValueError("layer_count must be >= 1")

    @property
    def step(self) -> int:
        return max(1, self.chunk_len - math.ceil(self.chunk_len * self.overlap))


def chunk_indices(n_tokens: int, cfg: ChunkAggregationConfig = ChunkAggregationConfig()) -> list[tuple[int, int]]:
    """Sliding windows ``[start, end)`` over ``n_tokens``; the last may be partial."""
    out = []
    start = 0
    while start < n_tokens:
        end = min(start + cfg.chunk_len, n_tokens)
        out.append((start, end))
        if end == n_tokens:
            break
        start += cfg.step
    return out


def aggregate_chunks(per_chunk_layers, cfg: ChunkAggregationConfig = ChunkAggregationConfig()) -> np.ndarray:
    """Mean then population std over every (chunk, layer) vector, concatenated.

    Each chunk supplies its hidden-layer vectors in order; the last
    ``cfg.layer_count`` of them are used.
    """
    pooled = []
    dim = None
    for ci, layers in enumerate(per_chunk_layers):
        layers = [np.asarray(v, dtype=np.float64).ravel() for v in layers]
        if len(layers) < cfg.layer_count:
            raise ValueError(f"chunk {ci} has {len(layers)} layers, need {cfg.layer_count}")
        for v in layers[-cfg.layer_count :]:
            if dim is None:
                dim = len(v)
            elif len(v) != dim:
                raise ValueError(f"chunk {ci}: vector dimension {len(v)} differs from {dim}")
            pooled.append(v)
    if not pooled:
        raise ValueError("no chunks to aggregate")
    a = np.array(pooled)
    return np.concatenate([a.mean(axis=0), a.std(axis=0)])
