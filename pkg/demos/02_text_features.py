"""Tokenization, TF-IDF and chunk pooling on a handful of sentences.

Run with ``python demos/02_text_features.py``.
"""

import numpy as np

from warmth.textfeat import (
    ChunkAggregationConfig,
    Variant,
    aggregate_chunks,
    chunk_indices,
    fit_tfidf,
    preprocess,
    transform_tfidf,
)

texts = [
    "She's lovely, always cuddling up to me!",
    "He doesn't sleep... it's exhausting.",
    "They're fine. Lovely boys, really.",
]
for v in Variant:
    print(v.value)
    for s in texts:
        print("   ", preprocess(s, v).tokens)

# fit on the first two only; words seen just in the third get no column
train = [preprocess(s, Variant.WITH_PUNCTUATION) for s in texts[:2]]
model = fit_tfidf(train)
print("\nvocabulary size:", len(model.vocabulary))
held_out = preprocess(texts[2], Variant.WITH_PUNCTUATION)
vec = transform_tfidf(model, held_out)
print("held-out terms with a column:", [t for t in held_out.tokens if t in model.vocabulary])
print("norm of held-out vector:", round(float(np.linalg.norm(vec)), 6))

# long documents are windowed before an external encoder sees them
cfg = ChunkAggregationConfig(chunk_len=512, overlap=0.5, layer_count=3)
print("\nwindows for 1300 tokens:", chunk_indices(1300, cfg))

# pretend each window came back with four layers of 6-d vectors
rng = np.random.default_rng(0)
per_chunk = [rng.standard_normal((4, 6)) for _ in chunk_indices(1300, cfg)]
pooled = aggregate_chunks(per_chunk, cfg)
print("pooled vector length:", pooled.shape[0], "(mean then std)")
