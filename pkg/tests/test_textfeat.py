import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warmth.corpus import Utterance, parse_tag
from warmth.errors import FormatError
from warmth.textfeat import (
    ChunkAggregationConfig,
    EmbeddingTable,
    TokenStream,
    Variant,
    aggregate_chunks,
    chunk_indices,
    embed_document,
    fit_tfidf,
    load_embeddings,
    preprocess,
    sample_document,
    tfidf_matrix,
    transform_tfidf,
)


def doc(*toks):
    return TokenStream(tuple(toks), Variant.STRIPPED)


class TestPreprocess:
    def test_contraction_stripped(self):
        assert preprocess("He's lovely!").tokens == ("he", "'s", "lovely")

    def test_contraction_with_punctuation(self):
        assert preprocess("He's lovely!", Variant.WITH_PUNCTUATION).tokens == ("he", "'s", "lovely", "!")

    def test_empty(self):
        assert preprocess("").tokens == ()

    @pytest.mark.parametrize(
        "text, expected",
        [
            ("She doesn't sleep.", ("she", "does", "n't", "sleep")),
            ("They're   fine", ("they", "'re", "fine")),
            ("I’m TIRED", ("i", "'m", "tired")),
            ("Café au lait", ("café", "au", "lait")),
        ],
    )
    def test_tokenizer_rules(self, text, expected):
        assert preprocess(text).tokens == expected

    def test_punctuation_runs_kept_whole(self):
        assert preprocess("well... yes?!", "with_punctuation").tokens == ("well", "...", "yes", "?!")

    def test_sample_document_concatenates_in_order(self):
        utts = [Utterance(0, 1, parse_tag("mum-t1-away"), "One two."), Utterance(1, 2, parse_tag("mum-t1-away"), "Three")]
        assert sample_document(utts).tokens == ("one", "two", "three")


class TestTfidf:
    def test_hand_example(self):
        m = fit_tfidf([doc("a", "b"), doc("a")])
        idf_a = math.log(3 / 3) + 1
        idf_b = math.log(3 / 2) + 1
        assert m.terms == ["a", "b"]
        assert abs(m.idf[0] - idf_a) <= 1e-12
        assert abs(m.idf[1] - idf_b) <= 1e-12
        assert abs(idf_b - 1.405465) < 1e-6
        raw = (2 * idf_a, 1 * idf_b)
        norm = math.sqrt(raw[0] ** 2 + raw[1] ** 2)
        v = transform_tfidf(m, doc("a", "a", "b"))
        assert abs(v[0] - raw[0] / norm) <= 1e-12
        assert abs(v[1] - raw[1] / norm) <= 1e-12
        assert (round(v[0], 3), round(v[1], 3)) == (0.818, 0.575)

    def test_single_doc(self):
        m = fit_tfidf([doc("a")])
        assert m.idf[0] == 1.0
        assert transform_tfidf(m, doc("a")).tolist() == [1.0]

    def test_empty_doc_counts_toward_n(self):
        m = fit_tfidf([doc(), doc("a")])
        assert m.terms == ["a"] and m.fitted_on == 2
        assert abs(m.idf[0] - (math.log(3 / 2) + 1)) <= 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_tfidf([])
        with pytest.raises(ValueError):
            fit_tfidf([doc(), doc()])

    def test_oov_gives_zero(self):
        m = fit_tfidf([doc("a", "b")])
        assert not transform_tfidf(m, doc("zzz")).any()
        assert not transform_tfidf(m, doc()).any()

    def test_vocabulary_isolation(self):
        train = [doc("warm", "kind"), doc("cold", "kind")]
        held_out = [doc("heldoutonly", "warm")]
        m = fit_tfidf(train)
        assert "heldoutonly" not in m.vocabulary
        fm = tfidf_matrix(m, ["x"], held_out)
        assert "tfidf:heldoutonly" not in fm.feature_names
        assert fm.values.shape == (1, 3)

    @settings(max_examples=60)
    @given(
        st.lists(st.lists(st.sampled_from("abcdef"), max_size=8), min_size=1, max_size=6),
        st.lists(st.sampled_from("abcdefxyz"), max_size=10),
    )
    def test_norm_is_zero_or_one(self, train, probe):
        train = [doc(*t) for t in train]
        if not any(d.tokens for d in train):
            return
        m = fit_tfidf(train)
        n = np.linalg.norm(transform_tfidf(m, doc(*probe)))
        assert abs(n) < 1e-12 or abs(n - 1) < 1e-12
        if any(t in m.vocabulary for t in probe):
            assert abs(n - 1) < 1e-12


class TestEmbeddings:
    def test_load(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a 1 0\nb 0 1\n")
        t = load_embeddings(p)
        assert t.dimension == 2 and len(t.vectors) == 2
        p2 = tmp_path / "h.txt"
        p2.write_text("2 2\na 1 0\nb 0 1\n")
        t2 = load_embeddings(p2)
        assert t2.vectors.keys() == t.vectors.keys()
        for k in t.vectors:
            np.testing.assert_array_equal(t.vectors[k], t2.vectors[k])

    def test_inconsistent_dimension(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a 1 0\nb 1\n")
        with pytest.raises(FormatError, match=":2:"):
            load_embeddings(p)

    def test_malformed_float(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a 1 0\nb 1 0\nc 1 x\n")
        with pytest.raises(FormatError, match=":3:"):
            load_embeddings(p)

    @pytest.fixture
    def table(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("a 1 0\nb 0 1\n")
        return load_embeddings(p)

    def test_mean(self, table):
        assert embed_document(doc("a"), table).tolist() == [1.0, 0.0]
        assert embed_document(doc("a", "b"), table).tolist() == [0.5, 0.5]
        assert embed_document(doc("a", "zzz"), table).tolist() == [1.0, 0.0]
        assert embed_document(doc("zzz"), table).tolist() == [0.0, 0.0]

    @given(st.lists(st.sampled_from(["a", "b", "q"]), max_size=12), st.randoms())
    def test_order_and_doubling(self, toks, rnd):
        table = EmbeddingTable(2, {"a": np.array([1.0, 0.0]), "b": np.array([0.3, 0.9])})
        d = doc(*toks)
        shuffled = list(toks)
        rnd.shuffle(shuffled)
        e = embed_document(d, table)
        np.testing.assert_allclose(embed_document(doc(*shuffled), table), e, atol=1e-15)
        np.testing.assert_allclose(embed_document(d + d, table), e, atol=1e-15)


class TestChunks:
    @pytest.mark.parametrize(
        "n, expected",
        [
            (0, []),
            (512, [(0, 512)]),
            (768, [(0, 512), (256, 768)]),
            (1300, [(0, 512), (256, 768), (512, 1024), (768, 1280), (1024, 1300)]),
        ],
    )
    def test_examples(self, n, expected):
        assert chunk_indices(n) == expected

    @given(st.integers(0, 3000), st.integers(1, 600), st.floats(0, 0.95))
    def test_covers_exactly(self, n, length, overlap):
        cfg = ChunkAggregationConfig(length, overlap)
        w = chunk_indices(n, cfg)
        covered = np.zeros(n, bool)
        for s, e in w:
            assert 0 <= s < e <= n
            covered[s:e] = True
        assert covered.all()
        need = math.ceil(length * overlap)
        if need >= length:
            # window would not advance; the step is clamped to one token
            need = length - 1
        for (s0, e0), (s1, e1) in zip(w[:-2], w[1:-1]):
            assert e0 - s1 == need

    def test_bad_config(self):
        with pytest.raises(ValueError):
            ChunkAggregationConfig(overlap=1.0)
        with pytest.raises(ValueError):
            ChunkAggregationConfig(chunk_len=0)

    def test_aggregate_example(self):
        out = aggregate_chunks([[(1, 1), (3, 3), (5, 5)]])
        sd = math.sqrt(((1 - 3) ** 2 + 0 + (5 - 3) ** 2) / 3)
        np.testing.assert_allclose(out, [3, 3, sd, sd], atol=1e-12)
        assert round(sd, 3) == 1.633

    def test_identical_vectors(self):
        v = [0.5, -2.0, 7.0]
        out = aggregate_chunks([[v, v, v], [v, v, v]])
        assert out.tolist() == v + [0.0, 0.0, 0.0]

    def test_uses_last_layers(self):
        out = aggregate_chunks([[(100, 100), (1, 1), (3, 3), (5, 5)]])
        np.testing.assert_allclose(out[:2], [3, 3])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            aggregate_chunks([[(1, 1)] * 3, [(1, 1, 1)] * 3])

    def test_chunk_order(self):
        rng = np.random.default_rng(0)
        chunks = [list(rng.standard_normal((3, 4))) for _ in range(5)]
        a = aggregate_chunks(chunks)
        b = aggregate_chunks(chunks[::-1])
        np.testing.assert_allclose(a, b, atol=1e-12)
