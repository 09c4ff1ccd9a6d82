"""Preprocessing rules, vocabulary, bigram counting and count-file I/O."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semsmooth import corpus
from semsmooth.corpus import (
    BOS,
    EOS,
    NUM,
    URL,
    CountFileError,
    CountTable,
    Vocabulary,
    count_bigrams,
    join_sentences,
    load_counts,
    preprocess,
    save_counts,
)


class TestPreprocess:
    def test_spec_example(self):
        assert preprocess("Born in 1987, see http://x.y") == [
            [BOS, "born", "in", NUM, "see", URL, EOS]
        ]

    def test_empty_input(self):
        assert preprocess("") == []
        assert preprocess("  \n\t .!? ") == []

    def test_lowercase_punct_whitespace(self):
        assert preprocess("Hello   World.") == [[BOS, "hello", "world", EOS]]

    def test_sentence_split_on_terminal_punctuation(self):
        out = preprocess("One two. Three four! Five?")
        assert out == [
            [BOS, "one", "two", EOS],
            [BOS, "three", "four", EOS],
            [BOS, "five", EOS],
        ]

    def test_newline_splits_sentences(self):
        assert preprocess("alpha beta\ngamma") == [
            [BOS, "alpha", "beta", EOS],
            [BOS, "gamma", EOS],
        ]

    def test_reference_markers_removed(self):
        assert preprocess("fact [1] more [citation needed] done") == [
            [BOS, "fact", "more", "done", EOS]
        ]

    def test_decimal_numbers_stay_one_token(self):
        assert preprocess("pi is 3.14 about") == [[BOS, "pi", "is", NUM, "about", EOS]]

    def test_non_ascii_dropped(self):
        assert preprocess("café naïve") == [[BOS, "caf", "nave", EOS]]

    def test_url_variants(self):
        out = preprocess("see www.example.org and https://a.b/c?d=1 end")
        assert out == [[BOS, "see", URL, "and", URL, "end", EOS]]

    @given(st.text(max_size=300))
    @settings(max_examples=80, deadline=None)
    def test_idempotent(self, text):
        once = preprocess(text)
        twice = preprocess(join_sentences(once))
        assert once == twice

    @given(st.text(max_size=200))
    @settings(max_examples=50, deadline=None)
    def test_output_shape(self, text):
        for sent in preprocess(text):
            assert sent[0] == BOS and sent[-1] == EOS
            assert len(sent) >= 3
            for tok in sent[1:-1]:
                assert tok not in (BOS, EOS)
                assert tok == tok.lower()


class TestVocabulary:
    def test_sentinels_reserved(self):
        v = Vocabulary()
        assert [v.token(i) for i in range(4)] == [BOS, EOS, NUM, URL]

    def test_union_build_and_bijection(self):
        train = [[BOS, "a", EOS]]
        test = [[BOS, "b", EOS]]
        v = Vocabulary.from_sentences(train, test)
        assert "a" in v and "b" in v
        for t in ("a", "b", BOS):
            assert v.token(v.id(t)) == t
        with pytest.raises(KeyError):
            v.id("missing")


class TestCountBigrams:
    def test_enumerated_example(self):
        v = Vocabulary.from_sentences([[BOS, "a", "b", EOS]])
        t = count_bigrams(v.encode_all([[BOS, "a", "b", EOS]]))
        a, b = v.id("a"), v.id("b")
        assert t.count(v.id(BOS), a) == 1
        assert t.count(a, b) == 1
        assert t.count(b, v.id(EOS)) == 1
        assert t.total_events == 3

    def test_empty(self):
        t = count_bigrams([])
        assert t.total_events == 0 and t.total_distinct == 0

    def test_doubling(self):
        s = [[0, 1, 2, 0]]
        t1 = count_bigrams(s)
        t2 = count_bigrams(s + s)
        for c in t1.contexts():
            ids, n1 = t1.row(c)
            _, n2 = t2.row(c)
            np.testing.assert_array_equal(2 * n1, n2)

    def test_no_cross_sentence_pairs(self):
        t = count_bigrams([[1, 2], [3, 4]])
        assert t.count(2, 3) == 0
        assert t.total_events == 2

    def test_invariants(self, rng):
        seqs = [rng.integers(0, 20, size=rng.integers(2, 40)) for _ in range(30)]
        t = count_bigrams(seqs)
        # N_c equals the row sum for every context
        for c in t.contexts():
            ids, cnts = t.row(int(c))
            assert t.n_context(int(c)) == cnts.sum()
            assert t.distinct_successors(int(c)) == ids.size
        # N1+(.,.) consistency both ways
        total = t.total_distinct
        assert total == sum(t.distinct_successors(int(c)) for c in t.contexts())
        assert total == int(t.predecessor_counts(20).sum())

    @given(st.lists(st.lists(st.integers(0, 8), min_size=2, max_size=8), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_additivity(self, sents):
        half = len(sents) // 2
        combined = count_bigrams(sents)
        merged = count_bigrams(sents[:half]).add(count_bigrams(sents[half:]))
        assert combined == merged


class TestPersistence:
    def test_round_trip(self, tmp_path, rng):
        sents = preprocess("the cat sat. the dog sat! a cat ran.")
        v = Vocabulary.from_sentences(sents)
        t = count_bigrams(v.encode_all(sents))
        path = tmp_path / "counts.tsv"
        save_counts(t, v, path)
        loaded, _ = load_counts(path, v)
        assert loaded == t

    def test_file_is_sorted_with_header(self, tmp_path):
        sents = [[BOS, "b", "a", EOS]]
        v = Vocabulary.from_sentences(sents)
        t = count_bigrams(v.encode_all(sents))
        path = tmp_path / "c.tsv"
        save_counts(t, v, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "#semsmooth-counts v1"
        body = [l.split("\t")[:2] for l in lines[1:]]
        assert body == sorted(body)

    def test_hand_written_fixture(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("#semsmooth-counts v1\na\tb\t2\na\tc\t1\nb\ta\t1\n")
        t, v = load_counts(path)
        assert t.count(v.id("a"), v.id("b")) == 2
        assert t.count(v.id("a"), v.id("c")) == 1
        assert t.n_context(v.id("a")) == 3

    def test_truncated_line_names_line_number(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("#semsmooth-counts v1\na\tb\t2\na\tc\n")
        with pytest.raises(CountFileError, match="line 3"):
            load_counts(path)

    def test_bad_header_and_bad_count(self, tmp_path):
        p1 = tmp_path / "h.tsv"
        p1.write_text("nope\n")
        with pytest.raises(CountFileError, match="line 1"):
            load_counts(p1)
        p2 = tmp_path / "n.tsv"
        p2.write_text("#semsmooth-counts v1\na\tb\tx\n")
        with pytest.raises(CountFileError, match="line 2"):
            load_counts(p2)
