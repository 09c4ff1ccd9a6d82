"""Probability core: KL/entropy oracles, perplexity, and the decomposition
identity between the event-stream and grouped computations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semsmooth.corpus import count_bigrams
from semsmooth.estimators import AddBetaModel, EmpiricalModel
from semsmooth.prob import (
    ProbDist,
    TestSequence,
    decompose,
    entropy,
    kl_divergence,
    log_perplexity,
)

simplex = st.integers(2, 12).flatmap(
    lambda d: st.lists(st.floats(1e-6, 1.0), min_size=d, max_size=d)
).map(lambda w: np.array(w) / np.sum(w))


class TestProbDist:
    def test_rejects_bad_mass(self):
        with pytest.raises(ValueError):
            ProbDist([0, 1], [0.6, 0.6])
        with pytest.raises(ValueError):
            ProbDist([0, 1], [1.2, -0.2])
        with pytest.raises(ValueError):
            ProbDist([1, 0], [0.5, 0.5])
        with pytest.raises(ValueError):
            ProbDist([0, 0], [0.5, 0.5])

    def test_mass_at_alignment(self):
        p = ProbDist([2, 5, 9], [0.2, 0.3, 0.5])
        np.testing.assert_allclose(p.mass_at([0, 2, 5, 9, 10]), [0, 0.2, 0.3, 0.5, 0])
        assert p.prob(5) == 0.3
        assert p.prob(4) == 0.0


class TestKL:
    def test_identity_case(self):
        p = ProbDist([0, 1], [0.3, 0.7])
        assert kl_divergence(p, p) == 0.0

    def test_forced_log2(self):
        p = ProbDist([0, 1], [1.0, 0.0])
        q = ProbDist([0, 1], [0.5, 0.5])
        assert kl_divergence(p, q) == pytest.approx(math.log(2), abs=1e-15)

    def test_hand_value(self):
        p = ProbDist([0, 1], [0.75, 0.25])
        q = ProbDist([0, 1], [0.5, 0.5])
        # 0.75 ln 1.5 + 0.25 ln 0.5
        assert kl_divergence(p, q) == pytest.approx(0.1308120359411, abs=1e-12)

    def test_infinite_divergence_is_value_not_error(self):
        p = ProbDist([0, 1], [0.5, 0.5])
        q = ProbDist([0, 1], [1.0, 0.0])
        assert kl_divergence(p, q) == math.inf

    def test_mismatched_supports(self):
        p = ProbDist([1, 3], [0.5, 0.5])
        q = ProbDist([0, 1, 3, 7], [0.1, 0.4, 0.4, 0.1])
        ref = 0.5 * math.log(0.5 / 0.4) * 2
        assert kl_divergence(p, q) == pytest.approx(ref, abs=1e-12)
        # q lacks an id where p has mass
        q2 = ProbDist([1, 2], [0.5, 0.5])
        assert kl_divergence(p, q2) == math.inf

    @given(simplex, simplex)
    @settings(max_examples=60, deadline=None)
    def test_nonnegative_and_pinsker(self, pw, qw):
        d = min(pw.size, qw.size)
        p = ProbDist.from_dense(pw[:d] / pw[:d].sum())
        q = ProbDist.from_dense(qw[:d] / qw[:d].sum())
        kl = kl_divergence(p, q)
        assert kl >= 0.0
        l1 = float(np.abs(p.mass - q.mass).sum())
        assert kl >= l1 * l1 / 2 - 1e-12  # Pinsker

    @given(simplex)
    @settings(max_examples=30, deadline=None)
    def test_zero_iff_equal(self, pw):
        p = ProbDist.from_dense(pw)
        assert kl_divergence(p, p) == 0.0


class TestEntropy:
    def test_point_mass(self):
        assert entropy(ProbDist([0, 1, 2], [0, 1.0, 0])) == 0.0

    def test_uniform(self):
        assert entropy(ProbDist.from_dense(np.full(8, 0.125))) == pytest.approx(
            math.log(8), abs=1e-14
        )

    def test_hand_value(self):
        p = ProbDist.from_dense([0.5, 0.25, 0.25])
        assert entropy(p) == pytest.approx(1.0397207708399179, abs=1e-12)

    @given(simplex)
    @settings(max_examples=40, deadline=None)
    def test_bounds(self, pw):
        p = ProbDist.from_dense(pw)
        h = entropy(p)
        assert 0.0 <= h <= math.log(p.dim) + 1e-12


class TestTestSequence:
    def test_events_respect_segments(self):
        seq = TestSequence([[1, 2, 3], [4, 5]])
        ctx, wrd = seq.events()
        np.testing.assert_array_equal(ctx, [1, 2, 4])
        np.testing.assert_array_equal(wrd, [2, 3, 5])

    def test_from_tokens_uses_sentinel_context(self):
        seq = TestSequence.from_tokens([7, 8], bos_id=0)
        ctx, wrd = seq.events()
        np.testing.assert_array_equal(ctx, [0, 7])
        np.testing.assert_array_equal(wrd, [7, 8])

    def test_rejects_empty_and_higher_order(self):
        with pytest.raises(ValueError):
            TestSequence([[1]])
        with pytest.raises(ValueError):
            TestSequence([[1, 2]], k=3)


def uniform_model(d):
    dist = ProbDist.from_dense(np.full(d, 1.0 / d))
    return lambda c: dist


class TestLogPerplexity:
    def test_uniform_model(self, rng):
        d = 11
        seq = TestSequence([rng.integers(0, d, size=200)])
        lp = log_perplexity(uniform_model(d), seq)
        assert lp == pytest.approx(math.log(d), abs=1e-12)

    def test_three_token_hand_oracle(self):
        # model: p(.|0) = (.2,.8), p(.|1) = (.6,.4); seq segment [0,1,1,0]
        rows = {0: ProbDist.from_dense([0.2, 0.8]), 1: ProbDist.from_dense([0.6, 0.4])}
        seq = TestSequence([[0, 1, 1, 0]])
        expected = -(math.log(0.8) + math.log(0.4) + math.log(0.6)) / 3
        assert log_perplexity(rows.__getitem__, seq) == pytest.approx(expected, abs=1e-14)

    def test_zero_prob_gives_inf(self):
        rows = {0: ProbDist.from_dense([1.0, 0.0])}
        seq = TestSequence([[0, 1]])
        assert log_perplexity(rows.__getitem__, seq) == math.inf


def random_model_and_seq(rng, max_len=2000):
    d = int(rng.integers(2, 30))
    n_sent = int(rng.integers(1, 6))
    total = int(rng.integers(4, max_len))
    seqs = [rng.integers(0, d, size=max(2, total // n_sent)) for _ in range(n_sent)]
    model = AddBetaModel(count_bigrams(seqs), d, float(rng.uniform(0.05, 2.0)))
    return model, TestSequence(seqs), d


class TestDecompose:
    def test_empirical_model_zero_kl(self, rng):
        seqs = [rng.integers(0, 9, size=300)]
        seq = TestSequence(seqs)
        rep = decompose(EmpiricalModel(count_bigrams(seqs)), seq)
        assert rep.kl_term == 0.0
        assert abs(rep.identity_gap) <= 1e-12

    def test_identity_randomized(self, rng):
        for _ in range(25):
            model, seq, _ = random_model_and_seq(rng)
            rep = decompose(model, seq)
            assert abs(rep.identity_gap) <= 1e-10
            assert rep.kl_term >= -1e-15

    def test_entropy_term_model_independent(self, rng):
        model, seq, d = random_model_and_seq(rng)
        other = AddBetaModel(count_bigrams([rng.integers(0, d, size=100)]), d, 1.0)
        r1 = decompose(model, seq)
        r2 = decompose(other, seq)
        assert r1.entropy_term == r2.entropy_term

    def test_context_weights_sum_to_one(self, rng):
        model, seq, _ = random_model_and_seq(rng)
        rep = decompose(model, seq)
        total = math.fsum(t.weight for t in rep.per_context.values())
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_entropy_lower_bound_on_ppl(self, rng):
        model, seq, _ = random_model_and_seq(rng)
        rep = decompose(model, seq)
        assert math.exp(rep.entropy_term) <= math.exp(rep.log_ppl) + 1e-12

    def test_unsmoothed_model_reports_inf(self, rng):
        train = [rng.integers(0, 6, size=50)]
        test = [np.concatenate([rng.integers(0, 6, size=50), [7, 7]])]
        model = EmpiricalModel(count_bigrams([np.concatenate([train[0], [7, 7]])]))
        rep = decompose(model, TestSequence(test))
        assert math.isinf(rep.kl_term) and math.isinf(rep.log_ppl)
        assert rep.identity_gap == 0.0
