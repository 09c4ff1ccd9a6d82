"""Estimator fixtures (hand arithmetic), reductions, and validity properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semsmooth.corpus import CountTable, count_bigrams
from semsmooth.estimators import (
    AddBetaModel,
    JelinekMercerModel,
    KneserNeyModel,
    SmootherConfig,
    UnseenContext,
    add_beta,
    empirical,
    jelinek_mercer,
    kneser_ney,
    variable_add_constant,
)
from semsmooth.prob import ProbDist


def kn_fixture():
    # bigrams {(a,b):2, (a,c):1, (b,a):1} over alphabet {a,b,c} = {0,1,2}
    return CountTable(
        np.array([0, 0, 1]), np.array([1, 2, 0]), np.array([2, 1, 1])
    )


class TestAddBeta:
    def test_hand_value(self):
        p = add_beta([2, 0, 1], 3, 3, 1.0)
        np.testing.assert_allclose(p.mass, [0.5, 1 / 6, 1 / 3], atol=1e-15)

    def test_all_zero_gives_uniform(self):
        p = add_beta([0, 0, 0, 0], 0, 4, 0.37)
        np.testing.assert_allclose(p.mass, 0.25, atol=1e-15)

    def test_large_beta_limit_is_uniform(self):
        p = add_beta([5, 1, 0], 6, 3, 1e9)
        np.testing.assert_allclose(p.mass, 1 / 3, atol=1e-6)

    def test_validates_total(self):
        with pytest.raises(ValueError):
            add_beta([1, 1], 3, 2, 1.0)

    @given(st.lists(st.integers(0, 50), min_size=2, max_size=20),
           st.floats(0.01, 10.0))
    @settings(max_examples=60, deadline=None)
    def test_valid_and_strictly_positive(self, counts, beta):
        d = len(counts)
        p = add_beta(counts, sum(counts), d, beta)
        assert np.all(p.mass > 0)
        assert abs(p.mass.sum() - 1.0) < 1e-12


class TestVariableAddConstant:
    def test_default_half_table(self):
        p = variable_add_constant([1, 0], 1, 2, None)
        np.testing.assert_allclose(p.mass, [0.75, 0.25], atol=1e-15)

    def test_constant_table_reduces_to_add_beta(self):
        counts = [4, 0, 2, 1]
        p1 = variable_add_constant(counts, 7, 4, np.array([0.7]))
        p2 = add_beta(counts, 7, 4, 0.7)
        np.testing.assert_allclose(p1.mass, p2.mass, atol=1e-15)

    def test_symmetry(self):
        p = variable_add_constant([3, 3], 6, 2, None)
        np.testing.assert_allclose(p.mass, [0.5, 0.5], atol=1e-15)

    def test_count_dependent_table(self):
        # beta_0 = 1/2, beta_r = 1 for r >= 1
        table = np.array([0.5, 1.0])
        p = variable_add_constant([2, 0], 2, 2, table)
        np.testing.assert_allclose(p.mass, [3 / 3.5, 0.5 / 3.5], atol=1e-15)

    def test_rejects_small_betas(self):
        with pytest.raises(ValueError):
            variable_add_constant([1, 0], 1, 2, np.array([0.4]))


class TestKneserNey:
    def test_hand_fixture(self):
        t = kn_fixture()
        p = kneser_ney(t, 0, 0.5, 3)
        assert p.prob(1) == pytest.approx(0.6111111111, abs=1e-9)
        assert p.prob(2) == pytest.approx(0.2777777778, abs=1e-9)
        assert p.prob(0) == pytest.approx(0.1111111111, abs=1e-9)
        assert p.mass.sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_discount_is_empirical(self):
        t = kn_fixture()
        p = kneser_ney(t, 0, 0.0, 3)
        np.testing.assert_allclose(p.mass_at([1, 2]), [2 / 3, 1 / 3], atol=1e-15)

    def test_full_discount_on_singletons(self):
        # 4 distinct singleton bigrams; D = 1 moves all of a's mass to P_cont
        t = CountTable(np.array([0, 0, 1, 2]), np.array([1, 2, 3, 3]),
                       np.array([1, 1, 1, 1]))
        p = kneser_ney(t, 0, 1.0, 4)
        # lambda_0 = 1 * 2/2 = 1; P_cont = (0, 1/4, 1/4, 2/4)
        np.testing.assert_allclose(p.mass, [0, 0.25, 0.25, 0.5], atol=1e-15)

    def test_unseen_context_raises(self):
        with pytest.raises(UnseenContext):
            kneser_ney(kn_fixture(), 2, 0.5, 3)

    def test_row_sums_on_random_tables(self, rng):
        for _ in range(20):
            seqs = [rng.integers(0, 12, size=rng.integers(2, 30)) for _ in range(6)]
            t = count_bigrams(seqs)
            d = float(rng.uniform(0, 1))
            for c in t.contexts()[:5]:
                p = kneser_ney(t, int(c), d, 12)
                assert abs(p.mass.sum() - 1.0) < 1e-10


class TestJelinekMercer:
    def test_lambda_zero_is_unigram(self):
        t = kn_fixture()
        p = jelinek_mercer(t, 0, 0.0, 3)
        # successor marginal: a:1, b:2, c:1 over 4 events
        np.testing.assert_allclose(p.mass, [0.25, 0.5, 0.25], atol=1e-15)

    def test_lambda_one_is_empirical(self):
        t = kn_fixture()
        p = jelinek_mercer(t, 0, 1.0, 3)
        np.testing.assert_allclose(p.mass, [0, 2 / 3, 1 / 3], atol=1e-15)

    def test_half_mixture_hand_value(self):
        t = kn_fixture()
        p = jelinek_mercer(t, 0, 0.5, 3)
        expected = 0.5 * np.array([0, 2 / 3, 1 / 3]) + 0.5 * np.array([0.25, 0.5, 0.25])
        np.testing.assert_allclose(p.mass, expected, atol=1e-15)

    def test_unseen_context(self):
        with pytest.raises(UnseenContext):
            jelinek_mercer(kn_fixture(), 2, 0.5, 3)


class TestModels:
    def test_models_cache_and_match_ops(self, rng):
        seqs = [rng.integers(0, 10, size=40)]
        t = count_bigrams(seqs)
        c = int(t.contexts()[0])
        m = KneserNeyModel(t, 10, 0.6)
        np.testing.assert_array_equal(m(c).mass, kneser_ney(t, c, 0.6, 10).mass)
        assert m(c) is m(c)

    def test_kn_model_backs_off_to_continuation(self):
        t = kn_fixture()
        m = KneserNeyModel(t, 3, 0.5)
        p = m(2)  # context c unseen; each word has exactly one distinct predecessor
        np.testing.assert_allclose(p.mass, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_every_model_is_a_valid_dist(self, rng):
        seqs = [rng.integers(0, 15, size=60)]
        t = count_bigrams(seqs)
        for cfg in (SmootherConfig("add_beta", beta=0.3),
                    SmootherConfig("variable_add_constant"),
                    SmootherConfig("kneser_ney", discount=0.6),
                    SmootherConfig("jelinek_mercer", lam=0.5)):
            model = cfg.build_model(t, 15)
            for c in range(15):
                p = model(c)
                assert abs(p.mass.sum() - 1.0) < 1e-12
                assert np.all(p.mass >= 0)

    def test_smoothing_models_never_assign_zero(self, rng):
        seqs = [rng.integers(0, 8, size=30)]
        t = count_bigrams(seqs)
        for model in (AddBetaModel(t, 8, 0.01),):
            for c in range(8):
                assert np.all(model(c).mass > 0)


class TestSmootherConfig:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            SmootherConfig("katz")

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SmootherConfig("add_beta", beta=0.0)
        with pytest.raises(ValueError):
            SmootherConfig("kneser_ney", discount=1.5)
        with pytest.raises(ValueError):
            SmootherConfig("jelinek_mercer", lam=-0.1)

    def test_manifest_round_trip_fields(self):
        cfg = SmootherConfig("kneser_ney", discount=0.4)
        assert cfg.to_manifest() == {"kind": "kneser_ney", "discount": 0.4}
