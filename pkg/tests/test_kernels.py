"""Backend parity: the compiled kernels and the pure-Python fallback must
agree to float precision on identical inputs."""

import math

import numpy as np
import pytest

from semsmooth import kernels

BACKENDS = [kernels.get_backend(name) for name in kernels.available_backends()]
IDS = [b.BACKEND for b in BACKENDS]


def test_compiled_backend_is_present():
    # the build ships the extension; the fallback is for degraded installs
    assert "c" in kernels.available_backends()


@pytest.mark.parametrize("kern", BACKENDS, ids=IDS)
class TestParity:
    def test_neumaier_sum_matches_fsum(self, kern, rng):
        x = rng.normal(scale=1e6, size=10_000) + rng.normal(size=10_000)
        assert kern.neumaier_sum(x) == pytest.approx(math.fsum(x), abs=1e-9)

    def test_neumaier_cancellation(self, kern):
        # 1 + 1e16 - 1e16 style cancellation that naive summation loses
        x = np.array([1.0, 1e16, 1.0, -1e16] * 1000)
        assert kern.neumaier_sum(x) == pytest.approx(2000.0, abs=1e-6)

    def test_kl_matches_reference(self, kern, rng):
        p = rng.dirichlet(np.ones(50))
        q = rng.dirichlet(np.ones(50))
        ref = float(np.sum(p * np.log(p / q)))
        assert kern.kl_div(p, q) == pytest.approx(ref, rel=1e-12)

    def test_kl_zero_on_equal(self, kern, rng):
        p = rng.dirichlet(np.ones(10))
        assert kern.kl_div(p, p) == 0.0

    def test_kl_infinite(self, kern):
        assert kern.kl_div(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == math.inf

    def test_kl_skips_zero_p(self, kern):
        p = np.array([0.0, 1.0])
        q = np.array([0.0, 1.0])
        assert kern.kl_div(p, q) == 0.0

    def test_entropy(self, kern):
        p = np.array([0.5, 0.25, 0.25])
        assert kern.entropy(p) == pytest.approx(1.5 * math.log(2), abs=1e-15)
        assert kern.entropy(np.array([1.0, 0.0])) == 0.0

    def test_sum_neg_log(self, kern, rng):
        p = rng.uniform(0.01, 1.0, size=1000)
        assert kern.sum_neg_log(p) == pytest.approx(-math.fsum(np.log(p)), abs=1e-10)
        assert kern.sum_neg_log(np.array([0.5, 0.0])) == math.inf

    def test_pair_sums(self, kern, rng):
        counts = rng.integers(1, 50, size=200).astype(np.int64)
        tot = counts + rng.integers(0, 50, size=200).astype(np.int64)
        q = rng.uniform(0.01, 1.0, size=200)
        ent_ref = math.fsum(counts * np.log(counts / tot))
        kl_ref = math.fsum(counts * (np.log(counts / tot) - np.log(q)))
        assert kern.sum_pairs_entropy(counts, tot) == pytest.approx(ent_ref, abs=1e-9)
        assert kern.sum_pairs_kl(counts, tot, q) == pytest.approx(kl_ref, abs=1e-9)
        q[17] = 0.0
        assert kern.sum_pairs_kl(counts, tot, q) == math.inf

    def test_dist_to_rows(self, kern, rng):
        q = rng.normal(size=7)
        m = np.ascontiguousarray(rng.normal(size=(40, 7)))
        l1 = np.abs(m - q).sum(axis=1)
        l2 = np.sqrt(((m - q) ** 2).sum(axis=1))
        np.testing.assert_allclose(kern.dist_to_rows(q, m, 1), l1, rtol=1e-12)
        np.testing.assert_allclose(kern.dist_to_rows(q, m, 2), l2, rtol=1e-12)


def test_markov_sample_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend unavailable")
    rows = rng.dirichlet(np.ones(30), size=30)
    cum = np.ascontiguousarray(np.cumsum(rows, axis=1))
    u = rng.random(5000)
    paths = [k.markov_sample(cum, 3, u) for k in BACKENDS]
    np.testing.assert_array_equal(paths[0], paths[1])


def test_markov_sample_edge_uniforms():
    cum = np.ascontiguousarray(np.cumsum([[0.25, 0.25, 0.25, 0.25]] * 4, axis=1))
    for kern in BACKENDS:
        out = kern.markov_sample(cum, 0, np.array([0.0, 0.999999999, 0.25, 1.0 - 1e-16]))
        assert out.min() >= 0 and out.max() <= 3
        assert out[0] == 0  # u = 0 lands in the first cell
