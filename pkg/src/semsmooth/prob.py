"""Probability primitives: finite distributions, KL divergence, entropy,
log-perplexity and its exact entropy + KL decomposition.

All logarithms are natural, so every quantity here is in nats; perplexity
is ``exp`` of nats per token. A model that assigns zero mass to an observed
event yields ``+inf`` (an "infinite divergence", the signature of an
unsmoothed model) instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from semsmooth import kernels

MASS_TOL = 1e-12


class ProbDist:
    """Distribution over a finite alphabet of sorted, distinct integer ids.

    Instances are treated as immutable; operations never modify them.
    """

    __slots__ = ("support", "mass")

    def __init__(self, support, mass, validate=True):
        support = np.ascontiguousarray(support, dtype=np.int64)
        mass = np.ascontiguousarray(mass, dtype=np.float64)
        if validate:
            if support.ndim != 1 or mass.shape != support.shape:
                raise ValueError("support and mass must be 1-d of equal length")
            if support.size == 0:
                raise ValueError("empty support")
            if support.size > 1 and np.any(np.diff(support) <= 0):
                raise ValueError("support ids must be distinct and sorted")
            if not np.all(np.isfinite(mass)) or np.any(mass < 0.0):
                raise ValueError("mass must be finite and nonnegative")
            total = float(np.sum(mass))
            if abs(total - 1.0) > MASS_TOL:
                raise ValueError(f"mass sums to {total:.17g}, not 1")
        self.support = support
        self.mass = mass

    @classmethod
    def from_dense(cls, mass, support=None, validate=True):
        """Distribution over ids 0..d-1 (or an explicit sorted id array)."""
        mass = np.ascontiguousarray(mass, dtype=np.float64)
        if support is None:
            support = np.arange(mass.shape[0], dtype=np.int64)
        return cls(support, mass, validate=validate)

    @property
    def dim(self):
        return self.support.size

    def prob(self, symbol):
        """Mass at one symbol id (0 if outside the support)."""
        i = np.searchsorted(self.support, symbol)
        if i < self.support.size and self.support[i] == symbol:
            return float(self.mass[i])
        return 0.0

    def mass_at(self, ids):
        """Masses at an array of symbol ids, 0 where a symbol is absent."""
        ids = np.asarray(ids, dtype=np.int64)
        idx = np.searchsorted(self.support, ids)
        idx = np.minimum(idx, self.support.size - 1)
        return np.where(self.support[idx] == ids, self.mass[idx], 0.0)

    def __repr__(self):
        return f"ProbDist(dim={self.dim})"


def _same_support(p: ProbDist, q: ProbDist) -> bool:
    return p.support is q.support or (
        p.support.size == q.support.size and np.array_equal(p.support, q.support)
    )


def kl_divergence(p: ProbDist, q: ProbDist) -> float:
    """d_KL(p || q) in nats; +inf when q misses mass where p has some.

    Terms with p_i = 0 contribute nothing regardless of q_i.
    """
    if _same_support(p, q):
        val = kernels.kl_div(p.mass, q.mass)
    else:
        qm = np.ascontiguousarray(q.mass_at(p.support))
        val = kernels.kl_div(p.mass, qm)
    return val if val > 0.0 else 0.0


def entropy(p: ProbDist) -> float:
    """H(p) in nats, between 0 and log(dim)."""
    val = kernels.entropy(p.mass)
    return val if val > 0.0 else 0.0


class TestSequence:
    """A tokenized evaluation sequence.

    Bigram events are the consecutive pairs inside each segment (sentence);
    contexts never cross segment boundaries. A flat-token sequence with the
    start-of-sequence convention is built via :meth:`from_tokens`, which
    prepends the sentinel as the first context.
    """

    __test__ = False  # not a pytest class, despite the name

    __slots__ = ("segments", "k", "_events")

    def __init__(self, segments, k=2):
        if k != 2:
            raise ValueError("only bigram sequences (k=2) are supported")
        self.k = k
        segs = []
        n_events = 0
        for seg in segments:
            arr = np.ascontiguousarray(seg, dtype=np.int64)
            if arr.ndim != 1:
                raise ValueError("each segment must be a 1-d token id list")
            if arr.size and arr.min() < 0:
                raise ValueError("token ids must be nonnegative")
            n_events += max(arr.size - 1, 0)
            segs.append(arr)
        if n_events == 0:
            raise ValueError("sequence yields no bigram events")
        self.segments = tuple(segs)
        self._events = None

    @classmethod
    def from_tokens(cls, tokens, bos_id, k=2):
        tokens = np.ascontiguousarray(tokens, dtype=np.int64)
        return cls([np.concatenate(([bos_id], tokens))], k=k)

    @property
    def tokens(self):
        return np.concatenate(self.segments)

    @property
    def n_events(self):
        return sum(max(s.size - 1, 0) for s in self.segments)

    def events(self):
        """(contexts, words): aligned id arrays, one entry per bigram event."""
        if self._events is None:
            ctx = np.concatenate([s[:-1] for s in self.segments if s.size > 1])
            wrd = np.concatenate([s[1:] for s in self.segments if s.size > 1])
            self._events = (ctx, wrd)
        return self._events

    def check_vocab(self, size):
        if int(self.tokens.max()) >= size:
            raise ValueError("sequence contains ids outside the vocabulary")


Model = Callable[[int], ProbDist]


def log_perplexity(model: Model, seq: TestSequence) -> float:
    """-(1/T) sum over events of log p(w|c); exp of this is the PPL.

    The sum runs over the event stream in order with compensated
    accumulation; the model is queried once per distinct context.
    """
    ctx, wrd = seq.events()
    t = ctx.size
    order = np.argsort(ctx, kind="stable")
    sc = ctx[order]
    sw = wrd[order]
    uctx, first = np.unique(sc, return_index=True)
    bounds = np.append(first, t)
    probs_sorted = np.empty(t, dtype=np.float64)
    for c, a, b in zip(uctx, bounds[:-1], bounds[1:]):
        probs_sorted[a:b] = model(int(c)).mass_at(sw[a:b])
    probs = np.empty(t, dtype=np.float64)
    probs[order] = probs_sorted
    return kernels.sum_neg_log(probs) / t


def perplexity(model: Model, seq: TestSequence) -> float:
    return math.exp(log_perplexity(model, seq))


class ContextTerm(NamedTuple):
    weight: float
    entropy: float
    kl: float


@dataclass(frozen=True)
class DecompositionReport:
    """log PPL split into its model-independent entropy part and the
    context-weighted KL to the model, plus the per-context terms."""

    log_ppl: float
    entropy_term: float
    kl_term: float
    per_context: dict

    @property
    def identity_gap(self):
        if math.isinf(self.log_ppl) and math.isinf(self.kl_term):
            return 0.0
        return self.log_ppl - (self.entropy_term + self.kl_term)


def decompose(model: Model, seq: TestSequence) -> DecompositionReport:
    """Split log PPL into sum_c p(c) H(p(.|c)) + sum_c p(c) KL(p(.|c) || model).

    ``log_ppl`` is computed by the independent event-stream path of
    :func:`log_perplexity`; the identity between the two is a library
    guarantee (within 1e-10), not enforced here.
    """
    ctx, wrd = seq.events()
    t = ctx.size
    k = int(wrd.max()) + 1
    keys = ctx * k + wrd
    pair_keys, pair_counts = np.unique(keys, return_counts=True)
    pc_ctx = pair_keys // k
    pc_wrd = pair_keys - pc_ctx * k

    uctx, ctx_counts = np.unique(ctx, return_counts=True)
    nc_at_pairs = ctx_counts[np.searchsorted(uctx, pc_ctx)]

    starts = np.searchsorted(pc_ctx, uctx)
    bounds = np.append(starts, pc_ctx.size)
    q = np.empty(pc_ctx.size, dtype=np.float64)
    for c, a, b in zip(uctx, starts, bounds[1:]):
        q[a:b] = model(int(c)).mass_at(pc_wrd[a:b])

    pair_counts = np.ascontiguousarray(pair_counts, dtype=np.int64)
    nc_at_pairs = np.ascontiguousarray(nc_at_pairs, dtype=np.int64)
    entropy_term = -kernels.sum_pairs_entropy(pair_counts, nc_at_pairs) / t
    kl_term = kernels.sum_pairs_kl(pair_counts, nc_at_pairs, q) / t

    # per-context report terms (not identity-critical, plain reductions)
    ratio = pair_counts / nc_at_pairs
    with np.errstate(divide="ignore"):
        log_ratio = np.log(ratio)
        log_q = np.log(q)
    h_c = -np.add.reduceat(pair_counts * log_ratio, starts) / ctx_counts
    kl_c = np.add.reduceat(pair_counts * (log_ratio - log_q), starts) / ctx_counts
    weights = ctx_counts / t
    per_context = {
        int(c): ContextTerm(float(w), float(h), float(d))
        for c, w, h, d in zip(uctx, weights, h_c, kl_c)
    }

    return DecompositionReport(
        log_ppl=log_perplexity(model, seq),
        entropy_term=entropy_term,
        kl_term=kl_term,
        per_context=per_context,
    )
