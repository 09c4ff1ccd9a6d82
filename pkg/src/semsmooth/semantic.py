"""Side-information interpolation: synonym-weighted mixing of per-context
estimates, the loss-proxy weight rule, and the two-sample plugin estimator.

Two distinct paths on purpose: the theory-check path restricts the
interpolation coefficient to {0, 1} exactly as the risk-bound proofs do
(:func:`plugin_alpha`, :func:`plugin_estimate`), while the practice path
spreads weight over the full simplex via phi(proxy) (:func:`compute_weights`,
:func:`smooth_context`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from semsmooth.embeddings import SynonymFinder, SynonymSet
from semsmooth.estimators import UnseenContext, variable_add_constant
from semsmooth.prob import ProbDist


class WeightSumViolation(ValueError):
    """Interpolation weights are negative or do not sum to 1."""


@dataclass(frozen=True)
class WeightRule:
    """phi choice for turning loss proxies into interpolation weights.

    "reciprocal" uses phi(x) = 1/x, "softmin" uses phi(x) = exp(-tau x).
    Proxies are floored at ``floor`` so phi never sees 0.
    """

    phi: str = "reciprocal"
    tau: float = 1.0
    floor: float = 1e-9

    def __post_init__(self):
        if self.phi not in ("reciprocal", "softmin"):
            raise ValueError("phi must be 'reciprocal' or 'softmin'")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.floor <= 0:
            raise ValueError("floor must be positive")


def compute_weights(self_proxy, synonym_proxies, rule: WeightRule) -> np.ndarray:
    """Normalized weights [alpha_self, alpha_1, ..., alpha_m].

    alpha_j = phi(proxy_j) / sum_k phi(proxy_k); an infinite proxy gets
    weight 0. If every proxy is infinite, all weight stays on self.
    """
    x = np.array([self_proxy, *synonym_proxies], dtype=np.float64)
    x = np.where(np.isnan(x), np.inf, x)
    x = np.maximum(x, rule.floor)
    finite = np.isfinite(x)
    if not finite.any():
        w = np.zeros(x.size)
        w[0] = 1.0
        return w
    if rule.phi == "reciprocal":
        w = np.where(finite, 1.0 / x, 0.0)
    else:
        shift = x[finite].min()
        w = np.where(finite, np.exp(-rule.tau * (x - shift)), 0.0)
    return w / w.sum()


def interpolate(main: ProbDist, side, main_weight=None) -> ProbDist:
    """Pointwise convex combination of ``main`` and the (dist, alpha) pairs.

    With ``main_weight=None`` the main weight is 1 - sum(alpha). Raises
    WeightSumViolation unless all weights are nonnegative and total 1
    (within 1e-9).
    """
    side = list(side)
    alphas = np.array([a for _, a in side], dtype=np.float64)
    if main_weight is None:
        main_weight = 1.0 - float(alphas.sum())
    total = main_weight + float(alphas.sum())
    if main_weight < -1e-12 or np.any(alphas < -1e-12) or abs(total - 1.0) > 1e-9:
        raise WeightSumViolation(
            f"weights must be nonnegative and sum to 1 (got total {total:.17g})"
        )
    live = [(d, a) for d, a in side if a > 0.0]
    if not live:
        return main

    dists = [main] + [d for d, _ in live]
    weights = [main_weight] + [a for _, a in live]
    support = dists[0].support
    aligned = all(
        d.support is support or np.array_equal(d.support, support) for d in dists[1:]
    )
    if not aligned:
        for d in dists[1:]:
            support = np.union1d(support, d.support)
    mix = np.zeros(support.size, dtype=np.float64)
    for d, a in zip(dists, weights):
        if a == 0.0:
            continue
        mix += a * (d.mass if aligned else d.mass_at(support))
    s = float(mix.sum())
    if abs(s - 1.0) > 1e-13:
        mix = mix / s
    return ProbDist(support, mix)


def smooth_context(c, base_model, synset: SynonymSet | None, rule: WeightRule) -> ProbDist:
    """Semantically smoothed conditional for context c.

    Mixes the base model's distributions at c and its synonyms with
    phi-proxy weights. An empty synonym set (no embedding, or m = 0) leaves
    the base distribution untouched. Synonyms whose base distribution is
    unavailable (UnseenContext) are dropped and the weights renormalized.
    """
    main = base_model(c)
    if synset is None or not synset.synonyms:
        return main
    side_dists = []
    proxies = []
    for syn in synset.synonyms:
        try:
            side_dists.append(base_model(syn.context))
        except UnseenContext:
            continue
        proxies.append(syn.proxy)
    if not side_dists:
        return main
    w = compute_weights(synset.self_proxy, proxies, rule)
    if w[0] == 1.0:
        return main
    return interpolate(main, list(zip(side_dists, w[1:])), main_weight=float(w[0]))


class SemanticModel:
    """Wraps a base ``context -> ProbDist`` model with synonym smoothing.

    ``skipped`` counts the distinct contexts where smoothing was skipped
    because the context has no embedding (only meaningful for m > 0).
    """

    def __init__(self, base_model, finder: SynonymFinder, rule: WeightRule, m: int):
        if m < 0:
            raise ValueError("m must be nonnegative")
        self.base = base_model
        self.finder = finder
        self.rule = rule
        self.m = m
        self.skipped = 0
        self._cache = {}

    def __call__(self, c) -> ProbDist:
        c = int(c)
        dist = self._cache.get(c)
        if dist is None:
            if self.m == 0:
                dist = self.base(c)
            else:
                synset = self.finder.select(c, self.m)
                if not synset.synonyms:
                    self.skipped += 1
                dist = smooth_context(c, self.base, synset, self.rule)
            self._cache[c] = dist
        return dist


def plugin_alpha(n, d, n0, d0, delta) -> float:
    """The {0,1} interpolation coefficient of the plugin estimator.

    Compares the own-sample risk proxy (d-1)/(2n) against the synonym-side
    proxy Delta + log(1 + d0/n0); ties and an absent synonym sample
    (n0 = 0) keep the own-sample estimate (alpha = 1).
    """
    own = (d - 1) / (2.0 * n) if n > 0 else math.inf
    syn = delta + math.log1p(d0 / n0) if n0 > 0 else math.inf
    if own == math.inf and syn == math.inf:
        return 1.0
    return 1.0 if own <= syn else 0.0


def plugin_estimate(x_counts, y_counts, delta, alpha=None, beta_r=None):
    """alpha * pi_hat(X) + (1 - alpha) * pi_hat0(Y), both variable
    add-constant estimates; returns (distribution, alpha used).

    With ``alpha=None`` the coefficient is picked in {0, 1} by
    :func:`plugin_alpha`.
    """
    x = np.asarray(x_counts, dtype=np.int64)
    y = np.asarray(y_counts, dtype=np.int64)
    n, d = int(x.sum()), x.size
    n0, d0 = int(y.sum()), y.size
    if alpha is None:
        alpha = plugin_alpha(n, d, n0, d0, delta)
    if not 0 <= alpha <= 1:
        raise WeightSumViolation("alpha must be in [0, 1]")
    if alpha == 1.0:
        return variable_add_constant(x, n, d, beta_r), alpha
    own = variable_add_constant(x, n, d, beta_r)
    syn = variable_add_constant(y, n0, d0, beta_r)
    if alpha == 0.0:
        return syn, alpha
    return interpolate(own, [(syn, 1.0 - alpha)], main_weight=alpha), alpha
