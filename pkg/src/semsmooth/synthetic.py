"""Synthetic low-rank Markov testbed.

Builds a chain whose transition matrix has a small number of distinct rows,
factorizes Q_cw = log(P_cw / Pr(c)) into context and output embeddings with
a truncated SVD (so the chain is Lipschitz-logit by construction with
L = max_w ||e~_w||_2), samples sequences from the stationary start, and runs
the perplexity-vs-training-size sweep comparing plain and semantically
smoothed add-constant estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from semsmooth import kernels
from semsmooth.corpus import count_bigrams
from semsmooth.embeddings import EmbeddingTable, ProximityConfig, SynonymFinder
from semsmooth.estimators import (
    AddBetaModel,
    JelinekMercerModel,
    KneserNeyModel,
    MatrixModel,
)
from semsmooth.prob import TestSequence, log_perplexity
from semsmooth.semantic import SemanticModel, WeightRule


class RankOverflow(ValueError):
    """The log-ratio matrix needs more embedding dimensions than requested."""


@dataclass(frozen=True)
class MarkovSpec:
    """Chain shape: distinct transition rows repeated over a state block."""

    states: int = 100
    classes: int = 10
    dim: int | None = None
    seed: int = 0
    row_floor: float = 1e-6

    def __post_init__(self):
        if self.states <= 0 or self.classes <= 0:
            raise ValueError("states and classes must be positive")
        if self.states % self.classes:
            raise ValueError("states must be divisible by the distinct-row count")
        if not 0 < self.row_floor < 1.0 / self.states:
            raise ValueError("row_floor must be in (0, 1/states)")


class FactorizedChain:
    """Strictly positive row-stochastic chain with an exact logit
    factorization: softmax_w(e_c . e~_w) reproduces each transition row."""

    def __init__(self, transition, stationary, context_emb, output_emb, validate=True):
        self.transition = np.asarray(transition, dtype=np.float64)
        self.stationary = np.asarray(stationary, dtype=np.float64)
        self.context_emb = np.asarray(context_emb, dtype=np.float64)
        self.output_emb = np.asarray(output_emb, dtype=np.float64)
        self._cum_rows = None
        self._log_transition = None
        if validate:
            p, pi = self.transition, self.stationary
            if np.any(p <= 0):
                raise ValueError("transition rows must be strictly positive")
            if np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
                raise ValueError("transition rows must sum to 1")
            if np.max(np.abs(pi @ p - pi)) > 1e-10:
                raise ValueError("stationary distribution does not satisfy pi P = pi")
            logits = self.context_emb @ self.output_emb.T
            z = np.exp(logits - logits.max(axis=1, keepdims=True))
            recon = z / z.sum(axis=1, keepdims=True)
            if np.max(np.abs(recon - p)) > 1e-9:
                raise ValueError("softmax reconstruction does not match the chain")

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def rank(self):
        return self.context_emb.shape[1]

    @property
    def lipschitz(self) -> float:
        """L = max_w ||e~_w||_2 of the logit maps."""
        return float(np.sqrt((self.output_emb**2).sum(axis=1)).max())

    def log_transition(self):
        if self._log_transition is None:
            self._log_transition = np.log(self.transition)
        return self._log_transition

    def cum_rows(self):
        if self._cum_rows is None:
            self._cum_rows = np.ascontiguousarray(np.cumsum(self.transition, axis=1))
        return self._cum_rows

    def model(self):
        """The true chain as a context -> ProbDist model."""
        return MatrixModel(self.transition)

    def conditional_entropy(self) -> float:
        """sum_c Pr(c) H(P(.|c)): the log-PPL floor for any bigram model."""
        logp = self.log_transition()
        h_rows = -(self.transition * logp).sum(axis=1)
        return float(self.stationary @ h_rows)

    def embedding_table(self) -> EmbeddingTable:
        """Context embeddings keyed by state id."""
        return EmbeddingTable({i: self.context_emb[i] for i in range(self.n_states)})


def _stationary(p):
    n = p.shape[0]
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    return pi / pi.sum()


def generate_chain(spec: MarkovSpec) -> FactorizedChain:
    """Dirichlet-drawn distinct rows (floored so logs exist), repeated in
    blocks; embeddings from a truncated SVD of Q at its numerical rank."""
    rng = np.random.default_rng(spec.seed)
    rows = rng.dirichlet(np.ones(spec.states), size=spec.classes)
    rows = np.maximum(rows, spec.row_floor)
    rows /= rows.sum(axis=1, keepdims=True)
    p = np.repeat(rows, spec.states // spec.classes, axis=0)

    pi = _stationary(p)
    q = np.log(p) - np.log(pi)[:, None]
    u, s, vt = np.linalg.svd(q, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * s[0]))
    if spec.dim is not None and rank > spec.dim:
        raise RankOverflow(
            f"log-ratio matrix has numerical rank {rank}, more than the "
            f"requested {spec.dim} dimensions"
        )
    scale = np.sqrt(s[:rank])
    context_emb = u[:, :rank] * scale
    output_emb = vt[:rank].T * scale
    return FactorizedChain(p, pi, context_emb, output_emb)


def sample_sequence(chain: FactorizedChain, n, seed) -> np.ndarray:
    """Length-n state sequence started from the stationary distribution."""
    if n < 1:
        raise ValueError("sequence length must be positive")
    rng = np.random.default_rng(seed)
    start = int(np.searchsorted(np.cumsum(chain.stationary), rng.random(), side="right"))
    start = min(start, chain.n_states - 1)
    if n == 1:
        return np.array([start], dtype=np.int64)
    uniforms = rng.random(n - 1)
    rest = kernels.markov_sample(chain.cum_rows(), start, uniforms)
    return np.concatenate(([start], rest))


@dataclass(frozen=True)
class LipschitzReport:
    """Worst slack of d_KL(P(.|c) || P(.|c')) - 2 L ||e_c - e_c'||_2 over all
    ordered state pairs; the geometry holds iff max_slack <= 0."""

    max_slack: float
    lipschitz: float
    pairs_checked: int


def check_lipschitz_logit(chain: FactorizedChain) -> LipschitzReport:
    p = chain.transition
    logp = chain.log_transition()
    h = (p * logp).sum(axis=1)
    kl_mat = h[:, None] - p @ logp.T
    e = chain.context_emb
    sq = (e * e).sum(axis=1)
    dist_sq = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (e @ e.T), 0.0)
    bound = 2.0 * chain.lipschitz * np.sqrt(dist_sq)
    slack = kl_mat - bound
    np.fill_diagonal(slack, -np.inf)
    n = chain.n_states
    return LipschitzReport(
        max_slack=float(slack.max()),
        lipschitz=chain.lipschitz,
        pairs_checked=n * (n - 1),
    )


@dataclass(frozen=True)
class SweepRow:
    n_train: int
    method: str
    m: int
    mean_ppl: float
    stderr_ppl: float


def _sweep_point(chain, finder_cfg, n_train, n_test, rep_seeds, m_grid, beta, rule,
                 discount, lam, include_baselines):
    table = finder_cfg["table"]
    score_beta = finder_cfg["score_beta"]
    support = finder_cfg["support"]
    prox = finder_cfg["prox"]
    ppls = {}
    for seed_train, seed_test in rep_seeds:
        train = sample_sequence(chain, n_train, seed_train)
        test = sample_sequence(chain, n_test, seed_test)
        counts = count_bigrams([train])
        seq = TestSequence([test])
        base = AddBetaModel(counts, chain.n_states, beta)
        finder = None
        models = {}
        for m in m_grid:
            if m == 0:
                models[("add_beta", 0)] = base
            else:
                if finder is None:
                    finder = SynonymFinder(table, counts, prox, beta=score_beta, support=support)
                models[("sem_add_beta", m)] = SemanticModel(base, finder, rule, m)
        if include_baselines:
            models[("kneser_ney", 0)] = KneserNeyModel(counts, chain.n_states, discount)
            models[("jelinek_mercer", 0)] = JelinekMercerModel(counts, chain.n_states, lam)
            models[("true", 0)] = chain.model()
        for key, model in models.items():
            ppls.setdefault(key, []).append(math.exp(log_perplexity(model, seq)))
    return ppls


def run_sweep(spec: MarkovSpec, n_train_grid, n_test, reps, m_grid, beta=1.0,
              rule: WeightRule | None = None, score_beta=1.0, support="chao1",
              discount=0.6, lam=0.5, include_baselines=True, threads=1) -> list[SweepRow]:
    """Perplexity-vs-training-size sweep on one generated chain.

    One chain per call (from spec.seed); repetitions re-sample the train and
    test sequences with sub-seeds spawned deterministically from spec.seed,
    so results do not depend on the thread count. Synonym proximity uses the
    certified KL surrogate 2 L ||e_c - e_c'||_2 from the factorization.
    """
    if rule is None:
        rule = WeightRule(phi="softmin", tau=1.0)
    chain = generate_chain(spec)
    prox = ProximityConfig(lipschitz=2.0 * chain.lipschitz, norm="l2")
    finder_cfg = {
        "table": chain.embedding_table(),
        "score_beta": score_beta,
        "support": support,
        "prox": prox,
    }
    seeds = np.random.SeedSequence(spec.seed).spawn(len(n_train_grid) * reps * 2)

    def point(gi):
        n_train = n_train_grid[gi]
        rep_seeds = [
            (seeds[2 * (gi * reps + r)], seeds[2 * (gi * reps + r) + 1])
            for r in range(reps)
        ]
        return _sweep_point(chain, finder_cfg, n_train, n_test, rep_seeds, m_grid,
                            beta, rule, discount, lam, include_baselines)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, range(len(n_train_grid))))
    else:
        results = [point(gi) for gi in range(len(n_train_grid))]

    rows = []
    for n_train, ppls in zip(n_train_grid, results):
        for (method, m), vals in sorted(ppls.items()):
            vals = np.asarray(vals)
            stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows.append(SweepRow(int(n_train), method, int(m), float(vals.mean()), stderr))
    rows.append(
        SweepRow(0, "entropy_bound", 0, math.exp(chain.conditional_entropy()), 0.0)
    )
    return rows
