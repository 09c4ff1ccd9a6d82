"""Per-context distribution estimators: empirical, add-beta, variable
add-constant, Kneser-Ney and Jelinek-Mercer.

The low-level operations work on count vectors / a CountTable and return a
ProbDist over the full vocabulary alphabet. The *Model classes wrap a
CountTable as a cached ``context id -> ProbDist`` callable for evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from semsmooth.corpus import CountTable
from semsmooth.prob import ProbDist

# Krichevsky-Trofimov constant: beta_r = 1/2 for every count r.
DEFAULT_BETA_R = np.array([0.5])


class UnseenContext(Exception):
    """Conditional estimate requested for a context with no training
    occurrences; the caller must back off."""


def _check_beta_r(table):
    table = np.ascontiguousarray(table, dtype=np.float64)
    if table.ndim != 1 or table.size == 0:
        raise ValueError("beta_r table must be a nonempty 1-d array")
    if np.any(table < 0.5):
        raise ValueError("beta_r entries must be >= 1/2")
    return table


def add_beta(counts, n, d, beta) -> ProbDist:
    """p_i = (N_i + beta) / (n + beta d); strictly positive over all d symbols."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (d,):
        raise ValueError("counts must have length d")
    if n != int(round(counts.sum())):
        raise ValueError("n must equal the total count")
    p = (counts + beta) / (n + beta * d)
    return ProbDist.from_dense(p)


def variable_add_constant(counts, n, d, beta_r=None) -> ProbDist:
    """p_i proportional to N_i + beta_{N_i}.

    ``beta_r`` maps a count r to its add-constant, given as an array indexed
    by r (counts past the end reuse the last entry). The default is the
    constant-1/2 table. Entries must be >= 1/2 and their realized sum must
    not exceed d.
    """
    table = DEFAULT_BETA_R if beta_r is None else _check_beta_r(beta_r)
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (d,):
        raise ValueError("counts must have length d")
    if n != int(counts.sum()):
        raise ValueError("n must equal the total count")
    betas = table[np.minimum(counts, table.size - 1)]
    gamma = betas.sum()
    if gamma > d * (1 + 1e-12):
        raise ValueError("sum of add-constants exceeds the alphabet size")
    p = (counts + betas) / (n + gamma)
    return ProbDist.from_dense(p)


def continuation_probs(table: CountTable, d) -> np.ndarray:
    """P_cont(w) = N1+(.,w) / N1+(.,.), dense over the alphabet."""
    total = table.total_distinct
    if total == 0:
        raise UnseenContext("empty count table has no continuation distribution")
    return table.predecessor_counts(d) / total


def kneser_ney(table: CountTable, c, discount, d) -> ProbDist:
    """Absolute discounting with continuation backoff:

        p(w|c) = max(N_{c,w} - D, 0)/N_c + lambda_c P_cont(w),
        lambda_c = D N1+(c,.)/N_c,  P_cont(w) = N1+(.,w)/N1+(.,.).
    """
    if not 0 <= discount <= 1:
        raise ValueError("discount must be in [0, 1]")
    ids, cnts = table.row(c)
    if ids.size == 0:
        raise UnseenContext(c)
    n_c = int(cnts.sum())
    lam = discount * ids.size / n_c
    p = lam * continuation_probs(table, d)
    p[ids] += np.maximum(cnts - discount, 0.0) / n_c
    return ProbDist.from_dense(p)


def jelinek_mercer(table: CountTable, c, lam, d, unigram_beta=0.0) -> ProbDist:
    """lam * empirical(w|c) + (1 - lam) * unigram(w).

    The unigram component is the successor marginal of the bigram counts,
    optionally add-``unigram_beta`` smoothed (0 keeps it purely empirical).
    """
    if not 0 <= lam <= 1:
        raise ValueError("lam must be in [0, 1]")
    marg = table.successor_marginal(d).astype(np.float64)
    total = marg.sum()
    uni = (marg + unigram_beta) / (total + unigram_beta * d)
    if lam == 0:
        return ProbDist.from_dense(uni)
    ids, cnts = table.row(c)
    if ids.size == 0:
        raise UnseenContext(c)
    p = (1.0 - lam) * uni
    p[ids] += lam * cnts / cnts.sum()
    return ProbDist.from_dense(p)


def empirical(table: CountTable, c) -> ProbDist:
    """Raw conditional N_{c,w}/N_c, supported on the seen successors only."""
    ids, cnts = table.row(c)
    if ids.size == 0:
        raise UnseenContext(c)
    return ProbDist(ids, cnts / cnts.sum())


SMOOTHER_KINDS = ("empirical", "add_beta", "variable_add_constant", "kneser_ney", "jelinek_mercer")


@dataclass
class SmootherConfig:
    """Which estimator to use and its parameters; exactly one kind active."""

    kind: str = "add_beta"
    beta: float = 1.0
    discount: float = 0.6
    lam: float = 0.5
    beta_r: np.ndarray | None = None
    unigram_beta: float = 0.0

    def __post_init__(self):
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if self.kind == "add_beta" and self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.kind == "kneser_ney" and not 0 <= self.discount <= 1:
            raise ValueError("discount must be in [0, 1]")
        if self.kind == "jelinek_mercer" and not 0 <= self.lam <= 1:
            raise ValueError("lam must be in [0, 1]")
        if self.beta_r is not None:
            self.beta_r = _check_beta_r(self.beta_r)

    def build_model(self, table: CountTable, d):
        if self.kind == "empirical":
            return EmpiricalModel(table)
        if self.kind == "add_beta":
            return AddBetaModel(table, d, self.beta)
        if self.kind == "variable_add_constant":
            return VariableAddConstantModel(table, d, self.beta_r)
        if self.kind == "kneser_ney":
            return KneserNeyModel(table, d, self.discount)
        return JelinekMercerModel(table, d, self.lam, self.unigram_beta)

    def to_manifest(self):
        out = {"kind": self.kind}
        if self.kind == "add_beta":
            out["beta"] = self.beta
        elif self.kind == "variable_add_constant":
            out["beta_r"] = None if self.beta_r is None else list(map(float, self.beta_r))
        elif self.kind == "kneser_ney":
            out["discount"] = self.discount
        elif self.kind == "jelinek_mercer":
            out["lam"] = self.lam
            out["unigram_beta"] = self.unigram_beta
        return out


class _CachedModel:
    """context id -> ProbDist with per-context memoization."""

    def __init__(self, table: CountTable, d):
        self.table = table
        self.d = d
        self._support = np.arange(d, dtype=np.int64)
        self._cache = {}

    def _dense_row(self, c):
        row = np.zeros(self.d, dtype=np.float64)
        ids, cnts = self.table.row(c)
        row[ids] = cnts
        return row, int(cnts.sum())

    def __call__(self, c) -> ProbDist:
        c = int(c)
        dist = self._cache.get(c)
        if dist is None:
            dist = self._dist(c)
            self._cache[c] = dist
        return dist


class AddBetaModel(_CachedModel):
    def __init__(self, table, d, beta):
        super().__init__(table, d)
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.beta = beta

    def _dist(self, c):
        row, n = self._dense_row(c)
        p = (row + self.beta) / (n + self.beta * self.d)
        return ProbDist(self._support, p, validate=False)


class VariableAddConstantModel(_CachedModel):
    def __init__(self, table, d, beta_r=None):
        super().__init__(table, d)
        self.beta_r = DEFAULT_BETA_R if beta_r is None else _check_beta_r(beta_r)

    def _dist(self, c):
        row, n = self._dense_row(c)
        betas = self.beta_r[np.minimum(row.astype(np.int64), self.beta_r.size - 1)]
        gamma = betas.sum()
        if gamma > self.d * (1 + 1e-12):
            raise ValueError("sum of add-constants exceeds the alphabet size")
        return ProbDist(self._support, (row + betas) / (n + gamma), validate=False)


class KneserNeyModel(_CachedModel):
    """Kneser-Ney conditional; unseen contexts back off to P_cont."""

    def __init__(self, table, d, discount=0.6):
        super().__init__(table, d)
        if not 0 <= discount <= 1:
            raise ValueError("discount must be in [0, 1]")
        self.discount = discount
        self._cont = None

    def continuation(self) -> ProbDist:
        if self._cont is None:
            self._cont = ProbDist(self._support, continuation_probs(self.table, self.d))
        return self._cont

    def _dist(self, c):
        try:
            return kneser_ney(self.table, c, self.discount, self.d)
        except UnseenContext:
            return self.continuation()


class JelinekMercerModel(_CachedModel):
    """Jelinek-Mercer mixture; unseen contexts fall back to the unigram."""

    def __init__(self, table, d, lam=0.5, unigram_beta=0.0):
        super().__init__(table, d)
        if not 0 <= lam <= 1:
            raise ValueError("lam must be in [0, 1]")
        self.lam = lam
        self.unigram_beta = unigram_beta

    def _dist(self, c):
        try:
            return jelinek_mercer(self.table, c, self.lam, self.d, self.unigram_beta)
        except UnseenContext:
            return jelinek_mercer(self.table, c, 0.0, self.d, self.unigram_beta)


class EmpiricalModel(_CachedModel):
    """Raw conditional frequencies; raises UnseenContext with no fallback."""

    def __init__(self, table):
        super().__init__(table, 0)

    def _dist(self, c):
        return empirical(self.table, c)


class MatrixModel:
    """Model backed by a dense row-stochastic matrix (synthetic chains)."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self._support = np.arange(self.matrix.shape[1], dtype=np.int64)
        self._cache = {}

    def __call__(self, c) -> ProbDist:
        c = int(c)
        dist = self._cache.get(c)
        if dist is None:
            dist = ProbDist(self._support, self.matrix[c], validate=False)
            self._cache[c] = dist
        return dist
