"""Embedding tables, embedding-space proximity, support-size estimation and
nearest-synonym selection.

Proximity between contexts is Delta = L * ||e_c - e_c'||_norm + 4*eps: a
KL-divergence surrogate justified by the Lipschitz-logit assumption on the
generating process. Synonyms for a context are the m candidates minimizing
Delta + log(1 + beta * d_hat/n), candidates being every embedded context
with at least one training occurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from semsmooth import kernels
from semsmooth.corpus import CountTable


class MissingEmbedding(KeyError):
    """Token has no embedding; semantic smoothing is skipped for it."""


class EmbeddingFormatError(ValueError):
    """Malformed embedding file; the message names the offending line."""


class EmptyTable(EmbeddingFormatError):
    """Embedding file contained no vectors."""


class EmbeddingTable:
    """token -> fixed-dimension float64 vector, with a missing-token policy
    ("skip": callers silently skip smoothing, "error": raise)."""

    def __init__(self, vectors: dict, dim=None, duplicates=0, missing_policy="skip"):
        if missing_policy not in ("skip", "error"):
            raise ValueError("missing_policy must be 'skip' or 'error'")
        self._vectors = {}
        for token, vec in vectors.items():
            arr = np.ascontiguousarray(vec, dtype=np.float64)
            if dim is None:
                dim = arr.size
            if arr.shape != (dim,):
                raise ValueError(f"vector for {token!r} has dimension {arr.size}, expected {dim}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"vector for {token!r} has non-finite components")
            self._vectors[token] = arr
        if not self._vectors:
            raise EmptyTable("no vectors")
        self.dim = dim
        self.duplicates = duplicates
        self.missing_policy = missing_policy

    def vector(self, token) -> np.ndarray:
        try:
            return self._vectors[token]
        except KeyError:
            raise MissingEmbedding(token) from None

    def get(self, token):
        return self._vectors.get(token)

    def __contains__(self, token):
        return token in self._vectors

    def __len__(self):
        return len(self._vectors)

    def tokens(self):
        return list(self._vectors)


def load_embeddings(path, fmt="glove_text", missing_policy="skip") -> EmbeddingTable:
    """Parse a text embedding file.

    glove_text: one `token v1 ... vt` line per token.
    word2vec_text: identical, preceded by a `count dim` header line.
    Duplicate tokens keep the last vector; the count is reported on the table.
    """
    if fmt not in ("glove_text", "word2vec_text"):
        raise ValueError(f"unknown embedding format {fmt!r}")
    vectors = {}
    duplicates = 0
    dim = None
    with open(path, encoding="utf-8") as f:
        start = 1
        if fmt == "word2vec_text":
            header = f.readline().split()
            start = 2
            if len(header) != 2:
                raise EmbeddingFormatError(f"{path}: line 1: expected `count dim` header")
            try:
                dim = int(header[1])
            except ValueError:
                raise EmbeddingFormatError(f"{path}: line 1: non-integer header field") from None
        for ln, line in enumerate(f, start=start):
            parts = line.split()
            if not parts:
                continue
            token, fields = parts[0], parts[1:]
            if dim is None:
                dim = len(fields)
                if dim == 0:
                    raise EmbeddingFormatError(f"{path}: line {ln}: no vector components")
            if len(fields) != dim:
                raise EmbeddingFormatError(
                    f"{path}: line {ln}: expected {dim} components, got {len(fields)}"
                )
            try:
                vec = np.array(fields, dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}: line {ln}: non-numeric field") from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"{path}: line {ln}: non-finite component")
            if token in vectors:
                duplicates += 1
            vectors[token] = vec
    if not vectors:
        raise EmptyTable(f"{path}: no vectors")
    return EmbeddingTable(vectors, dim=dim, duplicates=duplicates, missing_policy=missing_policy)


@dataclass(frozen=True)
class ProximityConfig:
    """Lipschitz constant, norm and logit slack for the Delta surrogate."""

    lipschitz: float = 5.0
    norm: str = "l1"
    epsilon: float = 0.0

    def __post_init__(self):
        if self.lipschitz <= 0:
            raise ValueError("Lipschitz constant must be positive")
        if self.norm not in ("l1", "l2"):
            raise ValueError("norm must be 'l1' or 'l2'")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


def _norm_code(norm):
    return 1 if norm == "l1" else 2


def proximity(a, b, table: EmbeddingTable, cfg: ProximityConfig) -> float:
    """Delta(a, b) = L * ||e_a - e_b|| + 4 eps; symmetric, nonnegative."""
    diff = table.vector(a) - table.vector(b)
    dist = float(np.abs(diff).sum()) if cfg.norm == "l1" else float(np.sqrt(diff @ diff))
    return cfg.lipschitz * dist + 4.0 * cfg.epsilon


def estimate_support(successor_counts, method="chao1") -> int:
    """Estimated number of distinct possible successors.

    "distinct" returns the observed count; "chao1" adds the f1^2/(2 f2)
    singleton/doubleton correction (f1(f1-1)/2 when there are no
    doubletons). Always >= the observed distinct count, and >= 1.
    """
    counts = np.asarray(successor_counts)
    counts = counts[counts > 0]
    obs = counts.size
    if obs == 0:
        return 1
    if method == "distinct":
        return obs
    if method != "chao1":
        raise ValueError(f"unknown support estimator {method!r}")
    f1 = int(np.sum(counts == 1))
    f2 = int(np.sum(counts == 2))
    if f2 > 0:
        extra = f1 * f1 / (2.0 * f2)
    else:
        extra = f1 * (f1 - 1) / 2.0
    return obs + math.ceil(extra)


@dataclass(frozen=True)
class Synonym:
    """One selected neighbor context with its proximity and loss proxy."""

    context: int
    delta: float
    proxy: float
    weight: float | None = None


@dataclass(frozen=True)
class SynonymSet:
    """Selected synonyms for a context, sorted by ascending loss proxy."""

    context: int
    synonyms: tuple
    self_proxy: float
    m: int


class SynonymFinder:
    """Exact nearest-synonym search over every embedded context with
    training occurrences.

    The scan is a vectorized linear pass over the candidate matrix (chunked
    or compiled, depending on the kernel backend); results are identical to
    a per-candidate loop. Per-context score orders are cached so selections
    for increasing m are prefixes of each other.
    """

    def __init__(self, table: EmbeddingTable, counts: CountTable, cfg: ProximityConfig,
                 beta=0.005, support="chao1", id_to_token=None):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.table = table
        self.counts = counts
        self.cfg = cfg
        self.beta = beta
        self.support_method = support
        self.id_to_token = id_to_token
        self.log_penalty = max(math.log(1.0 / beta), 0.0)

        cand = []
        for c in counts.contexts():
            c = int(c)
            if self._token(c) in table:
                cand.append(c)
        self.candidates = np.array(sorted(cand), dtype=np.int64)
        if self.candidates.size:
            self._matrix = np.ascontiguousarray(
                np.stack([table.vector(self._token(c)) for c in self.candidates])
            )
            n = np.array([counts.n_context(c) for c in self.candidates], dtype=np.float64)
            dhat = np.array(
                [estimate_support(counts.row(c)[1], self.support_method) for c in self.candidates],
                dtype=np.float64,
            )
            self._count_term = np.log1p(beta * dhat / n)
        else:
            self._matrix = np.zeros((0, table.dim))
            self._count_term = np.zeros(0)
        self._order_cache = {}

    def _token(self, c):
        return self.id_to_token[c] if self.id_to_token is not None else c

    def self_proxy(self, c) -> float:
        """(d_hat_c - 1) / (2 n_c); +inf for a context never seen in training."""
        n_c = self.counts.n_context(c)
        if n_c == 0:
            return math.inf
        dhat = estimate_support(self.counts.row(c)[1], self.support_method)
        return (dhat - 1) / (2.0 * n_c)

    def _ranked(self, c):
        cached = self._order_cache.get(c)
        if cached is None:
            vec = self.table.vector(self._token(c))
            deltas = (
                self.cfg.lipschitz
                * kernels.dist_to_rows(vec, self._matrix, _norm_code(self.cfg.norm))
                + 4.0 * self.cfg.epsilon
            )
            scores = deltas + self._count_term
            # candidates are id-sorted, so a stable sort breaks ties by id
            order = np.argsort(scores, kind="stable")
            cached = (deltas, scores, order)
            self._order_cache[c] = cached
        return cached

    def select(self, c, m) -> SynonymSet:
        """The m best-scoring synonym contexts for c (c itself excluded)."""
        if m < 0:
            raise ValueError("m must be nonnegative")
        c = int(c)
        self_proxy = self.self_proxy(c)
        if m == 0:
            return SynonymSet(c, (), self_proxy, 0)
        if self._token(c) not in self.table:
            if self.table.missing_policy == "error":
                raise MissingEmbedding(self._token(c))
            return SynonymSet(c, (), self_proxy, m)
        deltas, scores, order = self._ranked(c)
        chosen = []
        for i in order:
            cand = int(self.candidates[i])
            if cand == c:
                continue
            chosen.append(
                Synonym(cand, float(deltas[i]), float(scores[i] + self.log_penalty))
            )
            if len(chosen) == m:
                break
        return SynonymSet(c, tuple(chosen), self_proxy, m)

    def dump_cache(self, contexts, m, path):
        """Write `context<TAB>synonym<TAB>delta<TAB>score` rows (token form)."""
        with open(path, "w", encoding="utf-8") as f:
            for c in contexts:
                synset = self.select(int(c), m)
                for syn in synset.synonyms:
                    score = syn.proxy - self.log_penalty
                    f.write(
                        f"{self._token(synset.context)}\t{self._token(syn.context)}"
                        f"\t{syn.delta:.12g}\t{score:.12g}\n"
                    )


def select_synonyms(c, m, table, counts, cfg, beta=0.005, support="chao1",
                    id_to_token=None) -> SynonymSet:
    """One-shot synonym selection (builds a finder; use SynonymFinder to
    amortize over many contexts)."""
    finder = SynonymFinder(table, counts, cfg, beta=beta, support=support,
                           id_to_token=id_to_token)
    return finder.select(c, m)


def read_synonym_cache(path):
    """Parse a dump_cache file back into {context: [(synonym, delta, score)]}."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise EmbeddingFormatError(f"{path}: line {ln}: expected 4 fields")
            out.setdefault(parts[0], []).append((parts[1], float(parts[2]), float(parts[3])))
    return out
