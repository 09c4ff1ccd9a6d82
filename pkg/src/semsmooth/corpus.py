"""Text ingestion: preprocessing, vocabulary and bigram count extraction.

The preprocessing pipeline lowercases, replaces numbers/URLs with sentinel
tokens, strips bracketed reference markers, non-ASCII bytes and punctuation,
normalizes whitespace, splits sentences, and pads each sentence with
``<bos>``/``<eos>``. It is idempotent at the token level: feeding its own
joined output back through produces the same sentences.
"""

from __future__ import annotations

import re

import numpy as np

BOS = "<bos>"
EOS = "<eos>"
NUM = "<num>"
URL = "<url>"
SENTINELS = (BOS, EOS, NUM, URL)

# private marks protecting sentinel tokens through punctuation removal
_MARK_NUM = "\x01"
_MARK_URL = "\x02"
_MARK_EOS = "\x03"
_MARK_BOS = "\x04"

_REF_RE = re.compile(r"\[[^\[\]]*\]")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_NUM_RE = re.compile(r"\d+(?:[.,]\d+)*")
_SPLIT_RE = re.compile(f"[.!?\n{_MARK_EOS}{_MARK_BOS}]+")
_NON_ASCII_RE = re.compile(r"[^\x00-\x7f]+")
_PUNCT_RE = re.compile(f"[^a-z\\s{_MARK_NUM}{_MARK_URL}]+")


class CountFileError(ValueError):
    """Malformed count file; the message names the offending line."""


def preprocess(raw_text: str) -> list[list[str]]:
    """Normalize raw text into sentences of tokens wrapped with <bos>/<eos>."""
    text = raw_text.lower()
    text = text.replace(NUM, _MARK_NUM).replace(URL, _MARK_URL)
    text = text.replace(EOS, _MARK_EOS).replace(BOS, _MARK_BOS)
    text = _REF_RE.sub(" ", text)
    text = _URL_RE.sub(f" {_MARK_URL} ", text)
    text = _NUM_RE.sub(f" {_MARK_NUM} ", text)
    sentences = []
    for chunk in _SPLIT_RE.split(text):
        chunk = _NON_ASCII_RE.sub("", chunk)
        chunk = _PUNCT_RE.sub(" ", chunk)
        tokens = chunk.split()
        if not tokens:
            continue
        words = [NUM if t == _MARK_NUM else URL if t == _MARK_URL else t for t in tokens]
        sentences.append([BOS, *words, EOS])
    return sentences


def join_sentences(sentences) -> str:
    """Inverse-ish of preprocess: one sentence per line, space-separated."""
    return "\n".join(" ".join(s) for s in sentences)


class Vocabulary:
    """Bijection between token strings and dense integer ids.

    The four sentinel tokens always occupy ids 0..3. Built from the union
    of the training and test sentences.
    """

    def __init__(self):
        self._id = {}
        self._tokens = []
        for t in SENTINELS:
            self.add(t)

    @classmethod
    def from_sentences(cls, *sentence_sets):
        vocab = cls()
        for sentences in sentence_sets:
            for sent in sentences:
                for tok in sent:
                    vocab.add(tok)
        return vocab

    def add(self, token) -> int:
        i = self._id.get(token)
        if i is None:
            i = len(self._tokens)
            self._id[token] = i
            self._tokens.append(token)
        return i

    def id(self, token) -> int:
        try:
            return self._id[token]
        except KeyError:
            raise KeyError(f"token not in vocabulary: {token!r}") from None

    def token(self, i) -> str:
        return self._tokens[i]

    @property
    def tokens(self):
        return list(self._tokens)

    def encode(self, sentence):
        return [self.id(t) for t in sentence]

    def encode_all(self, sentences):
        return [self.encode(s) for s in sentences]

    def __contains__(self, token):
        return token in self._id

    def __len__(self):
        return len(self._tokens)


class CountTable:
    """Bigram sufficient statistics over token ids.

    Holds N_{c,w}, the per-context totals N_c = sum_w N_{c,w}, and the
    continuation quantities: distinct successors per context N1+(c,.),
    distinct predecessors per word N1+(.,w) and their total N1+(.,.).
    Immutable after construction.
    """

    def __init__(self, pair_ctx, pair_wrd, pair_counts):
        pair_ctx = np.ascontiguousarray(pair_ctx, dtype=np.int64)
        pair_wrd = np.ascontiguousarray(pair_wrd, dtype=np.int64)
        pair_counts = np.ascontiguousarray(pair_counts, dtype=np.int64)
        if np.any(pair_counts <= 0):
            raise ValueError("pair counts must be positive")
        order = np.lexsort((pair_wrd, pair_ctx))
        self._ctx = pair_ctx[order]
        self._wrd = pair_wrd[order]
        self._cnt = pair_counts[order]
        self._contexts, starts = np.unique(self._ctx, return_index=True)
        self._bounds = np.append(starts, self._ctx.size)
        self._ctx_pos = {int(c): i for i, c in enumerate(self._contexts)}
        self._n_c = np.add.reduceat(self._cnt, starts) if self._ctx.size else np.array([], dtype=np.int64)
        self._pred_words, self._pred_counts = np.unique(self._wrd, return_counts=True)

    @classmethod
    def empty(cls):
        z = np.array([], dtype=np.int64)
        return cls(z, z, z)

    @property
    def total_events(self) -> int:
        return int(self._cnt.sum())

    @property
    def total_distinct(self) -> int:
        """N1+(.,.) -- number of distinct bigrams."""
        return self._ctx.size

    def contexts(self):
        return self._contexts

    def row(self, c):
        """(successor ids, counts) for context c; empty arrays if unseen."""
        i = self._ctx_pos.get(int(c))
        if i is None:
            z = np.array([], dtype=np.int64)
            return z, z
        a, b = self._bounds[i], self._bounds[i + 1]
        return self._wrd[a:b], self._cnt[a:b]

    def n_context(self, c) -> int:
        i = self._ctx_pos.get(int(c))
        return int(self._n_c[i]) if i is not None else 0

    def count(self, c, w) -> int:
        ids, cnt = self.row(c)
        j = np.searchsorted(ids, w)
        if j < ids.size and ids[j] == w:
            return int(cnt[j])
        return 0

    def distinct_successors(self, c) -> int:
        """N1+(c,.)"""
        i = self._ctx_pos.get(int(c))
        if i is None:
            return 0
        return int(self._bounds[i + 1] - self._bounds[i])

    def distinct_predecessors(self, w) -> int:
        """N1+(.,w)"""
        j = np.searchsorted(self._pred_words, w)
        if j < self._pred_words.size and self._pred_words[j] == w:
            return int(self._pred_counts[j])
        return 0

    def predecessor_counts(self, d):
        """Dense length-d vector of N1+(.,w)."""
        out = np.zeros(d, dtype=np.int64)
        out[self._pred_words] = self._pred_counts
        return out

    def successor_marginal(self, d):
        """Dense length-d vector of sum_c N_{c,w}."""
        out = np.zeros(d, dtype=np.int64)
        np.add.at(out, self._wrd, self._cnt)
        return out

    def pairs(self):
        """(context ids, word ids, counts), sorted by (context, word)."""
        return self._ctx, self._wrd, self._cnt

    def add(self, other: "CountTable") -> "CountTable":
        """Entrywise sum of two tables (deterministic parallel merge)."""
        ctx = np.concatenate([self._ctx, other._ctx])
        wrd = np.concatenate([self._wrd, other._wrd])
        cnt = np.concatenate([self._cnt, other._cnt])
        k = int(wrd.max()) + 1 if wrd.size else 1
        keys = ctx * k + wrd
        ukeys, inv = np.unique(keys, return_inverse=True)
        merged = np.zeros(ukeys.size, dtype=np.int64)
        np.add.at(merged, inv, cnt)
        return CountTable(ukeys // k, ukeys - (ukeys // k) * k, merged)

    def __eq__(self, other):
        return (
            isinstance(other, CountTable)
            and np.array_equal(self._ctx, other._ctx)
            and np.array_equal(self._wrd, other._wrd)
            and np.array_equal(self._cnt, other._cnt)
        )


def count_bigrams(sentences) -> CountTable:
    """Count consecutive pairs inside each sentence; no cross-sentence pairs."""
    ctx_parts = []
    wrd_parts = []
    for sent in sentences:
        arr = np.asarray(sent, dtype=np.int64)
        if arr.size > 1:
            ctx_parts.append(arr[:-1])
            wrd_parts.append(arr[1:])
    if not ctx_parts:
        return CountTable.empty()
    ctx = np.concatenate(ctx_parts)
    wrd = np.concatenate(wrd_parts)
    k = int(wrd.max()) + 1
    keys = ctx * k + wrd
    ukeys, counts = np.unique(keys, return_counts=True)
    return CountTable(ukeys // k, ukeys - (ukeys // k) * k, counts)


COUNTS_HEADER = "#semsmooth-counts v1"


def save_counts(table: CountTable, vocab: Vocabulary, path) -> None:
    """Write TSV `context_token<TAB>word_token<TAB>count`, lexicographically."""
    ctx, wrd, cnt = table.pairs()
    lines = sorted(
        (vocab.token(int(c)), vocab.token(int(w)), int(n))
        for c, w, n in zip(ctx, wrd, cnt)
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(COUNTS_HEADER + "\n")
        for c, w, n in lines:
            f.write(f"{c}\t{w}\t{n}\n")


def load_counts(path, vocab: Vocabulary | None = None):
    """Read a count file; returns (table, vocab). Unknown tokens are added."""
    if vocab is None:
        vocab = Vocabulary()
    ctx, wrd, cnt = [], [], []
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != COUNTS_HEADER:
            raise CountFileError(f"{path}: line 1: expected header {COUNTS_HEADER!r}")
        for ln, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CountFileError(f"{path}: line {ln}: expected 3 tab-separated fields")
            try:
                n = int(parts[2])
            except ValueError:
                raise CountFileError(f"{path}: line {ln}: count is not an integer") from None
            if n <= 0:
                raise CountFileError(f"{path}: line {ln}: count must be positive")
            ctx.append(vocab.add(parts[0]))
            wrd.append(vocab.add(parts[1]))
            cnt.append(n)
    if not ctx:
        return CountTable.empty(), vocab
    return CountTable(np.array(ctx), np.array(wrd), np.array(cnt)), vocab
