"""Pure-Python/numpy implementations of the numeric kernels.

Fallback for :mod:`semsmooth._ckern`; selected by :mod:`semsmooth.kernels`
when the compiled extension is unavailable or ``SEMSMOOTH_PURE=1`` is set.
Summations are error-compensated (``math.fsum``) to match the compiled
Neumaier accumulation at the tolerances the library guarantees.
"""

import math
from bisect import bisect_right

import numpy as np

BACKEND = "python"


def neumaier_sum(x):
    """Compensated sum of a 1-d float64 array."""
    return math.fsum(np.asarray(x, dtype=np.float64))


def sum_neg_log(p):
    """-sum(log p_i); +inf as soon as any p_i <= 0."""
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0:
        return 0.0
    if np.any(p <= 0.0):
        return math.inf
    return -math.fsum(np.log(p))


def kl_div(p, q):
    """sum p_i log(p_i/q_i) over p_i > 0; +inf when some q_i = 0 < p_i."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = p > 0.0
    pm = p[m]
    qm = q[m]
    if np.any(qm <= 0.0):
        return math.inf
    return math.fsum(pm * np.log(pm / qm))


def entropy(p):
    """-sum p_i log p_i with the 0 log 0 = 0 convention."""
    p = np.asarray(p, dtype=np.float64)
    pm = p[p > 0.0]
    if pm.size == 0:
        return 0.0
    return -math.fsum(pm * np.log(pm))


def sum_pairs_entropy(counts, ctx_tot):
    """sum N_cw log(N_cw / N_c) over observed (context, word) pairs."""
    c = np.asarray(counts, dtype=np.float64)
    t = np.asarray(ctx_tot, dtype=np.float64)
    return math.fsum(c * np.log(c / t))


def sum_pairs_kl(counts, ctx_tot, q):
    """sum N_cw (log(N_cw/N_c) - log q_cw); +inf when some q_cw = 0."""
    c = np.asarray(counts, dtype=np.float64)
    t = np.asarray(ctx_tot, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any(q <= 0.0):
        return math.inf
    return math.fsum(c * (np.log(c / t) - np.log(q)))


def markov_sample(cum_rows, start, uniforms):
    """Walk a chain given per-state inclusive-cumulative transition rows.

    Returns the int64 states visited after each of the len(uniforms) steps.
    """
    rows = [row.tolist() for row in np.asarray(cum_rows, dtype=np.float64)]
    last = len(rows[0]) - 1
    out = np.empty(len(uniforms), dtype=np.int64)
    s = int(start)
    for i, u in enumerate(np.asarray(uniforms, dtype=np.float64).tolist()):
        j = bisect_right(rows[s], u)
        s = j if j < last else last
        out[i] = s
    return out


def dist_to_rows(query, rows, norm):
    """Distances from one vector to every row of a matrix (norm: 1 or 2)."""
    q = np.asarray(query, dtype=np.float64)
    m = np.asarray(rows, dtype=np.float64)
    out = np.empty(m.shape[0], dtype=np.float64)
    # chunked to bound the temporary (rows - q) allocation
    step = max(1, (1 << 22) // max(1, m.shape[1]))
    for i in range(0, m.shape[0], step):
        d = m[i : i + step] - q
        if norm == 1:
            out[i : i + step] = np.abs(d).sum(axis=1)
        else:
            out[i : i + step] = np.sqrt((d * d).sum(axis=1))
    return out
