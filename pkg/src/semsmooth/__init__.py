"""Semantic smoothing for bigram language models.

Distribution estimation under KL loss with embedding-derived side
information, a synthetic Lipschitz-logit Markov testbed, and a Monte Carlo
risk lab checking the estimator risk bounds.
"""

__version__ = "0.1.0"

from semsmooth.prob import (  # noqa: F401
    DecompositionReport,
    ProbDist,
    TestSequence,
    decompose,
    entropy,
    kl_divergence,
    log_perplexity,
    perplexity,
)
