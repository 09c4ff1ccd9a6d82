"""Kernel backend selection.

The hot numeric loops live in the compiled extension ``semsmooth._ckern``;
``semsmooth._pykern`` is a drop-in pure-Python/numpy fallback. The compiled
backend is used when importable unless ``SEMSMOOTH_PURE=1`` forces the
fallback. ``BACKEND`` names the active one ("c" or "python").
"""

import os

from semsmooth import _pykern

if os.environ.get("SEMSMOOTH_PURE"):
    _impl = _pykern
else:
    try:
        from semsmooth import _ckern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykern

BACKEND = _impl.BACKEND


def get_backend(name):
    """Return the kernel module named "c" or "python" (for tests/benchmarks)."""
    if name == "python":
        return _pykern
    if name == "c":
        from semsmooth import _ckern

        return _ckern
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from semsmooth import _ckern  # noqa: F401

        names.insert(0, "c")
    except ImportError:
        pass
    return names


neumaier_sum = _impl.neumaier_sum
sum_neg_log = _impl.sum_neg_log
kl_div = _impl.kl_div
entropy = _impl.entropy
sum_pairs_entropy = _impl.sum_pairs_entropy
sum_pairs_kl = _impl.sum_pairs_kl
markov_sample = _impl.markov_sample
dist_to_rows = _impl.dist_to_rows
