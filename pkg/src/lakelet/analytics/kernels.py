"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise
the numpy fallback takes over. Set LAKELET_KERNELS=py or =c to force a
backend (forcing c raises if the extension is missing, rather than
silently running the slow path).
"""

import os

import numpy as np

from . import _pykernels

_requested = os.environ.get("LAKELET_KERNELS", "").strip().lower()

if _requested in ("", "c"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _requested == "c":
            raise
        _impl = _pykernels
else:
    if _requested not in ("py", "python"):
        raise ValueError(f"LAKELET_KERNELS must be 'c' or 'py', not {_requested!r}")
    _impl = _pykernels

BACKEND = _impl.BACKEND_NAME


def available_backends() -> dict:
    """Importable backend modules by name (for tests and benchmarks)."""
    backends = {"py": _pykernels}
    try:
        from . import _ckernels

        backends["c"] = _ckernels
    except ImportError:
        pass
    return backends


def _matrix(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def assign_clusters(X, C, impl=None):
    """Nearest-centroid labels and squared distances; ties to lowest index."""
    return (impl or _impl).assign_clusters(_matrix(X), _matrix(C))


def mean_pairwise_distance(X, impl=None):
    """Mean Euclidean distance over all unordered row pairs."""
    return (impl or _impl).mean_pairwise_distance(_matrix(X))


def svm_epoch(X, y, order, w, b, lam, t, impl=None):
    """One in-place stochastic sub-gradient epoch; returns (b, t).

    X, y, w must be float64 (X C-contiguous); order is an int64 index
    permutation. w is updated in place.
    """
    return (impl or _impl).svm_epoch(X, y, order, w, b, lam, t)
