"""Pure-Python (numpy) kernels: the fallback when the compiled core is absent.

Same call signatures and semantics as the compiled module; results agree
with it to floating-point reduction-order differences.
"""

import numpy as np

BACKEND_NAME = "py"

# Cap the (chunk, k, dims) distance temporary at roughly 32 MB.
_CHUNK_BUDGET = 4_000_000


def assign_clusters(X, C):
    """Nearest centroid per row: (labels, squared distances).

    Ties go to the lowest centroid index.
    """
    n, d = X.shape
    k = C.shape[0]
    labels = np.empty(n, dtype=np.int64)
    sqd = np.empty(n, dtype=np.float64)
    chunk = max(1, _CHUNK_BUDGET // max(1, k * d))
    for start in range(0, n, chunk):
        block = X[start : start + chunk]
        diff = block[:, None, :] - C[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        lab = np.argmin(dist, axis=1)  # first minimum: lowest index wins ties
        labels[start : start + chunk] = lab
        sqd[start : start + chunk] = dist[np.arange(len(block)), lab]
    return labels, sqd


def mean_pairwise_distance(X):
    """Mean Euclidean distance over all unordered row pairs."""
    m = X.shape[0]
    if m < 2:
        return 0.0
    total = 0.0
    for i in range(m - 1):
        diff = X[i + 1 :] - X[i]
        total += float(np.sqrt(np.einsum("ij,ij->i", diff, diff)).sum())
    return total / (m * (m - 1) / 2.0)


def svm_epoch(X, y, order, w, b, lam, t):
    """One pass of stochastic sub-gradient descent on the hinge objective.

    Visits samples in the given order with step size 1/(lam * t); updates
    w in place and returns (b, t) after the pass.
    """
    for i in order:
        t += 1
        eta = 1.0 / (lam * t)
        margin = y[i] * (X[i] @ w + b)
        w *= 1.0 - eta * lam
        if margin < 1.0:
            w += (eta * y[i]) * X[i]
            b += eta * y[i]
    return b, t
