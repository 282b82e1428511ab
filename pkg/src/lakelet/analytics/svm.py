"""Per-cluster outcome models: soft-margin linear SVM with a 90% gate.

Training is seeded stochastic sub-gradient descent on the L2-regularized
hinge objective with step size 1/(lambda * t). The objective is evaluated
after every epoch and the best iterate is kept, so the reported model
never regresses even though individual stochastic steps may. A model may
only drive recommendations once its holdout accuracy reaches the
certification threshold.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import EmptyHoldout, SingleClass
from . import kernels

CERTIFICATION_THRESHOLD = 0.90


@dataclass(frozen=True)
class OutcomeModel:
    cluster_index: int
    weights: np.ndarray
    bias: float
    holdout_accuracy: float = 0.0
    certified: bool = False


def canonical_labels(labels) -> np.ndarray:
    """Map {0,1} or {-1,+1} labels to float -1/+1; both classes required."""
    y = np.asarray(labels)
    values = set(np.unique(y).tolist())
    if values == {0, 1}:
        y = np.where(y == 0, -1.0, 1.0)
    elif values == {-1, 1}:
        y = y.astype(np.float64)
    elif len(values) == 1:
        raise SingleClass(f"only one label present: {values}")
    else:
        raise ValueError(f"labels must be binary, got {sorted(values)}")
    return y


def hinge_objective(w, b, X, y, lam: float) -> float:
    margins = y * (X @ w + b)
    return float(lam / 2.0 * np.dot(w, w) + np.maximum(0.0, 1.0 - margins).mean())


def hinge_subgradient(w, b, X, y, lam: float):
    """Analytic sub-gradient of hinge_objective at (w, b)."""
    margins = y * (X @ w + b)
    violated = margins < 1.0
    n = X.shape[0]
    gw = lam * w - (y[violated, None] * X[violated]).sum(axis=0) / n
    gb = -float(y[violated].sum()) / n
    return gw, gb


def train_svm(features, labels, lam: float = 1e-3, epochs: int = 50, seed: int = 0):
    """Fit (weights, bias); deterministic given the seed."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = canonical_labels(labels)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    best_obj = hinge_objective(w, b, X, y, lam)
    best = (w.copy(), b)
    for _ in range(epochs):
        order = rng.permutation(n).astype(np.int64)
        b, t = kernels.svm_epoch(X, y, order, w, b, lam, t)
        obj = hinge_objective(w, b, X, y, lam)
        if obj < best_obj:
            best_obj = obj
            best = (w.copy(), b)
    return best


def predict_margins(weights, bias, X) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ weights + bias


def accuracy(weights, bias, X, labels) -> float:
    y = canonical_labels(labels)
    predicted = np.where(predict_margins(weights, bias, X) >= 0.0, 1.0, -1.0)
    return float((predicted == y).mean())


def certify(model: OutcomeModel, holdout_features, holdout_labels) -> OutcomeModel:
    """Score the model on held-out rows and set the certification flag."""
    X = np.asarray(holdout_features, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyHoldout("holdout set is empty")
    acc = accuracy(model.weights, model.bias, X, holdout_labels)
    return replace(model, holdout_accuracy=acc, certified=acc >= CERTIFICATION_THRESHOLD)


def train_outcome_models(
    matrix,
    labels,
    assignments,
    k: int,
    holdout_fraction: float = 0.25,
    lam: float = 1e-3,
    epochs: int = 50,
    seed: int = 0,
) -> dict:
    """One certified-or-not model per cluster that can support one.

    Rows of each cluster are split (seeded) into train and holdout; a
    cluster whose training half has a single class, or with too few rows
    to hold anything out, gets no model.
    """
    X = np.ascontiguousarray(matrix.rows if hasattr(matrix, "rows") else matrix, dtype=np.float64)
    y = canonical_labels(labels)
    assignments = np.asarray(assignments)
    models = {}
    for c in range(k):
        idx = np.flatnonzero(assignments == c)
        if idx.size < 8:
            continue
        rng = np.random.default_rng(seed * 10_007 + c)
        idx = idx[rng.permutation(idx.size)]
        n_hold = max(1, int(idx.size * holdout_fraction))
        hold, train = idx[:n_hold], idx[n_hold:]
        if len(set(y[train].tolist())) < 2:
            continue
        w, b = train_svm(X[train], y[train], lam=lam, epochs=epochs, seed=seed * 31 + c)
        models[c] = certify(OutcomeModel(c, w, b), X[hold], y[hold])
    return models
