"""Medication recommendation from a certified per-cluster outcome model.

The patient is routed to the nearest centroid, then each candidate value
is substituted into the patient's medication indicator columns and scored
with that cluster's linear model. The candidate with the highest margin
wins; ties keep the first candidate in declared order.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ModelNotCertified, NoCandidates
from . import kernels


@dataclass(frozen=True)
class Recommendation:
    patient_row_index: int
    cluster_index: int
    recommended_medication: str
    score: float


def nearest_cluster(patient, centroids) -> int:
    labels, _ = kernels.assign_clusters(np.asarray(patient, dtype=np.float64).reshape(1, -1), centroids)
    return int(labels[0])


def recommend(patient, cluster_model, outcome_models, medication_feature: str, candidate_values, feature_names, patient_row_index: int = -1) -> Recommendation:
    if not candidate_values:
        raise NoCandidates("no candidate medication values given")
    patient = np.asarray(patient, dtype=np.float64)
    cluster = nearest_cluster(patient, cluster_model.centroids)
    model = outcome_models.get(cluster) if hasattr(outcome_models, "get") else outcome_models[cluster]
    if model is None or not model.certified:
        raise ModelNotCertified(f"cluster {cluster} has no certified outcome model")

    prefix = f"{medication_feature}="
    indicator_cols = [i for i, name in enumerate(feature_names) if name.startswith(prefix)]
    col_for_value = {feature_names[i][len(prefix):]: i for i in indicator_cols}

    best = None
    for candidate in candidate_values:
        x = patient.copy()
        for i in indicator_cols:
            x[i] = 0.0
        col = col_for_value.get(str(candidate))
        if col is not None:
            x[col] = 1.0
        score = float(np.dot(model.weights, x) + model.bias)
        if best is None or score > best.score:
            best = Recommendation(patient_row_index, cluster, str(candidate), score)
    return best
