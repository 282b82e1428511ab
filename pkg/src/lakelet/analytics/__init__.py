"""Analytics layer: features, clustering, outcome models, recommendations."""

from .clustering import ClusterModel, ClusterPrecision, PrecisionReport, cluster_precision, euclidean_distance, kmeans
from .features import Column, FeatureMatrix, FeatureSpace, RawTable, normalize
from .kernels import BACKEND
from .recommend import Recommendation, recommend
from .svm import CERTIFICATION_THRESHOLD, OutcomeModel, certify, train_outcome_models, train_svm

__all__ = [
    "BACKEND",
    "CERTIFICATION_THRESHOLD",
    "ClusterModel",
    "ClusterPrecision",
    "Column",
    "FeatureMatrix",
    "FeatureSpace",
    "OutcomeModel",
    "PrecisionReport",
    "RawTable",
    "Recommendation",
    "certify",
    "cluster_precision",
    "euclidean_distance",
    "kmeans",
    "normalize",
    "recommend",
    "train_outcome_models",
    "train_svm",
]
