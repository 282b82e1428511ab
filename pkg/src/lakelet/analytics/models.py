"""Line-delimited model serialization.

Header line with (k, dims, seed), one centroid per line, then one weights
line per cluster outcome model. Floats use repr-faithful formatting so a
round trip is exact.
"""

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterModel
from .svm import OutcomeModel


def _floats(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


@dataclass(frozen=True)
class ModelBundle:
    cluster_model: ClusterModel
    outcome_models: dict


def save_models(path, cluster_model: ClusterModel, outcome_models: dict = None) -> None:
    outcome_models = outcome_models or {}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"kmeans\tk={cluster_model.k}\tdims={cluster_model.centroids.shape[1]}"
            f"\tseed={cluster_model.seed}\tinertia={format(cluster_model.inertia, '.17g')}"
            f"\titerations={cluster_model.iterations_run}\n"
        )
        for row in cluster_model.centroids:
            fh.write(f"centroid\t{_floats(row)}\n")
        for c in sorted(outcome_models):
            m = outcome_models[c]
            fh.write(
                f"svm\tcluster={m.cluster_index}\tbias={format(m.bias, '.17g')}"
                f"\tholdout_accuracy={format(m.holdout_accuracy, '.17g')}"
                f"\tcertified={int(m.certified)}\tweights={_floats(m.weights)}\n"
            )


def load_models(path) -> ModelBundle:
    centroids = []
    outcome_models = {}
    header = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "kmeans":
                header = dict(p.split("=", 1) for p in parts[1:])
            elif parts[0] == "centroid":
                centroids.append(np.array([float(v) for v in parts[1].split()]))
            elif parts[0] == "svm":
                fields = dict(p.split("=", 1) for p in parts[1:])
                model = OutcomeModel(
                    int(fields["cluster"]),
                    np.array([float(v) for v in fields["weights"].split()]),
                    float(fields["bias"]),
                    float(fields["holdout_accuracy"]),
                    fields["certified"] == "1",
                )
                outcome_models[model.cluster_index] = model
    centroid_arr = np.ascontiguousarray(np.vstack(centroids))
    cluster_model = ClusterModel(
        k=int(header["k"]),
        centroids=centroid_arr,
        assignments=np.empty(0, dtype=np.int64),  # reassign against data as needed
        inertia=float(header.get("inertia", "nan")),
        seed=int(header["seed"]),
        iterations_run=int(header.get("iterations", "0")),
    )
    return ModelBundle(cluster_model, outcome_models)
