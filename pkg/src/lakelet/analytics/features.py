"""Feature extraction: raw patient rows to a normalized matrix.

A RawTable is what schema-on-read parsing produces: a column list with
kinds and one dict per row, None where a field is absent. normalize()
turns it into a FeatureMatrix: numeric columns are median-imputed and
min-max scaled to [0, 1], categoricals (missing becomes an explicit
"missing" category) are one-hot encoded, constant columns are dropped,
and identifier/outcome columns never become features. The fitted
FeatureSpace can re-encode new rows the same way, which is what the
recommender needs for unseen patients.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import AllConstant, EmptyTable

NUMERIC = "numeric"
CATEGORICAL = "categorical"
IDENTIFIER = "identifier"
OUTCOME = "outcome"
CONTEXT = "context"  # kept in the table, never encoded as a feature


@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass
class RawTable:
    columns: tuple
    rows: list

    def values(self, name: str) -> list:
        return [row.get(name) for row in self.rows]


@dataclass(frozen=True)
class NumericEncoder:
    name: str
    vmin: float
    vmax: float
    median: float

    def encode(self, value) -> float:
        v = self.median if value is None else float(value)
        scaled = (v - self.vmin) / (self.vmax - self.vmin)
        return min(1.0, max(0.0, scaled))

    def feature_names(self) -> tuple:
        return (self.name,)


@dataclass(frozen=True)
class CategoricalEncoder:
    name: str
    categories: tuple

    def encode(self, value) -> list:
        label = "missing" if value is None else str(value)
        return [1.0 if label == cat else 0.0 for cat in self.categories]

    def feature_names(self) -> tuple:
        return tuple(f"{self.name}={cat}" for cat in self.categories)


@dataclass(frozen=True)
class FeatureSpace:
    encoders: tuple

    @property
    def feature_names(self) -> tuple:
        names = []
        for enc in self.encoders:
            names.extend(enc.feature_names())
        return tuple(names)

    @property
    def dims(self) -> int:
        return len(self.feature_names)

    def normalization(self) -> dict:
        """Per-feature (min, max) used for scaling; one-hots are (0, 1)."""
        out = {}
        for enc in self.encoders:
            if isinstance(enc, NumericEncoder):
                out[enc.name] = (enc.vmin, enc.vmax)
            else:
                for name in enc.feature_names():
                    out[name] = (0.0, 1.0)
        return out

    def encode_row(self, raw: dict) -> np.ndarray:
        values = []
        for enc in self.encoders:
            v = enc.encode(raw.get(enc.name))
            if isinstance(v, list):
                values.extend(v)
            else:
                values.append(v)
        return np.array(values, dtype=np.float64)


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray
    space: FeatureSpace

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dims(self) -> int:
        return self.rows.shape[1]

    @property
    def feature_names(self) -> tuple:
        return self.space.feature_names

    @property
    def normalization(self) -> dict:
        return self.space.normalization()


def normalize(table: RawTable) -> FeatureMatrix:
    """Fit the feature space on the table and encode every row."""
    if len(table.rows) < 2:
        raise EmptyTable(f"need at least 2 rows, got {len(table.rows)}")
    encoders = []
    blocks = []
    for column in table.columns:
        if column.kind not in (NUMERIC, CATEGORICAL):
            continue
        raw = table.values(column.name)
        if column.kind == NUMERIC:
            present = [float(v) for v in raw if v is not None]
            if not present:
                continue  # nothing to learn from
            median = float(np.median(present))
            filled = np.array([median if v is None else float(v) for v in raw])
            vmin, vmax = float(filled.min()), float(filled.max())
            if vmin == vmax:
                continue  # constant column
            encoders.append(NumericEncoder(column.name, vmin, vmax, median))
            blocks.append(((filled - vmin) / (vmax - vmin)).reshape(-1, 1))
        else:
            labels = ["missing" if v is None else str(v) for v in raw]
            categories = tuple(sorted(set(labels)))
            if len(categories) < 2:
                continue  # one-hot of a constant column
            encoders.append(CategoricalEncoder(column.name, categories))
            arr = np.zeros((len(labels), len(categories)))
            index = {cat: i for i, cat in enumerate(categories)}
            for r, label in enumerate(labels):
                arr[r, index[label]] = 1.0
            blocks.append(arr)
    if not encoders:
        raise AllConstant("every column is constant or empty")
    return FeatureMatrix(np.ascontiguousarray(np.hstack(blocks), dtype=np.float64), FeatureSpace(tuple(encoders)))


# -- feature-space persistence (needed to score patients after the fact) ------


def save_feature_space(path, space: FeatureSpace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for enc in space.encoders:
            if isinstance(enc, NumericEncoder):
                fh.write(f"numeric\t{enc.name}\t{enc.vmin!r}\t{enc.vmax!r}\t{enc.median!r}\n")
            else:
                fh.write(f"categorical\t{enc.name}\t{','.join(enc.categories)}\n")


def load_feature_space(path) -> FeatureSpace:
    encoders = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "numeric":
                _, name, vmin, vmax, median = parts
                encoders.append(NumericEncoder(name, float(vmin), float(vmax), float(median)))
            elif parts[0] == "categorical":
                encoders.append(CategoricalEncoder(parts[1], tuple(parts[2].split(","))))
    return FeatureSpace(tuple(encoders))
