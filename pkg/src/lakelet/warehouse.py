"""Schema-on-write baseline: a fixed relational schema fed through ETL.

The warehouse accepts only what its declared schema can hold. Structured
records are parsed, type-coerced, and validated column by column;
hierarchical records are flattened and any field without a schema column
is dropped; free-text records are rejected outright. Each accepted row is
canonicalized, checksummed, and appended to the table file, and its
commit timestamp is stamped only after all of that finishes, so the
ingestion-time metric prices the full ETL path. Rejected records never
get a commit timestamp and are excluded from latency means.

The ETL cost is real parsing/validation/canonicalization work, not a
sleep. extra_transform_passes (default 0) repeats the canonicalization
step to model heavier transform stages; reviewers can leave it at zero.
"""

import csv
import io
import json
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .analytics.features import CATEGORICAL, Column, FeatureMatrix, NUMERIC, RawTable, normalize
from .catalog import classify_format
from .ingest import IngestEntry, IngestReport, ingestion_time
from .store import SEMI_STRUCTURED, STRUCTURED

COLUMN_TYPES = ("integer", "real", "categorical")


@dataclass(frozen=True)
class SchemaColumn:
    name: str
    type: str
    categories: Optional[tuple] = None

    def __post_init__(self):
        if self.type not in COLUMN_TYPES:
            raise ValueError(f"unknown column type {self.type!r}")


@dataclass(frozen=True)
class WarehouseSchema:
    columns: tuple
    strict: bool = True

    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Optional[SchemaColumn]:
        for c in self.columns:
            if c.name == name:
                return c
        return None


def save_schema(path, schema: WarehouseSchema) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for col in schema.columns:
            if col.categories:
                fh.write(f"{col.name}\t{col.type}\t{','.join(col.categories)}\n")
            else:
                fh.write(f"{col.name}\t{col.type}\n")


def load_schema(path, strict: bool = True) -> WarehouseSchema:
    columns = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            categories = tuple(parts[2].split(",")) if len(parts) > 2 and parts[2] else None
            columns.append(SchemaColumn(parts[0], parts[1], categories))
    return WarehouseSchema(tuple(columns), strict)


@dataclass(frozen=True)
class EtlRowResult:
    accepted: bool
    values: Optional[dict]
    dropped_fields: tuple
    etl_millis: float
    reason: str = ""


@dataclass
class EtlOutcome:
    results: list

    @property
    def accepted_rows(self) -> int:
        return sum(1 for r in self.results if r.accepted)

    @property
    def rejected_rows(self) -> int:
        return sum(1 for r in self.results if not r.accepted)

    @property
    def dropped_fields(self) -> list:
        return [r.dropped_fields for r in self.results]

    def accepted_indices(self) -> list:
        return [i for i, r in enumerate(self.results) if r.accepted]


def flatten(doc, prefix: str = "") -> dict:
    """Dotted-path leaves of a nested JSON document."""
    out = {}
    if isinstance(doc, dict):
        for key, value in doc.items():
            out.update(flatten(value, f"{prefix}{key}."))
    elif isinstance(doc, list):
        for i, value in enumerate(doc):
            out.update(flatten(value, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = doc
    return out


class _Mismatch(Exception):
    pass


def _coerce(column: SchemaColumn, value):
    """Coerced value; raises _Mismatch when it cannot fit the column."""
    if value is None or value == "":
        return None
    try:
        if column.type == "integer":
            return int(str(value).strip())
        if column.type == "real":
            return float(str(value).strip())
    except ValueError:
        raise _Mismatch(f"column {column.name}: {value!r} is not {column.type}") from None
    label = str(value).strip()
    if column.categories is not None and label not in column.categories:
        raise _Mismatch(f"column {column.name}: {label!r} not in categories")
    return label


def etl_transform(payload: bytes, schema: WarehouseSchema, clock, extra_transform_passes: int = 0) -> EtlRowResult:
    """Extract-transform one record against the schema.

    Rejection is a value: free text, undecodable payloads, and (in strict
    mode) type or category violations come back as rejected results.
    """
    start = clock.now()
    format_class = classify_format(payload)
    if format_class == STRUCTURED:
        fields, extra = _parse_delimited(payload, schema)
    elif format_class == SEMI_STRUCTURED:
        fields, extra = _parse_hierarchical(payload, schema)
    else:
        return EtlRowResult(False, None, ("*",), clock.now() - start, "unstructured payload does not fit the schema")
    if fields is None:
        return EtlRowResult(False, None, ("*",), clock.now() - start, extra)
    dropped = extra

    values = {}
    for column in schema.columns:
        try:
            values[column.name] = _coerce(column, fields.get(column.name))
        except _Mismatch as exc:
            if schema.strict:
                return EtlRowResult(False, None, ("*",), clock.now() - start, str(exc))
            values[column.name] = None

    canonical = canonical_row(values, schema)
    for _ in range(extra_transform_passes):
        canonical = canonical_row(values, schema)
    zlib.crc32(canonical.encode("utf-8"))
    return EtlRowResult(True, values, tuple(dropped), clock.now() - start)


def _parse_delimited(payload: bytes, schema: WarehouseSchema):
    text = payload.decode("utf-8", errors="replace")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        return None, "empty delimited record"
    if len(rows) >= 2:
        header, data = rows[0], rows[1]
        fields = dict(zip(header, data))
        dropped = [name for name in header if schema.column(name) is None]
    else:
        # headerless row: positional against the schema's column order
        data = rows[0]
        fields = dict(zip(schema.names, data))
        dropped = [f"field_{i}" for i in range(len(schema.names), len(data))]
    return fields, dropped


def _parse_hierarchical(payload: bytes, schema: WarehouseSchema):
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        return None, f"unparseable document: {exc}"
    leaves = flatten(doc)
    fields = {}
    dropped = []
    for path in sorted(leaves):
        name = path.rsplit(".", 1)[-1]
        if schema.column(name) is not None and name not in fields:
            fields[name] = leaves[path]
        else:
            dropped.append(path)
    if not fields:
        return None, "no schema columns present in document"
    return fields, dropped


def canonical_row(values: dict, schema: WarehouseSchema) -> str:
    parts = []
    for column in schema.columns:
        v = values.get(column.name)
        if v is None:
            parts.append("")
        elif column.type == "real":
            parts.append(format(float(v), ".10g"))
        else:
            parts.append(str(v))
    return "\t".join(parts)


class Warehouse:
    """Batch loader writing accepted rows to one table file.

    Single-threaded by design: paired-timing fairness against the lake
    pipeline needs deterministic sequencing.
    """

    def __init__(self, root, schema: WarehouseSchema, clock, engine=None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.schema = schema
        self._clock = clock
        self._engine = engine
        self._table_path = self.root / "warehouse.tsv"
        self._rejects_path = self.root / "dw_rejects.log"

    def load(self, records: Iterable, ticket=None, extra_transform_passes: int = 0):
        """ETL every record; returns (EtlOutcome, ingestion report).

        Records may be IngestRecords or raw byte payloads. The commit
        timestamp of an accepted row lands after its ETL work and table
        append, so its ingestion time includes the ETL cost.
        """
        results = []
        entries = []
        with open(self._table_path, "a", encoding="utf-8") as table, open(self._rejects_path, "a", encoding="utf-8") as rejects:
            if table.tell() == 0:
                table.write("\t".join(self.schema.names) + "\n")
            for record in records:
                payload = record.payload if hasattr(record, "payload") else bytes(record)
                da_time = self._clock.now()
                if self._engine is not None:
                    self._engine.require(ticket, "warehouse/rows", "Write", da_time)
                result = etl_transform(payload, self.schema, self._clock, extra_transform_passes)
                results.append(result)
                if result.accepted:
                    table.write(canonical_row(result.values, self.schema) + "\n")
                    table.flush()
                    ml_time = self._clock.now()
                    entries.append(IngestEntry("-", da_time, ml_time, ingestion_time(ml_time, da_time), "Row"))
                else:
                    rejects.write(f"{int(da_time)}\t{result.reason}\n")
                    rejects.flush()
        return EtlOutcome(results), IngestReport(tuple(entries))


def dw_feature_view(outcome: EtlOutcome, schema: WarehouseSchema, exclude=()) -> FeatureMatrix:
    """Normalized features over the columns that survived ETL.

    Only accepted rows contribute; identifier-ish columns are excluded by
    name so the view matches what the lake-side table would expose for
    the same fields.
    """
    columns = tuple(
        Column(c.name, CATEGORICAL if c.type == "categorical" else NUMERIC)
        for c in schema.columns
        if c.name not in exclude
    )
    rows = [r.values for r in outcome.results if r.accepted]
    return normalize(RawTable(columns, rows))
