"""Extended-metadata registry: classification, auditing, search, lineage.

Every stored entity gets exactly one catalog entry carrying technical,
operational, and business metadata. The commit timestamp (ml_time) is
assigned here, by the lake clock, at the instant the entry is persisted;
ingestion latency is measured against it. Lineage edges form a DAG over
entities, and the audit log is the single append-only record of every
guarded interaction with the lake.

Persistence is three append-only, line-delimited files under the lake
root: `catalog.log`, `lineage.log`, `audit.log`. Each line is a flat
key=value record; values are percent-escaped so they stay one line.
"""

import hashlib
import json
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional
from urllib.parse import quote, unquote

from .errors import CycleDetected, DuplicateEntry, NegativeInterval, UnknownEntity
from .store import FORMAT_CLASSES, SEMI_STRUCTURED, STRUCTURED, UNSTRUCTURED

BULK = "Bulk"
EVENT = "Event"
STREAM = "Stream"
SOURCE_KINDS = (BULK, EVENT, STREAM)

_DELIMITERS = (",", "\t", ";", "|")


# -- domain types ------------------------------------------------------------


@dataclass(frozen=True)
class TechnicalMeta:
    format: str
    schema_hint: Optional[tuple] = None  # column names, when known
    size_bytes: int = 0
    checksum: int = 0  # 64-bit content digest


@dataclass(frozen=True)
class OperationalMeta:
    source_kind: str
    source_name: str
    creator: str
    da_time: float  # arrival timestamp, unix ms
    ml_time: float = 0.0  # catalog commit timestamp; assigned at register time
    access_history_count: int = 0


@dataclass(frozen=True)
class BusinessMeta:
    tags: frozenset = frozenset()
    domain: str = ""


@dataclass(frozen=True)
class CatalogEntry:
    entity: str
    technical: TechnicalMeta
    operational: OperationalMeta
    business: BusinessMeta


@dataclass(frozen=True)
class LineageEdge:
    child: str
    parents: tuple
    transform: str

    def __post_init__(self):
        if not self.parents:
            raise ValueError("lineage edge needs at least one parent")
        if self.child in self.parents:
            raise CycleDetected(f"{self.child} cannot be its own parent")


@dataclass(frozen=True)
class AuditEvent:
    when: float
    principal: str
    resource: str
    action: str
    outcome: str  # Allow | Deny
    detail: str = ""


@dataclass
class SearchQuery:
    """Conjunction of typed clauses; None means the clause is absent.

    tags matches entries carrying every listed tag; the time range is the
    half-open ml_time window [ml_from, ml_to).
    """

    format: Optional[str] = None
    source_kind: Optional[str] = None
    tags: Optional[frozenset] = None
    creator: Optional[str] = None
    ml_from: Optional[float] = None
    ml_to: Optional[float] = None

    def matches(self, entry: CatalogEntry) -> bool:
        if self.format is not None and entry.technical.format != self.format:
            return False
        if self.source_kind is not None and entry.operational.source_kind != self.source_kind:
            return False
        if self.tags is not None and not frozenset(self.tags) <= entry.business.tags:
            return False
        if self.creator is not None and entry.operational.creator != self.creator:
            return False
        if self.ml_from is not None and entry.operational.ml_time < self.ml_from:
            return False
        if self.ml_to is not None and entry.operational.ml_time >= self.ml_to:
            return False
        return True


# -- classification ----------------------------------------------------------


def classify_format(payload: bytes) -> str:
    """Deterministic, total format heuristic.

    A brace- or bracket-delimited document that parses as JSON is
    SemiStructured. Otherwise, if the first line splits into two or more
    columns under one delimiter and the first ten lines agree on the
    column count, it is Structured. Everything else, including undecodable
    bytes, is Unstructured. The hierarchical check runs first so a JSON
    document containing commas is not mistaken for delimited text.
    """
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        return UNSTRUCTURED
    stripped = text.strip()
    if stripped[:1] in ("{", "["):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError:
            pass
        else:
            if isinstance(doc, (dict, list)):
                return SEMI_STRUCTURED
    lines = text.splitlines()
    if lines:
        head = lines[:10]
        for delim in _DELIMITERS:
            width = len(head[0].split(delim))
            if width >= 2 and all(len(line.split(delim)) == width for line in head):
                return STRUCTURED
    return UNSTRUCTURED


def checksum64(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def technical_meta_for(payload: bytes, format_class: str, schema_hint=None) -> TechnicalMeta:
    return TechnicalMeta(format_class, schema_hint, len(payload), checksum64(payload))


# -- key=value line codec ----------------------------------------------------


def _enc(value) -> str:
    return quote(str(value), safe="/:.")


def _encode_line(fields: dict) -> str:
    return " ".join(f"{key}={_enc(value)}" for key, value in fields.items())


def _decode_line(line: str) -> dict:
    fields = {}
    for token in line.split(" "):
        if not token:
            continue
        key, _, value = token.partition("=")
        fields[key] = unquote(value)
    return fields


# -- audit -------------------------------------------------------------------


class AuditLog:
    """Append-only, globally serialized event log.

    `when` values are clamped to be non-decreasing within the log, and
    every append is flushed before returning so the guarded operation can
    rely on the event being durable.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._events: list = []
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.endswith("\n"):
                        break
                    f = _decode_line(line.rstrip("\n"))
                    self._events.append(
                        AuditEvent(float(f["when"]), f["principal"], f["resource"], f["action"], f["outcome"], f.get("detail", ""))
                    )
        self._fh = open(self.path, "a", encoding="utf-8")

    def record(self, when, principal, resource, action, outcome, detail="") -> AuditEvent:
        return self.append(AuditEvent(when, principal, resource, action, outcome, detail))

    def append(self, event: AuditEvent) -> AuditEvent:
        with self._lock:
            if self._events and event.when < self._events[-1].when:
                event = replace(event, when=self._events[-1].when)
            self._fh.write(
                _encode_line(
                    {
                        "when": event.when,
                        "principal": event.principal,
                        "resource": event.resource,
                        "action": event.action,
                        "outcome": event.outcome,
                        "detail": event.detail,
                    }
                )
                + "\n"
            )
            self._fh.flush()
            self._events.append(event)
        return event

    def query(self, principal=None, resource=None, action=None, outcome=None, t_from=None, t_to=None) -> list:
        """Matching events in append order; None clauses are skipped."""
        out = []
        for ev in self._events:
            if principal is not None and ev.principal != principal:
                continue
            if resource is not None and ev.resource != resource:
                continue
            if action is not None and ev.action != action:
                continue
            if outcome is not None and ev.outcome != outcome:
                continue
            if t_from is not None and ev.when < t_from:
                continue
            if t_to is not None and ev.when >= t_to:
                continue
            out.append(ev)
        return out

    def events(self) -> list:
        return list(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def close(self) -> None:
        self._fh.close()


# -- catalog -----------------------------------------------------------------


class Catalog:
    def __init__(self, root, clock, store=None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self._store = store
        self._entries: dict = {}  # entity id -> CatalogEntry, insertion order
        self._access: dict = {}
        self._edges: dict = {}  # child -> list[LineageEdge]
        self._catalog_path = self.root / "catalog.log"
        self._lineage_path = self.root / "lineage.log"
        self._replay()
        self._catalog_fh = open(self._catalog_path, "a", encoding="utf-8")
        self._lineage_fh = open(self._lineage_path, "a", encoding="utf-8")
        self._lock = threading.Lock()

    def _replay(self) -> None:
        if self._catalog_path.exists():
            with open(self._catalog_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.endswith("\n"):
                        break
                    f = _decode_line(line.rstrip("\n"))
                    if "format" not in f:  # access-count record
                        self._access[f["entity"]] = int(f["access_history_count"])
                        continue
                    hint = tuple(f["schema_hint"].split(",")) if f.get("schema_hint") else None
                    entry = CatalogEntry(
                        f["entity"],
                        TechnicalMeta(f["format"], hint, int(f["size_bytes"]), int(f["checksum"])),
                        OperationalMeta(
                            f["source_kind"], f["source_name"], f["creator"],
                            float(f["da_time"]), float(f["ml_time"]), int(f["access_history_count"]),
                        ),
                        BusinessMeta(frozenset(t for t in f["tags"].split(",") if t), f["domain"]),
                    )
                    self._entries[entry.entity] = entry
                    self._access.setdefault(entry.entity, entry.operational.access_history_count)
        if self._lineage_path.exists():
            with open(self._lineage_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.endswith("\n"):
                        break
                    f = _decode_line(line.rstrip("\n"))
                    edge = LineageEdge(f["child"], tuple(f["parents"].split(",")), f["transform"])
                    self._edges.setdefault(edge.child, []).append(edge)

    # -- registration and search --------------------------------------------

    def register_entity(self, entity_id: str, technical: TechnicalMeta, operational: OperationalMeta, business: BusinessMeta) -> CatalogEntry:
        with self._lock:
            if entity_id in self._entries:
                raise DuplicateEntry(f"{entity_id} already registered")
            if self._store is not None and entity_id not in self._store:
                raise UnknownEntity(f"{entity_id} is not in the store")
            now = self._clock.now()
            if now < operational.da_time:
                raise NegativeInterval(f"commit time {now} precedes arrival time {operational.da_time}")
            if operational.source_kind not in SOURCE_KINDS:
                raise ValueError(f"unknown source kind {operational.source_kind!r}")
            if technical.format not in FORMAT_CLASSES:
                raise ValueError(f"unknown format class {technical.format!r}")
            entry = CatalogEntry(entity_id, technical, replace(operational, ml_time=now), business)
            self._write_entry(entry)
            self._entries[entity_id] = entry
            self._access[entity_id] = entry.operational.access_history_count
        return entry

    def _write_entry(self, entry: CatalogEntry) -> None:
        self._catalog_fh.write(
            _encode_line(
                {
                    "entity": entry.entity,
                    "format": entry.technical.format,
                    "schema_hint": ",".join(entry.technical.schema_hint or ()),
                    "size_bytes": entry.technical.size_bytes,
                    "checksum": entry.technical.checksum,
                    "source_kind": entry.operational.source_kind,
                    "source_name": entry.operational.source_name,
                    "creator": entry.operational.creator,
                    "da_time": entry.operational.da_time,
                    "ml_time": entry.operational.ml_time,
                    "access_history_count": entry.operational.access_history_count,
                    "tags": ",".join(sorted(entry.business.tags)),
                    "domain": entry.business.domain,
                }
            )
            + "\n"
        )
        self._catalog_fh.flush()

    def entry(self, entity_id: str) -> CatalogEntry:
        if entity_id not in self._entries:
            raise UnknownEntity(f"{entity_id} is not registered")
        stored = self._entries[entity_id]
        count = self._access.get(entity_id, 0)
        return replace(stored, operational=replace(stored.operational, access_history_count=count))

    def entries(self) -> list:
        return [self.entry(eid) for eid in self._entries]

    def search(self, query: SearchQuery) -> list:
        hits = [e for e in self.entries() if query.matches(e)]
        hits.sort(key=lambda e: e.operational.ml_time)
        return hits

    def note_access(self, entity_id: str) -> None:
        """Bump the per-entity access history; one bump per guarded read."""
        with self._lock:
            if entity_id not in self._entries:
                return
            self._access[entity_id] = self._access.get(entity_id, 0) + 1
            self._catalog_fh.write(
                _encode_line({"entity": entity_id, "access_history_count": self._access[entity_id]}) + "\n"
            )
            self._catalog_fh.flush()

    # -- lineage --------------------------------------------------------------

    def record_lineage(self, edge: LineageEdge) -> None:
        with self._lock:
            for node in (edge.child, *edge.parents):
                if node not in self._entries:
                    raise UnknownEntity(f"{node} is not registered")
            for parent in edge.parents:
                if edge.child == parent or edge.child in self._ancestor_ids(parent):
                    raise CycleDetected(f"edge {edge.child} <- {parent} would close a cycle")
            self._lineage_fh.write(
                _encode_line({"child": edge.child, "parents": ",".join(edge.parents), "transform": edge.transform}) + "\n"
            )
            self._lineage_fh.flush()
            self._edges.setdefault(edge.child, []).append(edge)

    def lineage_of(self, entity_id: str) -> dict:
        """Transitive ancestry: ancestor id -> transform label of the edge
        that introduced it (nearest edge wins when paths overlap)."""
        if entity_id not in self._entries:
            raise UnknownEntity(f"{entity_id} is not registered")
        out: dict = {}
        frontier = [entity_id]
        while frontier:
            node = frontier.pop()
            for edge in self._edges.get(node, ()):
                for parent in edge.parents:
                    if parent not in out:
                        out[parent] = edge.transform
                        frontier.append(parent)
        return out

    def _ancestor_ids(self, entity_id: str) -> set:
        seen: set = set()
        frontier = [entity_id]
        while frontier:
            node = frontier.pop()
            for edge in self._edges.get(node, ()):
                for parent in edge.parents:
                    if parent not in seen:
                        seen.add(parent)
                        frontier.append(parent)
        return seen

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def close(self) -> None:
        self._catalog_fh.close()
        self._lineage_fh.close()
