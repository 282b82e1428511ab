"""Flat blob store: every ingested record kept verbatim under a random id.

The store never looks inside a payload. Each entity is one file under
`<root>/objects/<first two hex chars>/<id>`, and an append-only manifest
`objects.log` records `id<TAB>format<TAB>size<TAB>unix_millis` per entity
in insertion order. On open, the manifest is replayed to rebuild the
index, so insertion order survives restarts; a trailing partial line
(torn write) is ignored.

Ids are 128 random bits rendered as 32 lowercase hex characters rather
than content hashes: the same payload arriving twice from two sources is
two entities with two metadata trails.
"""

import os
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import AccessDenied, NotFound, StorageFull

STRUCTURED = "Structured"
SEMI_STRUCTURED = "SemiStructured"
UNSTRUCTURED = "Unstructured"
FORMAT_CLASSES = (STRUCTURED, SEMI_STRUCTURED, UNSTRUCTURED)

DEFAULT_CAPACITY_BYTES = 4 * 1024**3  # soft cap; this is a desk-scale lake

_MANIFEST = "objects.log"


def new_entity_id() -> str:
    return secrets.token_hex(16)


def is_entity_id(value: str) -> bool:
    return len(value) == 32 and all(c in "0123456789abcdef" for c in value)


def check_format(format_class: str) -> str:
    if format_class not in FORMAT_CLASSES:
        raise ValueError(f"unknown format class {format_class!r}")
    return format_class


@dataclass(frozen=True)
class DataEntity:
    id: str
    payload: bytes
    format: str
    size_bytes: int


class BlobStore:
    """Schemaless entity storage guarded by the policy engine.

    Safe for concurrent readers and writers: object files are written to a
    temp name and renamed into place, so a reader never sees a partial
    entity, and manifest appends are serialized under one lock.
    """

    def __init__(self, root, clock, engine, capacity_bytes: int = DEFAULT_CAPACITY_BYTES):
        self.root = Path(root)
        self._objects = self.root / "objects"
        self._objects.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self._engine = engine
        self.capacity_bytes = capacity_bytes
        self._lock = threading.Lock()
        # id -> (format, size), insertion-ordered
        self._index: dict = {}
        self._used = 0
        self._replay_manifest()
        self._manifest_fh = open(self.root / _MANIFEST, "a", encoding="utf-8")

    def _replay_manifest(self) -> None:
        path = self.root / _MANIFEST
        if not path.exists():
            return
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.endswith("\n"):
                    break  # torn final write
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 4:
                    continue
                entity_id, format_class, size, _millis = parts
                self._index[entity_id] = (format_class, int(size))
                self._used += int(size)

    def _path_for(self, entity_id: str) -> Path:
        return self._objects / entity_id[:2] / entity_id

    def close(self) -> None:
        self._manifest_fh.close()

    # -- operations ---------------------------------------------------------

    def put_blob(self, payload: bytes, format_class: str, ticket) -> str:
        check_format(format_class)
        self._engine.require(ticket, "store/*", "Write", self._clock.now())
        if self._used + len(payload) > self.capacity_bytes:
            raise StorageFull(f"capacity {self.capacity_bytes} bytes would be exceeded")

        entity_id = new_entity_id()
        while entity_id in self._index:  # 2^-128 per draw, but ids must never repeat
            entity_id = new_entity_id()
        path = self._path_for(entity_id)
        path.parent.mkdir(exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)

        with self._lock:
            if self._used + len(payload) > self.capacity_bytes:
                path.unlink()
                raise StorageFull(f"capacity {self.capacity_bytes} bytes would be exceeded")
            self._manifest_fh.write(f"{entity_id}\t{format_class}\t{len(payload)}\t{int(self._clock.now())}\n")
            self._manifest_fh.flush()
            self._index[entity_id] = (format_class, len(payload))
            self._used += len(payload)
        return entity_id

    def get_blob(self, entity_id: str, ticket) -> bytes:
        self._engine.require(ticket, f"store/{entity_id}", "Read", self._clock.now())
        if entity_id not in self._index:
            raise NotFound(f"no entity {entity_id}")
        with open(self._path_for(entity_id), "rb") as fh:
            return fh.read()

    def get_entity(self, entity_id: str, ticket) -> DataEntity:
        payload = self.get_blob(entity_id, ticket)
        format_class, size = self._index[entity_id]
        return DataEntity(entity_id, payload, format_class, size)

    def list_entities(self, format_filter: Optional[str], ticket) -> list:
        """All (id, format, size_bytes) in insertion order, optionally filtered."""
        self._engine.require(ticket, "store/*", "Read", self._clock.now())
        if format_filter is not None:
            check_format(format_filter)
        return [
            (entity_id, format_class, size)
            for entity_id, (format_class, size) in self._index.items()
            if format_filter is None or format_class == format_filter
        ]

    # -- unauthenticated views used by the catalog and facade ---------------

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self._index

    def __len__(self) -> int:
        return len(self._index)

    @property
    def used_bytes(self) -> int:
        return self._used

    def ids(self) -> Iterable[str]:
        return self._index.keys()
