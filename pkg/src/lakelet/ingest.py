"""Ingestion connectors: bulk files, event documents, and a TCP stream.

Records land in the lake exactly as they arrive; the only work between
arrival and catalog commit is classification and metadata capture, never
payload transformation. Arrival time (da_time) is stamped when the
record's first byte reaches the lake, the commit time (ml_time) is
assigned by the catalog, and their difference is the per-record ingestion
time every report carries.

The stream connector speaks the simplest workable wire protocol: TCP with
newline-delimited UTF-8 frames, at most 1 MiB per frame. A frame becomes
one entity; a partial frame at connection close is discarded.
"""

import socket
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .catalog import BULK, EVENT, STREAM, BusinessMeta, OperationalMeta, classify_format, technical_meta_for
from .errors import BindFailure, IoFailure, NegativeInterval

MAX_FRAME_BYTES = 1024 * 1024


def ingestion_time(ml_time, da_time):
    """Per-record ingestion latency: catalog commit minus arrival."""
    if ml_time < da_time:
        raise NegativeInterval(f"ml_time {ml_time} precedes da_time {da_time}")
    return ml_time - da_time


@dataclass(frozen=True)
class IngestRecord:
    payload: bytes
    source_kind: str
    source_name: str
    da_time: Optional[float] = None  # stamped by the pipeline at arrival


@dataclass(frozen=True)
class IngestEntry:
    entity_id: str
    da_time: float
    ml_time: float
    it_millis: float
    format: str


@dataclass(frozen=True)
class IngestReport:
    entries: tuple = ()

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def mean_it(self) -> float:
        if not self.entries:
            return 0.0
        return sum(e.it_millis for e in self.entries) / len(self.entries)

    @property
    def max_it(self) -> float:
        return max((e.it_millis for e in self.entries), default=0.0)


def _schema_hint(payload: bytes, format_class: str) -> Optional[tuple]:
    if format_class != "Structured":
        return None
    try:
        first = payload.decode("utf-8").splitlines()[0]
    except (UnicodeDecodeError, IndexError):
        return None
    for delim in (",", "\t", ";", "|"):
        cols = first.split(delim)
        if len(cols) >= 2:
            return tuple(c.strip() for c in cols)
    return None


class IngestPipeline:
    """Store-then-register path shared by all connectors.

    An entity never appears in the catalog without its blob: the store
    write happens first, and only a committed blob is registered.
    """

    def __init__(self, store, catalog, clock):
        self._store = store
        self._catalog = catalog
        self._clock = clock

    def _commit(self, payload: bytes, source_kind: str, source_name: str, da_time: float, ticket, tags=frozenset(), domain="") -> IngestEntry:
        format_class = classify_format(payload)
        entity_id = self._store.put_blob(payload, format_class, ticket)
        entry = self._catalog.register_entity(
            entity_id,
            technical_meta_for(payload, format_class, _schema_hint(payload, format_class)),
            OperationalMeta(source_kind, source_name, ticket.principal if ticket else "?", da_time),
            BusinessMeta(frozenset(tags), domain),
        )
        ml_time = entry.operational.ml_time
        return IngestEntry(entity_id, da_time, ml_time, ingestion_time(ml_time, da_time), format_class)

    def ingest_records(self, records: Iterable[IngestRecord], ticket, tags=frozenset(), domain="") -> IngestReport:
        """Ingest pre-framed records; stamps arrival per record unless the
        record already carries a da_time."""
        entries = []
        for record in records:
            da = record.da_time if record.da_time is not None else self._clock.now()
            entries.append(self._commit(record.payload, record.source_kind, record.source_name, da, ticket, tags, domain))
        return IngestReport(tuple(entries))

    # -- bulk ------------------------------------------------------------------

    def ingest_bulk(self, paths, ticket, split_records: bool = False, tags=frozenset(), domain="") -> IngestReport:
        """Ingest files; with split_records, each non-empty line of a file
        becomes its own entity (the file is a batch of row-records).

        A failing path raises IoFailure naming it; records committed
        before the failure stay committed.
        """
        entries = []
        for path in paths:
            path = Path(path)
            da = self._clock.now()
            try:
                payload = path.read_bytes()
            except OSError as exc:
                raise IoFailure(path, str(exc)) from exc
            if split_records:
                for line in payload.splitlines():
                    if not line:
                        continue
                    entries.append(self._commit(line, BULK, path.name, self._clock.now(), ticket, tags, domain))
            else:
                entries.append(self._commit(payload, BULK, path.name, da, ticket, tags, domain))
        return IngestReport(tuple(entries))

    # -- events ------------------------------------------------------------------

    def ingest_events(self, documents: Iterable, ticket, source_name: str = "events", tags=frozenset(), domain="") -> IngestReport:
        entries = []
        for doc in documents:
            da = self._clock.now()
            payload = doc.encode("utf-8") if isinstance(doc, str) else bytes(doc)
            entries.append(self._commit(payload, EVENT, source_name, da, ticket, tags, domain))
        return IngestReport(tuple(entries))

    # -- stream ------------------------------------------------------------------

    def ingest_stream(self, host: str, port: int, max_records: int, ticket, stop_when_idle: bool = True, tags=frozenset(), domain="") -> IngestReport:
        """Listen for newline-framed records until max_records arrive.

        Connections are served concurrently. With stop_when_idle, the
        listener also stops once at least one connection was served and
        none remain open, so a short stream does not hang the caller.
        """
        listener = _StreamListener(self, host, port, max_records, ticket, stop_when_idle, tags, domain)
        return listener.run()


class _StreamListener:
    def __init__(self, pipeline, host, port, max_records, ticket, stop_when_idle, tags, domain):
        self._pipeline = pipeline
        self._ticket = ticket
        self._max = max_records
        self._stop_when_idle = stop_when_idle
        self._tags = tags
        self._domain = domain
        self._entries: list = []
        self._commit_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._active = 0
        self._served_any = False
        self._done = threading.Event()
        try:
            self._sock = socket.create_server((host, port))
        except OSError as exc:
            raise BindFailure(f"cannot listen on {host}:{port}: {exc}") from exc
        self._sock.settimeout(0.05)

    @property
    def address(self):
        return self._sock.getsockname()

    def run(self) -> IngestReport:
        threads = []
        try:
            while not self._done.is_set():
                try:
                    conn, _addr = self._sock.accept()
                except socket.timeout:
                    if self._idle():
                        break
                    continue
                with self._state_lock:
                    self._active += 1
                    self._served_any = True
                t = threading.Thread(target=self._serve, args=(conn,), daemon=True)
                t.start()
                threads.append(t)
        finally:
            self._sock.close()
        for t in threads:
            t.join(timeout=5.0)
        return IngestReport(tuple(self._entries))

    def _idle(self) -> bool:
        with self._state_lock:
            return self._stop_when_idle and self._served_any and self._active == 0

    def _serve(self, conn) -> None:
        clock = self._pipeline._clock
        conn.settimeout(0.05)
        buffer = b""
        frame_start = None
        try:
            while not self._done.is_set():
                try:
                    data = conn.recv(65536)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not data:
                    break  # connection closed; partial frame discarded
                now = clock.now()
                if not buffer:
                    frame_start = now
                buffer += data
                while b"\n" in buffer:
                    frame, buffer = buffer.split(b"\n", 1)
                    if frame:
                        self._commit(frame, frame_start)
                        if self._done.is_set():
                            return
                    frame_start = now
                if len(buffer) > MAX_FRAME_BYTES:
                    break  # oversized frame: drop the connection
        finally:
            conn.close()
            with self._state_lock:
                self._active -= 1

    def _commit(self, frame: bytes, da_time: float) -> None:
        with self._commit_lock:
            if len(self._entries) >= self._max:
                self._done.set()
                return
            entry = self._pipeline._commit(frame, STREAM, "stream", da_time, self._ticket, self._tags, self._domain)
            self._entries.append(entry)
            if len(self._entries) >= self._max:
                self._done.set()
