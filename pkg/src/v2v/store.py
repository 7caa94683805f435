"""File-backed document store with optimistic revisions, plus the bundle codec.

Documents live in one JSON file per collection under the data directory.
Each document is wrapped in an envelope carrying a strictly increasing
revision and an update timestamp. Unknown fields on imported documents
are preserved verbatim under ``extra`` so a richer upstream schema
survives a round trip untouched.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Type

from pydantic import BaseModel, ValidationError

from .model import (
    COLLECTIONS,
    Corpus,
    Event,
    NotFoundError,
    Output,
    Project,
    SubGeography,
    Topic,
    Voice,
)

FORMAT_VERSION = "1.0.0"

# Internal collections kept in the store's extra space; never exported.
INTERNAL_COLLECTIONS = ("geocode_cache", "feedback")

_MODEL_BY_COLLECTION: dict[str, Type[BaseModel]] = {
    "project": Project,
    "events": Event,
    "voices": Voice,
    "sub_geographies": SubGeography,
    "topics": Topic,
    "outputs": Output,
}


class RevisionConflict(Exception):
    """Another writer changed the document since it was read."""

    def __init__(self, collection: str, id_: str, expected: int, actual: int):
        super().__init__(
            f"{collection}/{id_}: expected revision {expected}, found {actual}"
        )
        self.expected = expected
        self.actual = actual


class BundleError(Exception):
    """The bundle file cannot be parsed into the six collections."""

    def __init__(self, message: str, details: Optional[list[str]] = None):
        super().__init__(message)
        self.details = details or []


def canonical_json(value: Any, pretty: bool = False) -> str:
    """Deterministic JSON text: sorted keys, stable separators."""
    if pretty:
        return json.dumps(value, ensure_ascii=False, sort_keys=True, indent=2)
    return json.dumps(value, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def utcnow() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc)


def _strip_empty(doc: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in doc.items() if v is not None and v != [] and v != {}}


def dump_doc(model: BaseModel) -> dict[str, Any]:
    """Serialize a domain model to a JSON-ready document.

    Empty optional fields are dropped at the schema level; the contents
    of ``extra`` are emitted untouched.
    """
    doc = model.model_dump(mode="json", exclude_none=True)
    if "phases" in doc:
        doc["phases"] = [_strip_empty(p) for p in doc["phases"]]
    return _strip_empty(doc)


def parse_doc(model_cls: Type[BaseModel], doc: dict[str, Any]) -> BaseModel:
    """Parse a raw document, routing unknown top-level keys into ``extra``."""
    known: dict[str, Any] = {}
    unknown: dict[str, Any] = {}
    for key, value in doc.items():
        if key in model_cls.model_fields:
            known[key] = value
        else:
            unknown[key] = value
    if unknown:
        merged = dict(known.get("extra") or {})
        merged.update(unknown)
        known["extra"] = merged
    return model_cls(**known)


@dataclass
class DocumentEnvelope:
    collection: str
    id: str
    body: dict[str, Any]
    revision: int
    updated_at: dt.datetime


@dataclass
class ImportBundle:
    """Parsed six-collection interchange bundle."""

    format_version: str = FORMAT_VERSION
    project: list[Project] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    voices: list[Voice] = field(default_factory=list)
    sub_geographies: list[SubGeography] = field(default_factory=list)
    topics: list[Topic] = field(default_factory=list)
    outputs: list[Output] = field(default_factory=list)

    def documents(self) -> dict[str, list[BaseModel]]:
        return {name: list(getattr(self, name)) for name in COLLECTIONS}

    def to_corpus(self) -> Corpus:
        corpus = Corpus()
        if self.project:
            corpus.project = self.project[0]
        corpus.events = {e.id: e for e in self.events}
        corpus.voices = {v.id: v for v in self.voices}
        corpus.sub_geographies = {g.id: g for g in self.sub_geographies}
        corpus.topics = {t.id: t for t in self.topics}
        corpus.outputs = {o.id: o for o in self.outputs}
        return corpus


def parse_bundle(data: Any) -> ImportBundle:
    """Parse bundle text or an already-decoded mapping into typed documents."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise BundleError(f"bundle is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise BundleError("bundle must be a JSON object")

    version = data.get("format_version")
    if not isinstance(version, str):
        raise BundleError("bundle is missing format_version")
    major = version.split(".", 1)[0]
    if major != FORMAT_VERSION.split(".", 1)[0]:
        raise BundleError(f"unsupported format_version {version!r}")

    unknown = set(data) - set(COLLECTIONS) - {"format_version"}
    if unknown:
        raise BundleError(f"unknown top-level keys: {sorted(unknown)}")

    bundle = ImportBundle(format_version=version)
    problems: list[str] = []
    for name in COLLECTIONS:
        raw_items = data.get(name, [])
        if not isinstance(raw_items, list):
            problems.append(f"{name}: expected an array")
            continue
        model_cls = _MODEL_BY_COLLECTION[name]
        parsed = []
        seen_ids: set[str] = set()
        for i, raw in enumerate(raw_items):
            if not isinstance(raw, dict):
                problems.append(f"{name}[{i}]: expected an object")
                continue
            try:
                doc = parse_doc(model_cls, raw)
            except ValidationError as exc:
                first = exc.errors()[0]
                loc = ".".join(str(p) for p in first["loc"])
                problems.append(f"{name}[{i}]: {loc}: {first['msg']}")
                continue
            if doc.id in seen_ids:
                problems.append(f"{name}[{i}]: duplicate id {doc.id!r}")
                continue
            seen_ids.add(doc.id)
            parsed.append(doc)
        setattr(bundle, name, parsed)
    if len(bundle.project) > 1:
        problems.append("project: more than one project document")
    if problems:
        raise BundleError("bundle failed to parse", details=problems)
    return bundle


def dump_bundle(bundle: ImportBundle) -> str:
    """Serialize a bundle to canonical JSON text (stable byte-for-byte)."""
    payload: dict[str, Any] = {"format_version": bundle.format_version}
    for name in COLLECTIONS:
        payload[name] = [dump_doc(doc) for doc in getattr(bundle, name)]
    return canonical_json(payload, pretty=True) + "\n"


def normalize_corpus(corpus: Corpus) -> Corpus:
    """Apply import-time derivations (denormalized phase, topic palette slots).

    A voice without a phase inherits its event's phase; a present but
    mismatched phase is left alone for validation to flag. Topics without
    a palette slot get one from insertion order.
    """
    for voice in corpus.voices.values():
        if not voice.phase_id:
            event = corpus.events.get(voice.event_id)
            if event is not None:
                voice.phase_id = event.phase_id
    used = {t.color_index for t in corpus.topics.values() if t.color_index is not None}
    next_index = 0
    for topic in corpus.topics.values():
        if topic.color_index is None:
            while next_index in used:
                next_index += 1
            topic.color_index = next_index
            used.add(next_index)
    return corpus


def corpus_from_envelopes(snapshot: dict[str, dict[str, DocumentEnvelope]]) -> Corpus:
    """Rebuild the typed corpus from a store snapshot."""
    corpus = Corpus()
    projects = list(snapshot.get("project", {}).values())
    if projects:
        corpus.project = parse_doc(Project, projects[0].body)  # type: ignore[assignment]
    for name, attr in (
        ("events", "events"),
        ("voices", "voices"),
        ("sub_geographies", "sub_geographies"),
        ("topics", "topics"),
        ("outputs", "outputs"),
    ):
        model_cls = _MODEL_BY_COLLECTION[name]
        docs = {}
        for envelope in snapshot.get(name, {}).values():
            doc = parse_doc(model_cls, envelope.body)
            docs[envelope.id] = doc
        setattr(corpus, attr, docs)
    return corpus


class DocumentStore:
    """Embedded single-node store; one JSON file per collection.

    Reads copy under a short lock; writes (and bulk replaces) serialize
    on the same lock, which also guarantees per-document write ordering.
    Pass ``directory=None`` for a purely in-memory store.
    """

    def __init__(self, directory: Optional[Path] = None):
        self._dir = Path(directory) if directory is not None else None
        self._lock = threading.RLock()
        self._collections: dict[str, dict[str, DocumentEnvelope]] = {
            name: {} for name in (*COLLECTIONS, *INTERNAL_COLLECTIONS)
        }
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def _collection(self, name: str) -> dict[str, DocumentEnvelope]:
        try:
            return self._collections[name]
        except KeyError:
            raise NotFoundError(f"unknown collection {name!r}") from None

    def _load(self) -> None:
        assert self._dir is not None
        for name in self._collections:
            path = self._dir / f"{name}.json"
            if not path.exists():
                continue
            raw = json.loads(path.read_text(encoding="utf-8"))
            docs = {}
            for id_, entry in raw.items():
                docs[id_] = DocumentEnvelope(
                    collection=name,
                    id=id_,
                    body=entry["body"],
                    revision=entry["revision"],
                    updated_at=dt.datetime.fromisoformat(entry["updated_at"]),
                )
            self._collections[name] = docs

    def _persist(self, name: str) -> None:
        if self._dir is None:
            return
        path = self._dir / f"{name}.json"
        payload = {
            id_: {
                "body": env.body,
                "revision": env.revision,
                "updated_at": env.updated_at.isoformat(),
            }
            for id_, env in self._collections[name].items()
        }
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)

    @staticmethod
    def _copy(envelope: DocumentEnvelope) -> DocumentEnvelope:
        return DocumentEnvelope(
            collection=envelope.collection,
            id=envelope.id,
            body=json.loads(json.dumps(envelope.body)),
            revision=envelope.revision,
            updated_at=envelope.updated_at,
        )

    def get(self, collection: str, id_: str) -> Optional[DocumentEnvelope]:
        with self._lock:
            envelope = self._collection(collection).get(id_)
            return self._copy(envelope) if envelope else None

    def list(self, collection: str) -> list[DocumentEnvelope]:
        with self._lock:
            return [self._copy(e) for e in self._collection(collection).values()]

    def snapshot(self) -> dict[str, dict[str, DocumentEnvelope]]:
        with self._lock:
            return {
                name: {id_: self._copy(e) for id_, e in docs.items()}
                for name, docs in self._collections.items()
            }

    def put(
        self,
        collection: str,
        id_: str,
        body: dict[str, Any],
        expected_revision: int,
    ) -> DocumentEnvelope:
        """Optimistic write; ``expected_revision=0`` creates the document."""
        with self._lock:
            docs = self._collection(collection)
            current = docs.get(id_)
            if expected_revision == 0:
                if current is not None:
                    raise RevisionConflict(collection, id_, 0, current.revision)
                new_revision = 1
            else:
                if current is None:
                    raise NotFoundError(f"{collection}/{id_} does not exist")
                if current.revision != expected_revision:
                    raise RevisionConflict(
                        collection, id_, expected_revision, current.revision
                    )
                new_revision = current.revision + 1
            envelope = DocumentEnvelope(
                collection=collection,
                id=id_,
                body=json.loads(json.dumps(body)),
                revision=new_revision,
                updated_at=utcnow(),
            )
            docs[id_] = envelope
            self._persist(collection)
            return self._copy(envelope)

    def apply(self, changes: Iterable[tuple[str, str, dict[str, Any]]]) -> None:
        """Server-side multi-document write: bump each target unconditionally.

        Used for atomic link repairs where the caller already holds a
        validated picture of the dataset; all changes land under one lock.
        """
        with self._lock:
            touched: set[str] = set()
            for collection, id_, body in changes:
                docs = self._collection(collection)
                current = docs.get(id_)
                revision = current.revision + 1 if current else 1
                docs[id_] = DocumentEnvelope(
                    collection=collection,
                    id=id_,
                    body=json.loads(json.dumps(body)),
                    revision=revision,
                    updated_at=utcnow(),
                )
                touched.add(collection)
            for name in touched:
                self._persist(name)

    def replace_dataset(self, documents: dict[str, list[tuple[str, dict[str, Any]]]]) -> None:
        """Swap the six public collections wholesale; revisions restart at 1."""
        with self._lock:
            for name in COLLECTIONS:
                now = utcnow()
                self._collections[name] = {
                    id_: DocumentEnvelope(
                        collection=name,
                        id=id_,
                        body=json.loads(json.dumps(body)),
                        revision=1,
                        updated_at=now,
                    )
                    for id_, body in documents.get(name, [])
                }
                self._persist(name)

    def merge_dataset(
        self, documents: dict[str, list[tuple[str, dict[str, Any]]]]
    ) -> dict[str, int]:
        """Upsert by id; only documents whose body actually changed get a bump."""
        changed: dict[str, int] = {}
        with self._lock:
            for name in COLLECTIONS:
                count = 0
                docs = self._collection(name)
                for id_, body in documents.get(name, []):
                    current = docs.get(id_)
                    if current is not None and canonical_json(current.body) == canonical_json(body):
                        continue
                    revision = current.revision + 1 if current else 1
                    docs[id_] = DocumentEnvelope(
                        collection=name,
                        id=id_,
                        body=json.loads(json.dumps(body)),
                        revision=revision,
                        updated_at=utcnow(),
                    )
                    count += 1
                if count:
                    self._persist(name)
                changed[name] = count
        return changed

    @property
    def lock(self) -> threading.RLock:
        return self._lock
