"""Dataset operations shared by the HTTP API and the CLI.

All mutations run under the store lock: build a candidate corpus, validate
it, and only then commit. A failed validation therefore never leaves a
partial write behind, and any successful mutation keeps the corpus free of
referential errors.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .model import (
    COLLECTIONS,
    Corpus,
    LatLon,
    NotFoundError,
    Output,
    ValidationReport,
    Voice,
    validate_corpus,
)
from .store import (
    BundleError,
    DocumentEnvelope,
    DocumentStore,
    ImportBundle,
    RevisionConflict,
    dump_doc,
    normalize_corpus,
    parse_bundle,
    corpus_from_envelopes,
    utcnow,
)

VOICE_EDITABLE_FIELDS = ("topic_ids", "output_ids", "uncited_rationale", "uncited_note")
OUTPUT_EDITABLE_FIELDS = (
    "kind",
    "title",
    "description",
    "voice_summary",
    "phase_id",
    "sparked_by",
    "next_steps",
)


class CorpusValidationError(Exception):
    """A mutation would break corpus invariants; nothing was written."""

    def __init__(self, report: ValidationReport):
        issues = "; ".join(e.message for e in report.errors[:5])
        super().__init__(f"validation failed: {issues}")
        self.report = report


@dataclass
class ImportReport:
    mode: str
    counts: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def check_bundle(bundle: ImportBundle) -> tuple[Corpus, ValidationReport]:
    """Normalize a parsed bundle and run full corpus validation."""
    corpus = normalize_corpus(bundle.to_corpus())
    return corpus, validate_corpus(corpus)


class DatasetService:
    """High-level corpus operations over a document store."""

    def __init__(self, store: Optional[DocumentStore] = None, data_dir: Optional[Path] = None):
        if store is None:
            store = DocumentStore(data_dir)
        self.store = store

    # -- reads ---------------------------------------------------------

    def corpus(self) -> Corpus:
        return corpus_from_envelopes(self.store.snapshot())

    def dataset_loaded(self) -> bool:
        return bool(self.store.list("project"))

    def revisions(self, collection: str) -> dict[str, int]:
        return {e.id: e.revision for e in self.store.list(collection)}

    # -- bulk import / export ------------------------------------------

    def import_bundle(self, data: Any, mode: str = "replace", geocoder: Any = None) -> ImportReport:
        """Atomically replace or merge the dataset from a bundle.

        Raises BundleError on parse problems and CorpusValidationError when
        the resulting corpus would be invalid; in both cases the store is
        untouched. When a geocoder is supplied, voices carrying a location
        mention but no coordinates get resolved before commit (unresolved
        ones simply stay off the map).
        """
        if mode not in ("replace", "merge"):
            raise ValueError(f"unknown import mode {mode!r}")
        bundle = data if isinstance(data, ImportBundle) else parse_bundle(data)

        with self.store.lock:
            if mode == "merge":
                if not self.dataset_loaded():
                    raise BundleError("merge requires an existing dataset")
                candidate = self.corpus()
                if bundle.project:
                    candidate.project = bundle.project[0]
                for name in ("events", "voices", "sub_geographies", "topics", "outputs"):
                    target = getattr(candidate, name)
                    for doc in getattr(bundle, name):
                        target[doc.id] = doc
            else:
                candidate = bundle.to_corpus()

            candidate = normalize_corpus(candidate)
            if geocoder is not None:
                self._geocode_voices(candidate, geocoder)
            self._assign_sub_geographies(candidate)
            report = validate_corpus(candidate)
            if not report.ok:
                raise CorpusValidationError(report)

            documents = self._documents_for(candidate, bundle, mode)
            if mode == "replace":
                self.store.replace_dataset(documents)
                counts = {name: len(docs) for name, docs in documents.items()}
            else:
                counts = self.store.merge_dataset(documents)

        return ImportReport(
            mode=mode,
            counts=counts,
            warnings=[w.message for w in report.warnings],
        )

    @staticmethod
    def _geocode_voices(candidate: Corpus, geocoder: Any) -> None:
        for voice in candidate.voices.values():
            if voice.coordinates is not None:
                continue
            if not voice.location_text or not voice.location_text.strip():
                continue
            result = geocoder.geocode(voice.location_text)
            if result is not None:
                voice.coordinates = LatLon(lat=result.lat, lon=result.lon)

    @staticmethod
    def _assign_sub_geographies(candidate: Corpus) -> None:
        """Spatial fallback: tag geotagged voices with the containing area.

        A manually assigned sub_geography_id always wins; only voices
        without one are matched against boundaries, first hit in
        insertion order.
        """
        from .geo import point_in_polygon

        bounded = [g for g in candidate.sub_geographies.values() if g.boundary]
        if not bounded:
            return
        for voice in candidate.voices.values():
            if voice.sub_geography_id is not None or voice.coordinates is None:
                continue
            for area in bounded:
                if point_in_polygon(voice.coordinates.lat, voice.coordinates.lon, area.boundary):
                    voice.sub_geography_id = area.id
                    break

    @staticmethod
    def _documents_for(
        candidate: Corpus, bundle: ImportBundle, mode: str
    ) -> dict[str, list[tuple[str, dict[str, Any]]]]:
        """Bodies to write, taken from the normalized candidate corpus."""
        by_collection: dict[str, dict[str, Any]] = {
            "project": {candidate.project.id: candidate.project} if candidate.project else {},
            "events": candidate.events,
            "voices": candidate.voices,
            "sub_geographies": candidate.sub_geographies,
            "topics": candidate.topics,
            "outputs": candidate.outputs,
        }
        documents: dict[str, list[tuple[str, dict[str, Any]]]] = {}
        for name in COLLECTIONS:
            pool = by_collection[name]
            if mode == "merge":
                wanted = [doc.id for doc in getattr(bundle, name)]
            else:
                wanted = list(pool)
            documents[name] = [(id_, dump_doc(pool[id_])) for id_ in wanted]
        return documents

    def export_bundle(self) -> ImportBundle:
        """Current dataset as a bundle; import(export()) is an identity."""
        corpus = self.corpus()
        return ImportBundle(
            project=[corpus.project] if corpus.project else [],
            events=list(corpus.events.values()),
            voices=list(corpus.voices.values()),
            sub_geographies=list(corpus.sub_geographies.values()),
            topics=list(corpus.topics.values()),
            outputs=list(corpus.outputs.values()),
        )

    # -- validated single-document writes ------------------------------

    def write_document(
        self, collection: str, id_: str, body: dict[str, Any], expected_revision: int
    ) -> DocumentEnvelope:
        """Optimistic write that keeps the corpus valid or rolls back."""
        with self.store.lock:
            if collection in COLLECTIONS:
                self._validate_with(collection, {id_: body})
            return self.store.put(collection, id_, body, expected_revision)

    def patch_voice(
        self, voice_id: str, changes: dict[str, Any], expected_revision: int
    ) -> tuple[DocumentEnvelope, Voice]:
        unknown = set(changes) - set(VOICE_EDITABLE_FIELDS)
        if unknown:
            raise ValueError(f"fields not editable on a voice: {sorted(unknown)}")
        with self.store.lock:
            envelope = self.store.get("voices", voice_id)
            if envelope is None:
                raise NotFoundError(f"voice {voice_id!r} does not exist")
            corpus = self.corpus()
            updated = Voice(**{**corpus.voices[voice_id].model_dump(), **changes})
            body = dump_doc(updated)
            self._validate_with("voices", {voice_id: body})
            new_envelope = self.store.put("voices", voice_id, body, expected_revision)
            return new_envelope, updated

    def patch_output(
        self, output_id: str, changes: dict[str, Any], expected_revision: int
    ) -> tuple[DocumentEnvelope, Output]:
        unknown = set(changes) - set(OUTPUT_EDITABLE_FIELDS)
        if unknown:
            raise ValueError(f"fields not editable on an output: {sorted(unknown)}")
        with self.store.lock:
            envelope = self.store.get("outputs", output_id)
            if envelope is None:
                raise NotFoundError(f"output {output_id!r} does not exist")
            if envelope.revision != expected_revision:
                raise RevisionConflict("outputs", output_id, expected_revision, envelope.revision)
            corpus = self.corpus()
            current = corpus.outputs[output_id]
            updated = Output(**{**current.model_dump(), **changes})
            return self._commit_output(corpus, updated, expected_revision)

    def create_output(self, fields: dict[str, Any], output_id: Optional[str] = None) -> tuple[DocumentEnvelope, Output]:
        output_id = output_id or f"out-{uuid.uuid4().hex[:12]}"
        created = Output(id=output_id, **fields)
        with self.store.lock:
            if self.store.get("outputs", output_id) is not None:
                raise ValueError(f"output {output_id!r} already exists")
            corpus = self.corpus()
            return self._commit_output(corpus, created, 0)

    def _commit_output(
        self, corpus: Corpus, updated: Output, expected_revision: int
    ) -> tuple[DocumentEnvelope, Output]:
        """Write an output and repair sparked_by/next_steps reciprocity atomically."""
        previous = corpus.outputs.get(updated.id)
        repairs: dict[str, Output] = {}

        def adjust(other_id: str, attr: str, add: bool) -> None:
            other = repairs.get(other_id) or corpus.outputs.get(other_id)
            if other is None or other.id == updated.id:
                return
            links = set(getattr(other, attr))
            links.add(updated.id) if add else links.discard(updated.id)
            repairs[other_id] = other.model_copy(update={attr: sorted(links)})

        old_sparked = set(previous.sparked_by) if previous else set()
        old_next = set(previous.next_steps) if previous else set()
        for ref in set(updated.sparked_by) - old_sparked:
            adjust(ref, "next_steps", add=True)
        for ref in old_sparked - set(updated.sparked_by):
            adjust(ref, "next_steps", add=False)
        for ref in set(updated.next_steps) - old_next:
            adjust(ref, "sparked_by", add=True)
        for ref in old_next - set(updated.next_steps):
            adjust(ref, "sparked_by", add=False)

        candidate_docs = {updated.id: dump_doc(updated)}
        for other_id, other in repairs.items():
            candidate_docs[other_id] = dump_doc(other)
        self._validate_with("outputs", candidate_docs)

        envelope = self.store.put("outputs", updated.id, candidate_docs[updated.id], expected_revision)
        self.store.apply(
            ("outputs", other_id, body)
            for other_id, body in candidate_docs.items()
            if other_id != updated.id
        )
        return envelope, updated

    def _validate_with(self, collection: str, bodies: dict[str, dict[str, Any]]) -> None:
        """Validate the corpus as it would look with the given bodies applied."""
        snapshot = self.store.snapshot()
        for id_, body in bodies.items():
            snapshot.setdefault(collection, {})[id_] = DocumentEnvelope(
                collection=collection,
                id=id_,
                body=body,
                revision=0,
                updated_at=utcnow(),
            )
        candidate = corpus_from_envelopes(snapshot)
        report = validate_corpus(candidate)
        if not report.ok:
            raise CorpusValidationError(report)

    # -- feedback (free-form community submissions) ---------------------

    def add_feedback(self, payload: dict[str, Any]) -> str:
        feedback_id = f"fb-{uuid.uuid4().hex[:12]}"
        self.store.put("feedback", feedback_id, payload, 0)
        return feedback_id
