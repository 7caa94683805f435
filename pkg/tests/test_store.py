import json
import random
from concurrent.futures import ThreadPoolExecutor

import pytest

from helpers import corpus_bundle, random_corpus
from v2v.model import NotFoundError
from v2v.service import CorpusValidationError, DatasetService
from v2v.store import (
    BundleError,
    DocumentStore,
    RevisionConflict,
    dump_bundle,
    parse_bundle,
)


def make_service(tmp_path=None):
    return DatasetService(DocumentStore(tmp_path))


class TestBundleCodec:
    def test_unknown_fields_survive_under_extra(self):
        raw = {
            "format_version": "1.0.0",
            "project": [
                {
                    "id": "p1",
                    "name": "Plan",
                    "phases": [
                        {"id": "ph1", "name": "Kickoff", "start_date": "2024-01-01"}
                    ],
                    "census_tract": "36081",
                }
            ],
            "events": [{"id": "e1", "name": "Survey", "phase_id": "ph1"}],
            "voices": [],
            "sub_geographies": [],
            "topics": [],
            "outputs": [],
        }
        bundle = parse_bundle(json.dumps(raw))
        assert bundle.project[0].extra == {"census_tract": "36081"}
        round_tripped = parse_bundle(dump_bundle(bundle))
        assert round_tripped.project[0].extra == {"census_tract": "36081"}

    def test_version_mismatch_rejected(self):
        with pytest.raises(BundleError, match="format_version"):
            parse_bundle('{"format_version": "2.0.0"}')
        with pytest.raises(BundleError, match="format_version"):
            parse_bundle("{}")

    def test_duplicate_ids_rejected(self):
        raw = {
            "format_version": "1.0.0",
            "topics": [
                {"id": "t1", "name": "Housing"},
                {"id": "t1", "name": "Transit"},
            ],
        }
        with pytest.raises(BundleError) as excinfo:
            parse_bundle(json.dumps(raw))
        assert any("duplicate id" in d for d in excinfo.value.details)


class TestImportExport:
    def test_replace_counts_equal_array_lengths(self, rng):
        corpus = random_corpus(rng, n_voices=25)
        service = make_service()
        report = service.import_bundle(dump_bundle(corpus_bundle(corpus)))
        assert report.counts["voices"] == 25
        assert report.counts["project"] == 1
        assert report.counts["events"] == len(corpus.events)
        assert report.counts["topics"] == len(corpus.topics)

    def test_dangling_ref_rejected_and_dataset_unchanged(self, rng):
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(random_corpus(rng, n_voices=8))))
        before = dump_bundle(service.export_bundle())

        bad = random_corpus(rng, n_voices=5)
        next(iter(bad.voices.values())).topic_ids = ["missing-topic"]
        with pytest.raises(CorpusValidationError):
            service.import_bundle(dump_bundle(corpus_bundle(bad)))
        assert dump_bundle(service.export_bundle()) == before

    def test_merge_requires_existing_dataset(self, rng):
        service = make_service()
        bundle = dump_bundle(corpus_bundle(random_corpus(rng, n_voices=3)))
        with pytest.raises(BundleError, match="merge"):
            service.import_bundle(bundle, mode="merge")

    def test_merge_bumps_only_edited_documents(self):
        rng = random.Random(11)
        corpus = random_corpus(rng, n_voices=3037, n_outputs=8)
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(corpus)))
        before = {e.id: e.revision for e in service.store.list("voices")}

        edited_ids = sorted(corpus.voices)[:5]
        partial = corpus_bundle(corpus)
        partial.project = []
        partial.events = []
        partial.sub_geographies = []
        partial.topics = []
        partial.outputs = []
        partial.voices = [corpus.voices[i].model_copy(deep=True) for i in edited_ids]
        for voice in partial.voices:
            voice.text = voice.text + " (edited)"
        report = service.import_bundle(dump_bundle(partial), mode="merge")

        assert report.counts["voices"] == 5
        after = {e.id: e.revision for e in service.store.list("voices")}
        bumped = {vid for vid in after if after[vid] != before[vid]}
        assert bumped == set(edited_ids)
        assert all(after[vid] == before[vid] + 1 for vid in edited_ids)

    def test_merge_of_identical_documents_touches_nothing(self, rng):
        corpus = random_corpus(rng, n_voices=10)
        service = make_service()
        text = dump_bundle(corpus_bundle(corpus))
        service.import_bundle(text)
        before = {e.id: e.revision for e in service.store.list("voices")}
        report = service.import_bundle(text, mode="merge")
        assert report.counts == {name: 0 for name in report.counts}
        assert {e.id: e.revision for e in service.store.list("voices")} == before

    def test_export_import_export_is_byte_identical(self, rng):
        corpus = random_corpus(rng, n_voices=50)
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(corpus)))
        first = dump_bundle(service.export_bundle())

        second_service = make_service()
        second_service.import_bundle(first)
        second = dump_bundle(second_service.export_bundle())
        assert first == second

    def test_empty_dataset_exports_six_empty_arrays(self):
        service = make_service()
        service.import_bundle(
            '{"format_version": "1.0.0", "project": [], "events": [], "voices": [],'
            ' "sub_geographies": [], "topics": [], "outputs": []}'
        )
        exported = json.loads(dump_bundle(service.export_bundle()))
        for name in ("project", "events", "voices", "sub_geographies", "topics", "outputs"):
            assert exported[name] == []

    def test_randomized_round_trip_structural_equality(self):
        for seed in range(5):
            corpus = random_corpus(random.Random(seed), n_voices=40)
            service = make_service()
            service.import_bundle(dump_bundle(corpus_bundle(corpus)))
            exported = service.export_bundle()
            again = make_service()
            again.import_bundle(dump_bundle(exported))
            assert again.corpus() == service.corpus()

    def test_persistence_survives_reopen(self, rng, tmp_path):
        corpus = random_corpus(rng, n_voices=12)
        service = make_service(tmp_path)
        service.import_bundle(dump_bundle(corpus_bundle(corpus)))
        exported = dump_bundle(service.export_bundle())

        reopened = make_service(tmp_path)
        assert dump_bundle(reopened.export_bundle()) == exported
        assert reopened.dataset_loaded()


class TestWriteDocument:
    def test_create_with_expected_revision_zero(self, rng):
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(random_corpus(rng, n_voices=4))))
        envelope = service.write_document(
            "topics", "topic-new", {"id": "topic-new", "name": "Brand New", "color_index": 99}, 0
        )
        assert envelope.revision == 1

    def test_stale_revision_conflicts_without_writing(self, rng):
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(random_corpus(rng, n_voices=4))))
        voice_id = next(iter(service.corpus().voices))
        envelope = service.store.get("voices", voice_id)
        body = dict(envelope.body, text="changed once")
        service.write_document("voices", voice_id, body, envelope.revision)

        with pytest.raises(RevisionConflict):
            service.write_document("voices", voice_id, dict(body, text="lost?"), envelope.revision)
        assert service.store.get("voices", voice_id).body["text"] == "changed once"

    def test_invalid_write_rolls_back(self, rng):
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(random_corpus(rng, n_voices=4))))
        voice_id = next(iter(service.corpus().voices))
        envelope = service.store.get("voices", voice_id)
        bad_body = dict(envelope.body, event_id="no-such-event")
        with pytest.raises(CorpusValidationError):
            service.write_document("voices", voice_id, bad_body, envelope.revision)
        assert service.store.get("voices", voice_id).body == envelope.body
        assert service.store.get("voices", voice_id).revision == envelope.revision

    def test_missing_document_with_nonzero_revision(self):
        service = make_service()
        with pytest.raises(NotFoundError):
            service.store.put("voices", "ghost", {"id": "ghost"}, 3)

    def test_interleaved_writers_never_lose_updates(self, rng):
        service = make_service()
        service.import_bundle(dump_bundle(corpus_bundle(random_corpus(rng, n_voices=2))))
        voice_id = next(iter(service.corpus().voices))
        conflicts = 0

        def writer(n):
            nonlocal conflicts
            while True:
                envelope = service.store.get("voices", voice_id)
                body = dict(envelope.body, text=f"writer {n}")
                try:
                    service.write_document("voices", voice_id, body, envelope.revision)
                    return
                except RevisionConflict:
                    conflicts += 1

        with ThreadPoolExecutor(max_workers=16) as pool:
            list(pool.map(writer, range(50)))

        final = service.store.get("voices", voice_id)
        assert final.revision == 1 + 50
