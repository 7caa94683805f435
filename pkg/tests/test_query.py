import datetime as dt
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_corpus
from v2v.model import NotFoundError, Output, OutputKind, Topic, Voice
from v2v.query import (
    PaginationError,
    SortOrder,
    VoiceFilter,
    filter_voices,
    search_voices,
    strategies_for_goal,
    topic_distribution,
)

UTC = dt.timezone.utc


def naive_filter(corpus, flt: VoiceFilter):
    """Independent double-loop oracle for facet semantics."""
    hits = []
    for voice in corpus.voices.values():
        if flt.event_ids and voice.event_id not in flt.event_ids:
            continue
        if flt.sub_geography_ids and voice.sub_geography_id not in flt.sub_geography_ids:
            continue
        if flt.topic_ids and not (set(voice.topic_ids) & flt.topic_ids):
            continue
        if flt.output_ids and not (set(voice.output_ids) & flt.output_ids):
            continue
        if flt.cited is not None and bool(voice.output_ids) != flt.cited:
            continue
        if flt.query_text:
            haystack = voice.text.lower()
            if voice.location_text:
                haystack += "\x00" + voice.location_text.lower()
            if flt.query_text.lower() not in haystack:
                continue
        hits.append(voice.id)
    return set(hits)


class TestFilterVoices:
    def test_empty_filter_selects_everything(self, corpus):
        voices, total = filter_voices(corpus)
        assert total == len(corpus.voices)
        assert {v.id for v in voices} == set(corpus.voices)

    def test_topic_and_event_conjunction_matches_oracle(self):
        for seed in range(20):
            rng = random.Random(seed)
            corpus = random_corpus(rng, n_voices=80)
            flt = VoiceFilter(
                topic_ids={rng.choice(sorted(corpus.topics))},
                event_ids={rng.choice(sorted(corpus.events))},
            )
            voices, total = filter_voices(corpus, flt)
            assert {v.id for v in voices} == naive_filter(corpus, flt)
            assert total == len(voices)

    def test_cited_false_returns_exactly_the_uncited(self, rng):
        corpus = random_corpus(rng, n_voices=12, n_outputs=4)
        target = sorted(corpus.outputs)[0]
        for voice in corpus.voices.values():
            voice.output_ids = [target]
            voice.uncited_rationale = None
        uncited_ids = sorted(corpus.voices)[:3]
        for vid in uncited_ids:
            corpus.voices[vid].output_ids = []
        voices, total = filter_voices(corpus, VoiceFilter(cited=False))
        assert total == 3
        assert {v.id for v in voices} == set(uncited_ids)

    def test_unknown_facet_id_matches_nothing(self, corpus):
        voices, total = filter_voices(corpus, VoiceFilter(topic_ids={"no-such-topic"}))
        assert voices == [] and total == 0

    def test_phase_chronological_order(self, corpus):
        voices, _ = filter_voices(corpus, sort=SortOrder.PHASE_CHRONOLOGICAL)
        starts = {p.id: p.start_date for p in corpus.phases().values()}
        keys = [(starts[v.phase_id], v.collected_at, v.id) for v in voices]
        assert keys == sorted(keys)

    def test_collected_at_order(self, corpus):
        voices, _ = filter_voices(corpus, sort=SortOrder.COLLECTED_AT)
        keys = [(v.collected_at, v.id) for v in voices]
        assert keys == sorted(keys)

    def test_paging_partitions_the_result(self, corpus):
        full, total = filter_voices(corpus)
        paged = []
        for offset in range(0, total, 7):
            page, page_total = filter_voices(corpus, offset=offset, limit=7)
            assert page_total == total
            paged.extend(page)
        assert [v.id for v in paged] == [v.id for v in full]

    def test_invalid_pagination_bounds(self, corpus):
        with pytest.raises(PaginationError):
            filter_voices(corpus, offset=-1)
        with pytest.raises(PaginationError):
            filter_voices(corpus, limit=0)

    def test_facet_conjunction_equals_intersection(self, rng):
        corpus = random_corpus(rng, n_voices=100)
        topic = sorted(corpus.topics)[0]
        event = sorted(corpus.events)[0]
        only_topic, _ = filter_voices(corpus, VoiceFilter(topic_ids={topic}))
        only_event, _ = filter_voices(corpus, VoiceFilter(event_ids={event}))
        both, _ = filter_voices(corpus, VoiceFilter(topic_ids={topic}, event_ids={event}))
        assert {v.id for v in both} == {v.id for v in only_topic} & {v.id for v in only_event}


class TestSearchVoices:
    def test_empty_query_matches_all(self, corpus):
        assert {v.id for v in search_voices(corpus, "")} == set(corpus.voices)

    def test_substring_and_case_insensitive(self, rng):
        corpus = random_corpus(rng, n_voices=3)
        some = next(iter(corpus.voices.values()))
        some.text = "We need more STREET TREES on Elm."
        hits = search_voices(corpus, "tree")
        assert some.id in {v.id for v in hits}

    def test_covers_location_text(self, rng):
        corpus = random_corpus(rng, n_voices=3)
        some = next(iter(corpus.voices.values()))
        some.text = "No mention here."
        some.location_text = "Main St Library"
        assert some.id in {v.id for v in search_voices(corpus, "library")}

    def test_matches_naive_scan(self):
        for seed in range(10):
            rng = random.Random(seed)
            corpus = random_corpus(rng, n_voices=60)
            needle = rng.choice(["tree", "bus", "park", "zzz", "the"])
            expected = naive_filter(corpus, VoiceFilter(query_text=needle))
            assert {v.id for v in search_voices(corpus, needle)} == expected

    @given(st.text(alphabet="abcdefgh ", min_size=0, max_size=6), st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_extending_query_never_grows_results(self, prefix, seed):
        corpus = random_corpus(random.Random(seed % 5), n_voices=30)
        longer = prefix + "a"
        base = {v.id for v in search_voices(corpus, prefix)}
        extended = {v.id for v in search_voices(corpus, longer)}
        assert extended <= base


class TestTopicDistribution:
    def test_output_without_citations_is_empty(self, rng):
        corpus = random_corpus(rng, n_voices=6, n_outputs=3)
        orphan = sorted(corpus.outputs)[0]
        for voice in corpus.voices.values():
            voice.output_ids = [o for o in voice.output_ids if o != orphan]
            if not voice.output_ids:
                voice.uncited_rationale = None
        dist = topic_distribution(corpus, orphan)
        assert dist.entries == []
        assert dist.untagged_count == 0
        assert dist.total_cited_voices == 0

    def test_dominant_topic_sorts_first(self, rng):
        corpus = random_corpus(rng, n_voices=0, n_topics=3, n_outputs=3)
        goal_id = next(o.id for o in corpus.outputs.values() if o.kind is OutputKind.GOAL)
        corpus.outputs[goal_id].title = "Quality of Life"
        safety = next(t.id for t in corpus.topics.values() if t.name == "Public Safety and Health")
        other = next(t.id for t in corpus.topics.values() if t.id != safety)
        event_id = next(iter(corpus.events))
        phase_id = corpus.events[event_id].phase_id
        for i in range(9):
            topics = [safety] if i < 6 else [other]
            corpus.voices[f"v{i}"] = Voice(
                id=f"v{i}",
                text=f"comment {i}",
                event_id=event_id,
                phase_id=phase_id,
                topic_ids=topics,
                output_ids=[goal_id],
                collected_at=dt.datetime(2024, 2, 1, tzinfo=UTC),
            )
        dist = topic_distribution(corpus, goal_id)
        assert dist.entries[0].topic_id == safety
        assert dist.entries[0].pair_count == 6
        assert dist.total_cited_voices == 9

    def test_matches_brute_force_pair_count(self):
        corpus = random_corpus(random.Random(3), n_voices=50)
        for output_id in corpus.outputs:
            dist = topic_distribution(corpus, output_id)
            expected_pairs = {}
            expected_untagged = 0
            for voice in corpus.voices.values():
                if output_id not in voice.output_ids:
                    continue
                if not voice.topic_ids:
                    expected_untagged += 1
                for topic_id in voice.topic_ids:
                    expected_pairs[topic_id] = expected_pairs.get(topic_id, 0) + 1
            assert {e.topic_id: e.pair_count for e in dist.entries} == expected_pairs
            assert dist.untagged_count == expected_untagged
            # Entries ordered by count desc, ties by topic name.
            keys = [(-e.pair_count, e.topic_name, e.topic_id) for e in dist.entries]
            assert keys == sorted(keys)

    def test_pairs_plus_untagged_account_for_every_cited_voice(self, corpus):
        for output_id in corpus.outputs:
            dist = topic_distribution(corpus, output_id)
            citing = [v for v in corpus.voices.values() if output_id in v.output_ids]
            assert sum(e.pair_count for e in dist.entries) == sum(
                len(v.topic_ids) for v in citing
            )
            assert dist.untagged_count == sum(1 for v in citing if not v.topic_ids)

    def test_unknown_output_raises(self, corpus):
        with pytest.raises(NotFoundError):
            topic_distribution(corpus, "no-such-output")


class TestStrategiesForGoal:
    def test_goal_with_no_strategies(self, rng):
        corpus = random_corpus(rng, n_voices=2, n_outputs=3)
        goal_id = next(o.id for o in corpus.outputs.values() if o.kind is OutputKind.GOAL)
        for output in corpus.outputs.values():
            if output.kind is OutputKind.RECOMMENDATION:
                output.sparked_by = [s for s in output.sparked_by if s != goal_id]
        corpus.outputs[goal_id].next_steps = [
            n
            for n in corpus.outputs[goal_id].next_steps
            if corpus.outputs[n].kind is not OutputKind.RECOMMENDATION
        ]
        assert strategies_for_goal(corpus, goal_id) == []

    def test_goal_sparking_two_strategies(self, rng):
        corpus = random_corpus(rng, n_voices=0, n_outputs=3)
        goal_id = "goal-fresh"
        corpus.outputs[goal_id] = Output(
            id=goal_id,
            kind=OutputKind.GOAL,
            title="Fresh goal",
            phase_id=corpus.project.phases[0].id,
        )
        for i, title in enumerate(["Alpha strategy", "Beta strategy"]):
            corpus.outputs[f"s{i}"] = Output(
                id=f"s{i}",
                kind=OutputKind.RECOMMENDATION,
                title=title,
                sparked_by=[goal_id],
                phase_id=corpus.outputs[goal_id].phase_id,
            )
            corpus.outputs[goal_id].next_steps = sorted(
                set(corpus.outputs[goal_id].next_steps) | {f"s{i}"}
            )
        titles = [o.title for o in strategies_for_goal(corpus, goal_id)]
        assert titles == ["Alpha strategy", "Beta strategy"]

    def test_matches_scan_over_random_link_graph(self):
        for seed in range(10):
            corpus = random_corpus(random.Random(seed), n_voices=5, n_outputs=12)
            for goal in corpus.outputs.values():
                if goal.kind is not OutputKind.GOAL:
                    continue
                expected = sorted(
                    (
                        o.id
                        for o in corpus.outputs.values()
                        if o.kind is OutputKind.RECOMMENDATION and goal.id in o.sparked_by
                    ),
                )
                got = sorted(o.id for o in strategies_for_goal(corpus, goal.id))
                assert got == expected

    def test_wrong_kind_and_missing_goal(self, rng):
        corpus = random_corpus(rng, n_voices=2, n_outputs=4)
        insight = next(o.id for o in corpus.outputs.values() if o.kind is OutputKind.INSIGHT)
        with pytest.raises(ValueError, match="not a goal"):
            strategies_for_goal(corpus, insight)
        with pytest.raises(NotFoundError):
            strategies_for_goal(corpus, "ghost")


class TestHandshakeIdentity:
    def test_citation_sums_match(self):
        from v2v.model import citation_index

        for seed in range(15):
            corpus = random_corpus(random.Random(seed), n_voices=70)
            index = citation_index(corpus)
            assert sum(len(v) for v in index.values()) == sum(
                len(v.output_ids) for v in corpus.voices.values()
            )
