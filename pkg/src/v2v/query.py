"""Faceted filtering, keyword search, and per-output topic distributions.

Facet semantics: ids within one facet are a disjunction, facets combine
as a conjunction. Unknown ids simply match nothing, so a facet holding
only unknown ids empties the result instead of being ignored.
"""

from __future__ import annotations

import datetime as dt
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from .model import Corpus, NotFoundError, Output, OutputKind, Voice


class SortOrder(str, Enum):
    PHASE_CHRONOLOGICAL = "phase_chronological"
    COLLECTED_AT = "collected_at"


class PaginationError(ValueError):
    pass


class VoiceFilter(BaseModel):
    """Empty facets select everything; populated facets intersect."""

    event_ids: set[str] = Field(default_factory=set)
    sub_geography_ids: set[str] = Field(default_factory=set)
    topic_ids: set[str] = Field(default_factory=set)
    output_ids: set[str] = Field(default_factory=set)
    cited: Optional[bool] = None
    query_text: Optional[str] = None


class TopicCount(BaseModel):
    topic_id: str
    topic_name: str
    pair_count: int


class TopicDistribution(BaseModel):
    output_id: str
    entries: list[TopicCount]
    untagged_count: int
    total_cited_voices: int


def _matches_text(voice: Voice, needle: str) -> bool:
    if needle in voice.text.lower():
        return True
    return voice.location_text is not None and needle in voice.location_text.lower()


def voice_matches(voice: Voice, flt: VoiceFilter) -> bool:
    if flt.event_ids and voice.event_id not in flt.event_ids:
        return False
    if flt.sub_geography_ids and voice.sub_geography_id not in flt.sub_geography_ids:
        return False
    if flt.topic_ids and not flt.topic_ids.intersection(voice.topic_ids):
        return False
    if flt.output_ids and not flt.output_ids.intersection(voice.output_ids):
        return False
    if flt.cited is not None and voice.cited != flt.cited:
        return False
    if flt.query_text:
        if not _matches_text(voice, flt.query_text.lower()):
            return False
    return True


def filter_voices(
    corpus: Corpus,
    flt: Optional[VoiceFilter] = None,
    sort: SortOrder = SortOrder.PHASE_CHRONOLOGICAL,
    offset: int = 0,
    limit: Optional[int] = None,
) -> tuple[list[Voice], int]:
    """Filtered, deterministically ordered page of voices plus the stable total."""
    if offset < 0:
        raise PaginationError(f"offset must be >= 0, got {offset}")
    if limit is not None and limit < 1:
        raise PaginationError(f"limit must be >= 1, got {limit}")

    flt = flt or VoiceFilter()
    matched = [v for v in corpus.voices.values() if voice_matches(v, flt)]

    if sort is SortOrder.PHASE_CHRONOLOGICAL:
        starts = {p.id: p.start_date for p in corpus.phases().values()}
        far_future = dt.date.max

        def key(v: Voice):
            return (starts.get(v.phase_id, far_future), v.collected_at, v.id)

    else:

        def key(v: Voice):
            return (v.collected_at, v.id)

    matched.sort(key=key)
    total = len(matched)
    page = matched[offset:] if limit is None else matched[offset : offset + limit]
    return page, total


def search_voices(corpus: Corpus, query_text: str) -> list[Voice]:
    """Case-insensitive substring match over voice text and location mentions."""
    needle = query_text.lower()
    hits = [v for v in corpus.voices.values() if not needle or _matches_text(v, needle)]
    hits.sort(key=lambda v: v.id)
    return hits


def topic_distribution(corpus: Corpus, output_id: str) -> TopicDistribution:
    """Voice-topic pair counts among the voices citing one output.

    Cited voices without any topic land in an explicit untagged bucket so
    the stacked bar always accounts for every cited voice.
    """
    if output_id not in corpus.outputs:
        raise NotFoundError(f"output {output_id!r} does not exist")
    pair_counts: dict[str, int] = {}
    untagged = 0
    total = 0
    for voice in corpus.voices.values():
        if output_id not in voice.output_ids:
            continue
        total += 1
        if not voice.topic_ids:
            untagged += 1
            continue
        for topic_id in voice.topic_ids:
            pair_counts[topic_id] = pair_counts.get(topic_id, 0) + 1

    def name_of(topic_id: str) -> str:
        topic = corpus.topics.get(topic_id)
        return topic.name if topic else topic_id

    entries = [
        TopicCount(topic_id=tid, topic_name=name_of(tid), pair_count=count)
        for tid, count in pair_counts.items()
    ]
    entries.sort(key=lambda e: (-e.pair_count, e.topic_name, e.topic_id))
    return TopicDistribution(
        output_id=output_id,
        entries=entries,
        untagged_count=untagged,
        total_cited_voices=total,
    )


def strategies_for_goal(corpus: Corpus, goal_id: str) -> list[Output]:
    """Recommendations sparked by the given goal, sorted by title."""
    goal = corpus.outputs.get(goal_id)
    if goal is None:
        raise NotFoundError(f"output {goal_id!r} does not exist")
    if goal.kind is not OutputKind.GOAL:
        raise ValueError(f"output {goal_id!r} is a {goal.kind.value}, not a goal")
    strategies = [
        o
        for o in corpus.outputs.values()
        if o.kind is OutputKind.RECOMMENDATION and goal_id in o.sparked_by
    ]
    strategies.sort(key=lambda o: (o.title, o.id))
    return strategies
