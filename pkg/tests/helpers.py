"""Seeded generators for corpora and defect injection used across the suite."""

from __future__ import annotations

import datetime as dt
import random
from typing import Callable, Optional

from v2v.model import (
    Corpus,
    Event,
    LatLon,
    Output,
    OutputKind,
    Phase,
    PhaseStatus,
    Project,
    SubGeography,
    Topic,
    UncitedRationale,
    Voice,
)
from v2v.store import ImportBundle

WORDS = (
    "street trees park bench bus stop library crosswalk safety light flooding "
    "rent housing youth seniors market mural bike lane playground compost "
    "noise traffic corner garden clinic school shade transit plaza vendors"
).split()

EVENT_KINDS = ["survey", "workshop", "tabling", "town hall", "focus group"]

TOPIC_NAMES = [
    "Public Safety and Health",
    "Housing",
    "Transportation",
    "Open Space",
    "Economy",
    "Arts and Culture",
    "Youth",
    "Environment",
]

GEO_NAMES = ["Downtown", "Hillside", "Riverside", "Old Mill", "North End"]

RATIONALES = list(UncitedRationale)

BASE_DATE = dt.date(2024, 1, 15)
UTC = dt.timezone.utc


def _sentence(rng: random.Random, n_words: int = 8) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(n_words)).capitalize() + "."


def random_corpus(
    rng: random.Random,
    n_voices: int = 20,
    n_phases: Optional[int] = None,
    n_events: Optional[int] = None,
    n_topics: Optional[int] = None,
    n_geos: Optional[int] = None,
    n_outputs: Optional[int] = None,
    uncited_with_rationale: bool = True,
) -> Corpus:
    """A structurally valid corpus (may carry warnings, never errors)."""
    n_phases = n_phases if n_phases is not None else rng.randint(1, 4)
    n_events = n_events if n_events is not None else rng.randint(1, 6)
    n_topics = n_topics if n_topics is not None else rng.randint(2, len(TOPIC_NAMES))
    n_geos = n_geos if n_geos is not None else rng.randint(0, len(GEO_NAMES))
    n_outputs = n_outputs if n_outputs is not None else rng.randint(3, 12)

    phases = []
    for i in range(n_phases):
        start = BASE_DATE + dt.timedelta(days=90 * i)
        completed = i < n_phases - 1
        phases.append(
            Phase(
                id=f"phase-{i + 1}",
                name=f"Phase {i + 1}",
                start_date=start,
                end_date=start + dt.timedelta(days=80) if completed else None,
                status=PhaseStatus.COMPLETED if completed else PhaseStatus.ACTIVE,
                description=_sentence(rng, 5),
            )
        )
    project = Project(
        id="proj-1",
        name="Neighborhood Plan",
        description=_sentence(rng, 10),
        goals_overview=_sentence(rng, 12),
        phases=phases,
    )

    events = {}
    for i in range(n_events):
        phase = phases[rng.randrange(n_phases)]
        events[f"event-{i + 1}"] = Event(
            id=f"event-{i + 1}",
            name=f"{rng.choice(EVENT_KINDS).title()} {i + 1}",
            kind=rng.choice(EVENT_KINDS),
            phase_id=phase.id,
            description=_sentence(rng, 6),
            date=phase.start_date + dt.timedelta(days=rng.randint(0, 60)),
        )

    topics = {}
    for i in range(n_topics):
        topics[f"topic-{i + 1}"] = Topic(
            id=f"topic-{i + 1}",
            name=TOPIC_NAMES[i % len(TOPIC_NAMES)] + ("" if i < len(TOPIC_NAMES) else f" {i}"),
            description=_sentence(rng, 4),
            color_index=i,
        )

    geos = {}
    for i in range(n_geos):
        boundary = None
        if rng.random() < 0.6:
            lat0 = rng.uniform(-60, 60)
            lon0 = rng.uniform(-150, 150)
            boundary = [
                LatLon(lat=lat0 + rng.uniform(-0.05, 0.05), lon=lon0 + rng.uniform(-0.05, 0.05))
                for _ in range(rng.randint(3, 6))
            ]
        geos[f"geo-{i + 1}"] = SubGeography(
            id=f"geo-{i + 1}",
            name=GEO_NAMES[i % len(GEO_NAMES)],
            description=_sentence(rng, 4),
            boundary=boundary,
        )

    outputs: dict[str, Output] = {}
    kinds = [OutputKind.INSIGHT, OutputKind.GOAL, OutputKind.RECOMMENDATION]
    for i in range(n_outputs):
        kind = kinds[i % 3] if i < 3 else rng.choice(kinds)
        outputs[f"out-{i + 1}"] = Output(
            id=f"out-{i + 1}",
            kind=kind,
            title=f"{kind.value.title()} {i + 1}: {_sentence(rng, 3)[:-1]}",
            description=_sentence(rng, 10),
            voice_summary=_sentence(rng, 8),
            phase_id=rng.choice(phases).id,
        )
    # Reciprocal links: goals spark recommendations, insights spark goals.
    goals = [o for o in outputs.values() if o.kind is OutputKind.GOAL]
    insights = [o for o in outputs.values() if o.kind is OutputKind.INSIGHT]
    for output in outputs.values():
        if output.kind is OutputKind.RECOMMENDATION and goals and rng.random() < 0.8:
            goal = rng.choice(goals)
            output.sparked_by = sorted(set(output.sparked_by) | {goal.id})
            goal.next_steps = sorted(set(goal.next_steps) | {output.id})
    for goal in goals:
        if insights and rng.random() < 0.5:
            insight = rng.choice(insights)
            goal.sparked_by = sorted(set(goal.sparked_by) | {insight.id})
            insight.next_steps = sorted(set(insight.next_steps) | {goal.id})

    event_ids = list(events)
    output_ids = list(outputs)
    topic_ids = list(topics)
    geo_ids = list(geos)
    voices = {}
    for i in range(n_voices):
        event = events[rng.choice(event_ids)]
        cited = rng.random() < 0.8 and output_ids
        chosen_outputs = (
            sorted(rng.sample(output_ids, k=min(rng.randint(1, 2), len(output_ids))))
            if cited
            else []
        )
        rationale = None
        note = None
        if not chosen_outputs:
            if uncited_with_rationale or rng.random() < 0.5:
                rationale = rng.choice(RATIONALES)
                if rationale is UncitedRationale.OTHER:
                    note = _sentence(rng, 4)
        coords = None
        if rng.random() < 0.5:
            coords = LatLon(lat=rng.uniform(-85, 85), lon=rng.uniform(-179, 179))
        phase = next(p for p in phases if p.id == event.phase_id)
        voices[f"voice-{i + 1}"] = Voice(
            id=f"voice-{i + 1}",
            text=_sentence(rng, rng.randint(4, 14)),
            event_id=event.id,
            phase_id=event.phase_id,
            topic_ids=sorted(rng.sample(topic_ids, k=rng.randint(0, min(3, len(topic_ids))))),
            output_ids=chosen_outputs,
            sub_geography_id=rng.choice(geo_ids) if geo_ids and rng.random() < 0.4 else None,
            location_text=f"{rng.choice(WORDS)} & {rng.choice(WORDS)}" if rng.random() < 0.3 else None,
            coordinates=coords,
            audio_ref=f"/media/audio/{i + 1}.mp3" if rng.random() < 0.14 else None,
            uncited_rationale=rationale,
            uncited_note=note,
            collected_at=dt.datetime.combine(
                phase.start_date + dt.timedelta(days=rng.randint(0, 70)),
                dt.time(hour=rng.randint(8, 19), minute=rng.randint(0, 59)),
                tzinfo=UTC,
            ),
            extra={"source_row": i} if rng.random() < 0.3 else {},
        )

    return Corpus(
        project=project,
        events=events,
        voices=voices,
        sub_geographies=geos,
        topics=topics,
        outputs=outputs,
    )


def corpus_bundle(corpus: Corpus) -> ImportBundle:
    return ImportBundle(
        project=[corpus.project] if corpus.project else [],
        events=list(corpus.events.values()),
        voices=list(corpus.voices.values()),
        sub_geographies=list(corpus.sub_geographies.values()),
        topics=list(corpus.topics.values()),
        outputs=list(corpus.outputs.values()),
    )


# -- defect injection ---------------------------------------------------

def _first_voice(corpus: Corpus) -> Voice:
    return next(iter(corpus.voices.values()))


def _cited_voice(corpus: Corpus) -> Voice:
    return next(v for v in corpus.voices.values() if v.cited)


def _defect_dangling_event(c: Corpus) -> None:
    _first_voice(c).event_id = "nope"


def _defect_phase_mismatch(c: Corpus) -> None:
    voice = _first_voice(c)
    other = next(p.id for p in c.project.phases if p.id != voice.phase_id)
    voice.phase_id = other


def _defect_dangling_topic(c: Corpus) -> None:
    voice = _first_voice(c)
    voice.topic_ids = sorted(set(voice.topic_ids) | {"nope-topic"})


def _defect_dangling_output_on_voice(c: Corpus) -> None:
    voice = _first_voice(c)
    voice.output_ids = sorted(set(voice.output_ids) | {"nope-output"})


def _defect_dangling_geo(c: Corpus) -> None:
    _first_voice(c).sub_geography_id = "nope-geo"


def _defect_bad_coordinates(c: Corpus) -> None:
    _first_voice(c).coordinates = LatLon(lat=95.0, lon=10.0)


def _defect_rationale_on_cited(c: Corpus) -> None:
    _cited_voice(c).uncited_rationale = UncitedRationale.OTHER


def _defect_self_reference(c: Corpus) -> None:
    output = next(iter(c.outputs.values()))
    output.sparked_by = sorted(set(output.sparked_by) | {output.id})


def _defect_reciprocity(c: Corpus) -> None:
    ids = list(c.outputs)
    a, b = c.outputs[ids[0]], c.outputs[ids[1]]
    a.next_steps = sorted(set(a.next_steps) | {b.id})
    b.sparked_by = sorted(set(b.sparked_by) - {a.id})


def _defect_dangling_output_link(c: Corpus) -> None:
    output = next(iter(c.outputs.values()))
    output.sparked_by = sorted(set(output.sparked_by) | {"nope-output"})


def _defect_dangling_event_phase(c: Corpus) -> None:
    next(iter(c.events.values())).phase_id = "nope-phase"


def _defect_duplicate_topic_name(c: Corpus) -> None:
    ids = list(c.topics)
    c.topics[ids[1]].name = c.topics[ids[0]].name


def _defect_phase_dates(c: Corpus) -> None:
    phase = c.project.phases[0]
    phase.end_date = phase.start_date - dt.timedelta(days=1)


def _defect_completed_without_end(c: Corpus) -> None:
    phase = c.project.phases[0]
    phase.status = PhaseStatus.COMPLETED
    phase.end_date = None


def _defect_duplicate_phase_name(c: Corpus) -> None:
    c.project.phases[1].name = c.project.phases[0].name


def _defect_phase_order(c: Corpus) -> None:
    c.project.phases[1].start_date = c.project.phases[0].start_date - dt.timedelta(days=30)
    c.project.phases[1].end_date = None
    c.project.phases[1].status = PhaseStatus.ACTIVE


def _defect_short_boundary(c: Corpus) -> None:
    geo = next(iter(c.sub_geographies.values()))
    geo.boundary = [LatLon(lat=1.0, lon=1.0), LatLon(lat=2.0, lon=2.0)]


# Defect name -> (mutator, expected error code). The corpus handed to a
# mutator is guaranteed to have >=2 phases, >=2 topics, >=2 outputs,
# >=1 sub-geography, and at least one cited voice.
DEFECTS: dict[str, tuple[Callable[[Corpus], None], str]] = {
    "dangling_event": (_defect_dangling_event, "dangling_event_ref"),
    "phase_mismatch": (_defect_phase_mismatch, "phase_mismatch"),
    "dangling_topic": (_defect_dangling_topic, "dangling_topic_ref"),
    "dangling_output_on_voice": (_defect_dangling_output_on_voice, "dangling_output_ref"),
    "dangling_sub_geography": (_defect_dangling_geo, "dangling_sub_geography_ref"),
    "bad_coordinates": (_defect_bad_coordinates, "coordinates_range"),
    "rationale_on_cited": (_defect_rationale_on_cited, "rationale_on_cited"),
    "self_reference": (_defect_self_reference, "self_reference"),
    "reciprocity_breach": (_defect_reciprocity, "reciprocity_breach"),
    "dangling_output_link": (_defect_dangling_output_link, "dangling_output_ref"),
    "dangling_event_phase": (_defect_dangling_event_phase, "dangling_phase_ref"),
    "duplicate_topic_name": (_defect_duplicate_topic_name, "duplicate_topic_name"),
    "phase_dates": (_defect_phase_dates, "phase_dates"),
    "completed_without_end": (_defect_completed_without_end, "completed_without_end"),
    "duplicate_phase_name": (_defect_duplicate_phase_name, "duplicate_phase_name"),
    "phase_order": (_defect_phase_order, "phase_order"),
    "short_boundary": (_defect_short_boundary, "boundary_vertices"),
}


def defect_ready_corpus(rng: random.Random) -> Corpus:
    """A valid corpus rich enough for every defect mutator to apply."""
    corpus = random_corpus(
        rng,
        n_voices=12,
        n_phases=3,
        n_events=4,
        n_topics=4,
        n_geos=2,
        n_outputs=6,
    )
    if not any(v.cited for v in corpus.voices.values()):
        voice = _first_voice(corpus)
        voice.output_ids = [next(iter(corpus.outputs))]
        voice.uncited_rationale = None
        voice.uncited_note = None
    return corpus
