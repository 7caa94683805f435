"""Domain model for the six engagement-data collections.

A corpus ties together one project (with its ordered phases), the events
held during those phases, the community voices gathered at the events,
the topics and sub-geographies used to tag voices, and the planning
outputs that cite voices. The citation edge lives on the voice
(``output_ids``); everything on the output side is derived from it.
"""

from __future__ import annotations

import datetime as dt
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

COLLECTIONS = (
    "project",
    "events",
    "voices",
    "sub_geographies",
    "topics",
    "outputs",
)


class NotFoundError(KeyError):
    """Raised when an id does not resolve in the corpus."""


class PhaseStatus(str, Enum):
    PLANNED = "planned"
    ACTIVE = "active"
    COMPLETED = "completed"


class OutputKind(str, Enum):
    INSIGHT = "insight"
    GOAL = "goal"
    RECOMMENDATION = "recommendation"


class UncitedRationale(str, Enum):
    INSUFFICIENT_CONTEXT = "insufficient_context"
    OUTSIDE_PROJECT_SCOPE = "outside_project_scope"
    DUPLICATE_OF_CITED = "duplicate_of_cited"
    ADDRESSED_ELSEWHERE = "addressed_elsewhere"
    OTHER = "other"


def _sorted_id_set(value: list[str]) -> list[str]:
    return sorted(set(value))


class LatLon(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lat: float
    lon: float

    def in_range(self) -> bool:
        return -90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0


class Phase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    name: str
    start_date: dt.date
    end_date: Optional[dt.date] = None
    status: PhaseStatus = PhaseStatus.PLANNED
    description: str = ""
    extra: dict[str, Any] = Field(default_factory=dict)


class Project(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    name: str
    description: str = ""
    goals_overview: str = ""
    phases: list[Phase] = Field(default_factory=list)
    extra: dict[str, Any] = Field(default_factory=dict)


class Event(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    name: str
    kind: str = ""
    phase_id: str = ""
    description: str = ""
    date: Optional[dt.date] = None
    extra: dict[str, Any] = Field(default_factory=dict)


class SubGeography(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    name: str
    description: str = ""
    boundary: Optional[list[LatLon]] = None
    extra: dict[str, Any] = Field(default_factory=dict)


class Topic(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    name: str
    description: str = ""
    color_index: Optional[int] = None
    extra: dict[str, Any] = Field(default_factory=dict)


class Voice(BaseModel):
    """A single piece of community input with its traceability metadata."""

    model_config = ConfigDict(extra="forbid")

    id: str
    text: str
    event_id: str
    # Denormalized from the event for sort/filter speed; revalidated on change.
    phase_id: str = ""
    topic_ids: list[str] = Field(default_factory=list)
    output_ids: list[str] = Field(default_factory=list)
    sub_geography_id: Optional[str] = None
    location_text: Optional[str] = None
    coordinates: Optional[LatLon] = None
    audio_ref: Optional[str] = None
    uncited_rationale: Optional[UncitedRationale] = None
    uncited_note: Optional[str] = None
    collected_at: dt.datetime
    extra: dict[str, Any] = Field(default_factory=dict)

    _dedupe_topics = field_validator("topic_ids")(_sorted_id_set)
    _dedupe_outputs = field_validator("output_ids")(_sorted_id_set)

    @field_validator("collected_at")
    @classmethod
    def _force_utc(cls, value: dt.datetime) -> dt.datetime:
        if value.tzinfo is None:
            return value.replace(tzinfo=dt.timezone.utc)
        return value.astimezone(dt.timezone.utc)

    @property
    def cited(self) -> bool:
        return bool(self.output_ids)


class Output(BaseModel):
    """A synthesized planning product: insight, goal, or recommendation."""

    model_config = ConfigDict(extra="forbid")

    id: str
    kind: OutputKind
    title: str
    description: str = ""
    voice_summary: str = ""
    sparked_by: list[str] = Field(default_factory=list)
    next_steps: list[str] = Field(default_factory=list)
    phase_id: str = ""
    extra: dict[str, Any] = Field(default_factory=dict)

    _dedupe_sparked = field_validator("sparked_by")(_sorted_id_set)
    _dedupe_next = field_validator("next_steps")(_sorted_id_set)


class CorpusStats(BaseModel):
    total_voices: int
    audio_voices: int
    cited_voices: int
    uncited_voices: int
    audio_fraction: float
    uncited_fraction: float


class ValidationIssue(BaseModel):
    code: str
    collection: str
    id: str
    message: str


class ValidationReport(BaseModel):
    errors: list[ValidationIssue] = Field(default_factory=list)
    warnings: list[ValidationIssue] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error_codes(self) -> set[str]:
        return {issue.code for issue in self.errors}

    def warning_codes(self) -> set[str]:
        return {issue.code for issue in self.warnings}


class Corpus(BaseModel):
    """In-memory snapshot of all six collections, keyed by document id."""

    model_config = ConfigDict(extra="forbid")

    project: Optional[Project] = None
    events: dict[str, Event] = Field(default_factory=dict)
    voices: dict[str, Voice] = Field(default_factory=dict)
    sub_geographies: dict[str, SubGeography] = Field(default_factory=dict)
    topics: dict[str, Topic] = Field(default_factory=dict)
    outputs: dict[str, Output] = Field(default_factory=dict)

    def is_empty(self) -> bool:
        return (
            self.project is None
            and not self.events
            and not self.voices
            and not self.sub_geographies
            and not self.topics
            and not self.outputs
        )

    def phases(self) -> dict[str, Phase]:
        if self.project is None:
            return {}
        return {phase.id: phase for phase in self.project.phases}

    def phase_order(self) -> dict[str, int]:
        """Position of each phase in the project's chronological sequence."""
        if self.project is None:
            return {}
        return {phase.id: i for i, phase in enumerate(self.project.phases)}


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Check every cross-collection invariant, returning errors and warnings.

    Dangling references, phase mismatches, self-links, reciprocity
    breaches, and malformed geometry/dates are errors. Uncited voices
    without a rationale and kind-link convention breaches are warnings.
    """
    report = ValidationReport()

    def error(code: str, collection: str, id_: str, message: str) -> None:
        report.errors.append(
            ValidationIssue(code=code, collection=collection, id=id_, message=message)
        )

    def warn(code: str, collection: str, id_: str, message: str) -> None:
        report.warnings.append(
            ValidationIssue(code=code, collection=collection, id=id_, message=message)
        )

    project = corpus.project
    if project is None and not corpus.is_empty():
        error("missing_project", "project", "", "dataset has documents but no project")

    phases = corpus.phases()
    if project is not None:
        seen_names: set[str] = set()
        previous_start: Optional[dt.date] = None
        for phase in project.phases:
            if phase.name in seen_names:
                error(
                    "duplicate_phase_name",
                    "project",
                    project.id,
                    f"phase name {phase.name!r} appears more than once",
                )
            seen_names.add(phase.name)
            if previous_start is not None and phase.start_date < previous_start:
                error(
                    "phase_order",
                    "project",
                    project.id,
                    f"phase {phase.name!r} starts before its predecessor",
                )
            previous_start = phase.start_date
            if phase.end_date is not None and phase.end_date < phase.start_date:
                error(
                    "phase_dates",
                    "project",
                    phase.id,
                    f"phase {phase.name!r} ends before it starts",
                )
            if phase.status is PhaseStatus.COMPLETED and phase.end_date is None:
                error(
                    "completed_without_end",
                    "project",
                    phase.id,
                    f"completed phase {phase.name!r} has no end date",
                )

    topic_names: set[str] = set()
    for topic in corpus.topics.values():
        if topic.name in topic_names:
            error(
                "duplicate_topic_name",
                "topics",
                topic.id,
                f"topic name {topic.name!r} appears more than once",
            )
        topic_names.add(topic.name)

    for event in corpus.events.values():
        if event.phase_id not in phases:
            error(
                "dangling_phase_ref",
                "events",
                event.id,
                f"event references unknown phase {event.phase_id!r}",
            )

    for geo in corpus.sub_geographies.values():
        if geo.boundary is not None:
            if len(geo.boundary) < 3:
                error(
                    "boundary_vertices",
                    "sub_geographies",
                    geo.id,
                    "boundary polygon has fewer than 3 vertices",
                )
            for vertex in geo.boundary:
                if not vertex.in_range():
                    error(
                        "boundary_range",
                        "sub_geographies",
                        geo.id,
                        "boundary vertex outside lat/lon range",
                    )
                    break

    phase_order = corpus.phase_order()

    for output in corpus.outputs.values():
        if output.phase_id and output.phase_id not in phases:
            error(
                "dangling_phase_ref",
                "outputs",
                output.id,
                f"output references unknown phase {output.phase_id!r}",
            )
        for field_name in ("sparked_by", "next_steps"):
            for ref in getattr(output, field_name):
                if ref == output.id:
                    error(
                        "self_reference",
                        "outputs",
                        output.id,
                        f"output lists itself in {field_name}",
                    )
                elif ref not in corpus.outputs:
                    error(
                        "dangling_output_ref",
                        "outputs",
                        output.id,
                        f"{field_name} references unknown output {ref!r}",
                    )
        for ref in output.sparked_by:
            other = corpus.outputs.get(ref)
            if other is not None and output.id not in other.next_steps:
                error(
                    "reciprocity_breach",
                    "outputs",
                    output.id,
                    f"{ref!r} sparked this output but does not list it in next_steps",
                )
        for ref in output.next_steps:
            other = corpus.outputs.get(ref)
            if other is not None and output.id not in other.sparked_by:
                error(
                    "reciprocity_breach",
                    "outputs",
                    output.id,
                    f"{ref!r} is a next step but does not list this output in sparked_by",
                )
        if output.kind is OutputKind.RECOMMENDATION:
            for ref in output.sparked_by:
                other = corpus.outputs.get(ref)
                if other is not None and other.kind is not OutputKind.GOAL:
                    warn(
                        "kind_link_convention",
                        "outputs",
                        output.id,
                        f"recommendation sparked by {other.kind.value} {ref!r}, expected a goal",
                    )

    for voice in corpus.voices.values():
        event = corpus.events.get(voice.event_id)
        if event is None:
            error(
                "dangling_event_ref",
                "voices",
                voice.id,
                f"voice references unknown event {voice.event_id!r}",
            )
        elif voice.phase_id != event.phase_id:
            error(
                "phase_mismatch",
                "voices",
                voice.id,
                f"voice phase {voice.phase_id!r} differs from event phase {event.phase_id!r}",
            )
        for topic_id in voice.topic_ids:
            if topic_id not in corpus.topics:
                error(
                    "dangling_topic_ref",
                    "voices",
                    voice.id,
                    f"voice references unknown topic {topic_id!r}",
                )
        for output_id in voice.output_ids:
            if output_id not in corpus.outputs:
                error(
                    "dangling_output_ref",
                    "voices",
                    voice.id,
                    f"voice cites unknown output {output_id!r}",
                )
        if voice.sub_geography_id is not None and voice.sub_geography_id not in corpus.sub_geographies:
            error(
                "dangling_sub_geography_ref",
                "voices",
                voice.id,
                f"voice references unknown sub-geography {voice.sub_geography_id!r}",
            )
        if voice.coordinates is not None and not voice.coordinates.in_range():
            error(
                "coordinates_range",
                "voices",
                voice.id,
                "coordinates outside lat/lon range",
            )
        if voice.cited and voice.uncited_rationale is not None:
            error(
                "rationale_on_cited",
                "voices",
                voice.id,
                "uncited rationale present on a cited voice",
            )
        if not voice.cited and voice.uncited_rationale is None:
            warn(
                "missing_rationale",
                "voices",
                voice.id,
                "uncited voice has no rationale",
            )
        # An output citing voices from a later phase is allowed but flagged.
        voice_pos = phase_order.get(voice.phase_id)
        if voice_pos is not None:
            for output_id in voice.output_ids:
                output = corpus.outputs.get(output_id)
                if output is None:
                    continue
                output_pos = phase_order.get(output.phase_id)
                if output_pos is not None and voice_pos > output_pos:
                    warn(
                        "later_phase_citation",
                        "voices",
                        voice.id,
                        f"voice from a later phase cited by output {output_id!r}",
                    )

    return report


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Counts and ratios over the voice collection; order-independent."""
    total = len(corpus.voices)
    audio = sum(1 for v in corpus.voices.values() if v.audio_ref is not None)
    cited = sum(1 for v in corpus.voices.values() if v.cited)
    uncited = total - cited
    return CorpusStats(
        total_voices=total,
        audio_voices=audio,
        cited_voices=cited,
        uncited_voices=uncited,
        audio_fraction=audio / total if total else 0.0,
        uncited_fraction=uncited / total if total else 0.0,
    )


def citation_index(corpus: Corpus) -> dict[str, set[str]]:
    """Inverse of the voice-side citation edge: output id -> citing voice ids.

    Every output appears as a key, so outputs nobody cites map to an
    empty set; voices absent from all values are exactly the uncited set.
    """
    index: dict[str, set[str]] = {output_id: set() for output_id in corpus.outputs}
    for voice in corpus.voices.values():
        for output_id in voice.output_ids:
            if output_id in index:
                index[output_id].add(voice.id)
    return index
