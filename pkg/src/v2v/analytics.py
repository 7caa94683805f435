"""Usage telemetry: ingestion, session metrics, and the usage report.

Two record shapes arrive over the wire as newline-delimited JSON: feature
usage events and 5-second heartbeats, both keyed by an anonymous session
id. Client clocks drift, so server receive order is kept as a tiebreak
for equal timestamps. "Users" in the report means sessions; cookie churn
makes anything stronger unsupportable.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import statistics
import threading
from collections import Counter
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from .model import Corpus, corpus_stats
from .store import canonical_json


class Page(str, Enum):
    HOME = "home"
    ABOUT = "about"
    VOICES_LIST = "voices_list"
    MAP = "map"
    OUTPUTS = "outputs"
    FEEDBACK = "feedback"


class EventKind(str, Enum):
    PAGE_VIEW = "page_view"
    VOICE_CARD_VIEW = "voice_card_view"
    CITATION_ACCORDION_EXPAND = "citation_accordion_expand"
    OUTPUT_CARD_VIEW = "output_card_view"
    OUTPUT_DEEP_DIVE = "output_deep_dive"
    OUTPUT_FILTER = "output_filter"
    GOAL_CARD_CLICK = "goal_card_click"
    OUTPUT_TO_OUTPUT_CLICK = "output_to_output_click"
    VOICE_OUTPUT_CLICK = "voice_output_click"
    MAP_POINT_CLICK = "map_point_click"
    TRANSLATE_TOGGLE = "translate_toggle"
    AUDIO_PLAY = "audio_play"
    SEARCH = "search"
    FILTER_APPLY = "filter_apply"


class DeviceType(str, Enum):
    DESKTOP = "desktop"
    MOBILE = "mobile"
    TABLET = "tablet"


def _utc(value: dt.datetime) -> dt.datetime:
    if value.tzinfo is None:
        return value.replace(tzinfo=dt.timezone.utc)
    return value.astimezone(dt.timezone.utc)


class UsageEvent(BaseModel):
    session_id: str
    timestamp: dt.datetime
    kind: EventKind
    page: Page
    subject_id: Optional[str] = None
    meta: dict[str, Any] = Field(default_factory=dict)
    seq: int = 0

    _utc_ts = field_validator("timestamp")(lambda v: _utc(v))

    @field_validator("session_id")
    @classmethod
    def _nonempty_session(cls, value: str) -> str:
        if not value:
            raise ValueError("session_id must be nonempty")
        return value


class Heartbeat(BaseModel):
    session_id: str
    timestamp: dt.datetime
    page: Page
    device_type: DeviceType
    language: str = "en"
    seq: int = 0

    _utc_ts = field_validator("timestamp")(lambda v: _utc(v))

    @field_validator("session_id")
    @classmethod
    def _nonempty_session(cls, value: str) -> str:
        if not value:
            raise ValueError("session_id must be nonempty")
        return value


Record = Union[UsageEvent, Heartbeat]


class IngestReport(BaseModel):
    accepted: int = 0
    rejected: list[str] = Field(default_factory=list)


def _dedupe_key(record: Record) -> tuple:
    kind = record.kind.value if isinstance(record, UsageEvent) else None
    return (record.session_id, record.timestamp.isoformat(), kind, record.page.value)


class AnalyticsLog:
    """Append-only record log, file-backed as newline-delimited JSON.

    Replaying a batch is a no-op: records identical in session, timestamp,
    kind, and page are dropped. Malformed records are rejected one by one
    without sinking the batch.
    """

    def __init__(self, path: Optional[Path] = None):
        self._path = Path(path) if path is not None else None
        self._records: list[Record] = []
        self._keys: set[tuple] = set()
        self._seq = 0
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        assert self._path is not None
        for line in self._path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            record_type = raw.pop("record", "event")
            model = Heartbeat if record_type == "heartbeat" else UsageEvent
            record = model(**raw)
            self._records.append(record)
            self._keys.add(_dedupe_key(record))
            self._seq = max(self._seq, record.seq)

    def _append_line(self, record: Record) -> None:
        if self._path is None:
            return
        self._path.parent.mkdir(parents=True, exist_ok=True)
        record_type = "heartbeat" if isinstance(record, Heartbeat) else "event"
        payload = {"record": record_type, **record.model_dump(mode="json")}
        with self._path.open("a", encoding="utf-8") as handle:
            handle.write(canonical_json(payload) + "\n")

    def ingest(
        self, raw_records: Iterable[dict[str, Any]], record_type: Optional[str] = None
    ) -> IngestReport:
        report = IngestReport()
        with self._lock:
            for i, raw in enumerate(raw_records):
                if not isinstance(raw, dict):
                    report.rejected.append(f"record {i}: expected an object")
                    continue
                raw = dict(raw)
                declared = raw.pop("record", record_type)
                if declared not in ("event", "heartbeat"):
                    report.rejected.append(f"record {i}: unknown record type {declared!r}")
                    continue
                raw.pop("seq", None)
                model = Heartbeat if declared == "heartbeat" else UsageEvent
                try:
                    record = model(**raw)
                except ValidationError as exc:
                    first = exc.errors()[0]
                    loc = ".".join(str(p) for p in first["loc"])
                    report.rejected.append(f"record {i}: {loc}: {first['msg']}")
                    continue
                key = _dedupe_key(record)
                if key in self._keys:
                    continue
                self._seq += 1
                record.seq = self._seq
                self._records.append(record)
                self._keys.add(key)
                self._append_line(record)
                report.accepted += 1
        return report

    def ingest_ndjson(self, text: str, record_type: Optional[str] = None) -> IngestReport:
        rows: list[Any] = []
        parse_failures: list[str] = []
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                parse_failures.append(f"line {i + 1}: {exc.msg}")
        report = self.ingest(rows, record_type=record_type)
        report.rejected = parse_failures + report.rejected
        return report

    def records(self) -> list[Record]:
        with self._lock:
            return list(self._records)

    def records_between(
        self, start: Optional[dt.datetime] = None, end: Optional[dt.datetime] = None
    ) -> list[Record]:
        """Records with start <= timestamp < end (either bound optional)."""
        out = []
        for record in self.records():
            if start is not None and record.timestamp < start:
                continue
            if end is not None and record.timestamp >= end:
                continue
            out.append(record)
        return out


class SessionMetrics(BaseModel):
    session_id: str
    duration_minutes: float
    pages_visited: list[Page]
    event_counts: dict[str, int]
    device_type: Optional[DeviceType] = None
    used_translate: bool = False
    record_count: int


def group_sessions(records: Iterable[Record]) -> dict[str, list[Record]]:
    """Records per session, ordered by timestamp with server order as tiebreak."""
    sessions: dict[str, list[Record]] = {}
    for record in records:
        sessions.setdefault(record.session_id, []).append(record)
    for chunk in sessions.values():
        chunk.sort(key=lambda r: (r.timestamp, r.seq))
    return sessions


def session_metrics(session_id: str, records: list[Record]) -> SessionMetrics:
    """Metrics over all of a session's records (events and heartbeats alike)."""
    if not records:
        raise ValueError(f"session {session_id!r} has no records")
    ordered = sorted(records, key=lambda r: (r.timestamp, r.seq))
    duration = (ordered[-1].timestamp - ordered[0].timestamp).total_seconds() / 60.0

    pages: list[Page] = []
    for record in ordered:
        if not pages or pages[-1] is not record.page:
            pages.append(record.page)

    event_counts: Counter[str] = Counter(
        r.kind.value for r in ordered if isinstance(r, UsageEvent)
    )
    devices = Counter(
        r.device_type for r in ordered if isinstance(r, Heartbeat)
    )
    device = None
    if devices:
        device = min(devices, key=lambda d: (-devices[d], d.value))
    return SessionMetrics(
        session_id=session_id,
        duration_minutes=duration,
        pages_visited=pages,
        event_counts=dict(event_counts),
        device_type=device,
        used_translate=event_counts.get(EventKind.TRANSLATE_TOGGLE.value, 0) > 0,
        record_count=len(ordered),
    )


def filter_outliers(
    sessions: list[SessionMetrics], top_fraction: float = 0.05
) -> tuple[list[SessionMetrics], list[SessionMetrics]]:
    """Drop the ceil(top_fraction * N) heaviest sessions by record count.

    Ties rank by session id ascending, so the cut is deterministic.
    """
    if not (0.0 <= top_fraction < 1.0):
        raise ValueError("top_fraction must be in [0, 1)")
    n_remove = math.ceil(top_fraction * len(sessions))
    ranked = sorted(sessions, key=lambda m: (-m.record_count, m.session_id))
    removed_ids = {m.session_id for m in ranked[:n_remove]}
    kept = [m for m in sessions if m.session_id not in removed_ids]
    removed = ranked[:n_remove]
    return kept, removed


def transition_graph(sessions: Iterable[SessionMetrics]) -> dict[tuple[str, str], int]:
    """Counts of consecutive distinct-page pairs across sessions.

    pages_visited is already run-length compressed, so repeated heartbeats
    on one page never produce self-loops.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for metrics in sessions:
        pages = metrics.pages_visited
        for a, b in zip(pages, pages[1:]):
            counts[(a.value, b.value)] += 1
    return dict(counts)


class KindUsage(BaseModel):
    share: float
    mean_per_session: float
    sd_per_session: float


class UsageReport(BaseModel):
    n_sessions_raw: int
    n_sessions_kept: int
    removed_session_ids: list[str]
    duration_mean_minutes: float
    duration_sd_minutes: float
    usage: dict[str, KindUsage]
    transition_counts: dict[str, int]
    total_transitions: int
    device_shares: dict[str, float]
    translate_user_count: int
    translate_user_share: float
    accordion_expansions_resolved: int
    expanded_uncited_count: int
    expanded_uncited_share: Optional[float] = None
    corpus_uncited_share: Optional[float] = None


def _mean_sd(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) >= 2 else 0.0
    return mean, sd


def usage_report(
    records: Iterable[Record],
    corpus: Optional[Corpus] = None,
    top_fraction: Optional[float] = 0.05,
) -> UsageReport:
    """Every evaluation metric over the given records, post outlier filter.

    Shares are fractions of kept sessions with at least one event of the
    kind; per-session means count zero-event sessions. Standard deviations
    are sample (n-1) throughout.
    """
    records = list(records)
    sessions = group_sessions(records)
    metrics = [session_metrics(sid, recs) for sid, recs in sessions.items()]
    if top_fraction is not None:
        kept, removed = filter_outliers(metrics, top_fraction)
    else:
        kept, removed = metrics, []

    n = len(kept)
    duration_mean, duration_sd = _mean_sd([m.duration_minutes for m in kept])

    usage: dict[str, KindUsage] = {}
    for kind in EventKind:
        counts = [float(m.event_counts.get(kind.value, 0)) for m in kept]
        with_any = sum(1 for c in counts if c > 0)
        mean, sd = _mean_sd(counts)
        usage[kind.value] = KindUsage(
            share=with_any / n if n else 0.0,
            mean_per_session=mean,
            sd_per_session=sd,
        )

    transitions = transition_graph(kept)
    transition_counts = {f"{a}->{b}": c for (a, b), c in sorted(transitions.items())}

    device_counter: Counter[str] = Counter(
        m.device_type.value if m.device_type else "unknown" for m in kept
    )
    device_shares = {
        device: count / n for device, count in sorted(device_counter.items())
    } if n else {}

    translate_users = sum(1 for m in kept if m.used_translate)

    kept_ids = {m.session_id for m in kept}
    resolved = 0
    uncited_hits = 0
    if corpus is not None:
        for record in records:
            if (
                isinstance(record, UsageEvent)
                and record.kind is EventKind.CITATION_ACCORDION_EXPAND
                and record.session_id in kept_ids
                and record.subject_id is not None
            ):
                voice = corpus.voices.get(record.subject_id)
                if voice is None:
                    continue
                resolved += 1
                if not voice.cited:
                    uncited_hits += 1
    stats = corpus_stats(corpus) if corpus is not None else None

    return UsageReport(
        n_sessions_raw=len(metrics),
        n_sessions_kept=n,
        removed_session_ids=[m.session_id for m in removed],
        duration_mean_minutes=duration_mean,
        duration_sd_minutes=duration_sd,
        usage=usage,
        transition_counts=transition_counts,
        total_transitions=sum(transitions.values()),
        device_shares=device_shares,
        translate_user_count=translate_users,
        translate_user_share=translate_users / n if n else 0.0,
        accordion_expansions_resolved=resolved,
        expanded_uncited_count=uncited_hits,
        expanded_uncited_share=uncited_hits / resolved if resolved else None,
        corpus_uncited_share=stats.uncited_fraction if stats and stats.total_voices else None,
    )


def render_report_text(report: UsageReport) -> str:
    """Human-readable report for the CLI."""
    lines = [
        f"sessions: {report.n_sessions_raw} raw, {report.n_sessions_kept} kept "
        f"({len(report.removed_session_ids)} outliers removed)",
        f"session duration: {report.duration_mean_minutes:.2f} +/- "
        f"{report.duration_sd_minutes:.2f} minutes",
        "",
        "feature usage (share of sessions, mean +/- sd per session):",
    ]
    for kind, stats in report.usage.items():
        lines.append(
            f"  {kind:28s} {stats.share * 100:5.1f}%  "
            f"{stats.mean_per_session:.2f} +/- {stats.sd_per_session:.2f}"
        )
    lines.append("")
    lines.append(f"page transitions ({report.total_transitions} total):")
    for pair, count in sorted(report.transition_counts.items(), key=lambda kv: -kv[1]):
        lines.append(f"  {pair:28s} {count}")
    lines.append("")
    lines.append("device share:")
    for device, share in report.device_shares.items():
        lines.append(f"  {device:28s} {share * 100:5.1f}%")
    lines.append("")
    lines.append(
        f"translate users: {report.translate_user_count} "
        f"({report.translate_user_share * 100:.1f}%)"
    )
    if report.expanded_uncited_share is not None:
        lines.append(
            f"accordion expansions on uncited cards: "
            f"{report.expanded_uncited_share * 100:.2f}% "
            f"(corpus uncited share: "
            + (
                f"{report.corpus_uncited_share * 100:.2f}%"
                if report.corpus_uncited_share is not None
                else "n/a"
            )
            + ")"
        )
    return "\n".join(lines) + "\n"


def report_csv_tables(report: UsageReport) -> dict[str, str]:
    """CSV tables keyed by file stem (usage, transitions, devices)."""
    usage_rows = ["kind,share,mean_per_session,sd_per_session"]
    for kind, stats in report.usage.items():
        usage_rows.append(
            f"{kind},{stats.share!r},{stats.mean_per_session!r},{stats.sd_per_session!r}"
        )
    transition_rows = ["from,to,count"]
    for pair, count in sorted(report.transition_counts.items()):
        a, b = pair.split("->")
        transition_rows.append(f"{a},{b},{count}")
    device_rows = ["device,share"]
    for device, share in report.device_shares.items():
        device_rows.append(f"{device},{share!r}")
    return {
        "usage": "\n".join(usage_rows) + "\n",
        "transitions": "\n".join(transition_rows) + "\n",
        "devices": "\n".join(device_rows) + "\n",
    }
