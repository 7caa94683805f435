"""Geographic and thematic visual layouts, plus the geocoding adapter.

Map clustering projects points into Web-Mercator pixel space (256px
tiles) and buckets them into 64x64-pixel grid cells, one cluster per
nonempty cell. The grid is power-of-two aligned across zoom levels, so
zooming in can only split clusters, never merge them.

The thematic layout packs one circle per category (topic, goal, or
recommendation), sized by sqrt of the voice count, placed greedily along
an Archimedean spiral; member voices fill each circle in a sunflower
pattern. Both layouts are pure functions of the corpus.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import logging
import math
import threading
import time
from enum import Enum
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Sequence

import httpx
from pydantic import BaseModel, Field

from .model import Corpus, OutputKind
from .store import DocumentStore

logger = logging.getLogger(__name__)

TILE_SIZE = 256
CELL_PIXELS = 64
ZOOM_MIN = 0
ZOOM_MAX = 22
# Web-Mercator latitude limit; poleward points clamp onto the edge row.
MAX_MERCATOR_LAT = 85.05112878

BASE_RADIUS = 4.0
CIRCLE_PADDING = 1.0
MEMBER_FILL = 0.85
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
SPIRAL_STEP = 0.05
SPIRAL_GROWTH = 1.0


class MapPoint(NamedTuple):
    voice_id: str
    lat: float
    lon: float
    topic_ids: tuple[str, ...] = ()


class BoundingBox(NamedTuple):
    west: float
    south: float
    east: float
    north: float

    def validate(self) -> None:
        if not (-90.0 <= self.south <= self.north <= 90.0):
            raise ValueError("bbox latitudes must satisfy -90 <= south <= north <= 90")
        if not (-180.0 <= self.west <= self.east <= 180.0):
            raise ValueError("bbox longitudes must satisfy -180 <= west <= east <= 180")


class MapCluster(BaseModel):
    centroid: dict[str, float]
    member_voice_ids: list[str]
    dominant_topic_id: Optional[str] = None
    zoom: int
    cell_x: int
    cell_y: int

    @property
    def size(self) -> int:
        return len(self.member_voice_ids)


class MemberPoint(BaseModel):
    voice_id: str
    x: float
    y: float
    color_index: Optional[int] = None


class CategoryCircle(BaseModel):
    category_id: str
    label: str
    count: int
    center_x: float
    center_y: float
    radius: float
    member_points: list[MemberPoint] = Field(default_factory=list)


class LayoutScheme(str, Enum):
    TOPIC = "topic"
    GOAL = "goal"
    RECOMMENDATION = "recommendation"


def mercator_pixel(lat: float, lon: float, zoom: int) -> tuple[float, float]:
    """Project lat/lon degrees to global pixel coordinates at a zoom level."""
    world = TILE_SIZE * (2**zoom)
    x = (lon + 180.0) / 360.0 * world
    clamped = max(-MAX_MERCATOR_LAT, min(MAX_MERCATOR_LAT, lat))
    phi = math.radians(clamped)
    y = (0.5 - math.log(math.tan(math.pi / 4.0 + phi / 2.0)) / (2.0 * math.pi)) * world
    return x, y


def grid_cell(lat: float, lon: float, zoom: int) -> tuple[int, int]:
    """64px grid cell for a point; indices clamped onto the valid grid."""
    x, y = mercator_pixel(lat, lon, zoom)
    cells_per_side = (TILE_SIZE * (2**zoom)) // CELL_PIXELS
    cx = min(max(int(x // CELL_PIXELS), 0), cells_per_side - 1)
    cy = min(max(int(y // CELL_PIXELS), 0), cells_per_side - 1)
    return cx, cy


def _cell_intersects_bbox(cell: tuple[int, int], bbox: BoundingBox, zoom: int) -> bool:
    west_px, north_px = mercator_pixel(bbox.north, bbox.west, zoom)
    east_px, south_px = mercator_pixel(bbox.south, bbox.east, zoom)
    x0 = cell[0] * CELL_PIXELS
    y0 = cell[1] * CELL_PIXELS
    x1 = x0 + CELL_PIXELS
    y1 = y0 + CELL_PIXELS
    return x0 <= east_px and x1 >= west_px and y0 <= south_px and y1 >= north_px


def cluster_map_points(
    points: Iterable[MapPoint],
    zoom: int,
    viewport: Optional[BoundingBox] = None,
    topic_colors: Optional[Mapping[str, int]] = None,
) -> list[MapCluster]:
    """Group points into one cluster per nonempty 64px grid cell.

    Clusters partition the input; the centroid is the arithmetic mean of
    member coordinates, and the dominant topic is the most frequent topic
    among members (ties broken by lowest palette slot).
    """
    if not isinstance(zoom, int) or isinstance(zoom, bool):
        raise ValueError("zoom must be an integer")
    if not (ZOOM_MIN <= zoom <= ZOOM_MAX):
        raise ValueError(f"zoom must be in [{ZOOM_MIN}, {ZOOM_MAX}], got {zoom}")
    if viewport is not None:
        viewport.validate()

    cells: dict[tuple[int, int], list[MapPoint]] = {}
    for point in points:
        if not (-90.0 <= point.lat <= 90.0 and -180.0 <= point.lon <= 180.0):
            raise ValueError(f"point {point.voice_id!r} has invalid coordinates")
        cells.setdefault(grid_cell(point.lat, point.lon, zoom), []).append(point)

    colors = topic_colors or {}
    clusters = []
    for cell in sorted(cells):
        if viewport is not None and not _cell_intersects_bbox(cell, viewport, zoom):
            continue
        members = cells[cell]
        topic_counts: dict[str, int] = {}
        for point in members:
            for topic_id in point.topic_ids:
                topic_counts[topic_id] = topic_counts.get(topic_id, 0) + 1
        dominant = None
        if topic_counts:
            dominant = min(
                topic_counts,
                key=lambda t: (-topic_counts[t], colors.get(t, 1 << 30), t),
            )
        clusters.append(
            MapCluster(
                centroid={
                    "lat": sum(p.lat for p in members) / len(members),
                    "lon": sum(p.lon for p in members) / len(members),
                },
                member_voice_ids=sorted(p.voice_id for p in members),
                dominant_topic_id=dominant,
                zoom=zoom,
                cell_x=cell[0],
                cell_y=cell[1],
            )
        )
    return clusters


def corpus_map_points(corpus: Corpus, voices: Optional[Sequence] = None) -> list[MapPoint]:
    """Geotagged voices as clusterable points (voices without coordinates drop out)."""
    pool = voices if voices is not None else list(corpus.voices.values())
    return [
        MapPoint(
            voice_id=v.id,
            lat=v.coordinates.lat,
            lon=v.coordinates.lon,
            topic_ids=tuple(v.topic_ids),
        )
        for v in pool
        if v.coordinates is not None
    ]


def point_in_polygon(lat: float, lon: float, boundary: Sequence) -> bool:
    """Even-odd ray cast in the lat/lon plane (fine at neighborhood scale)."""
    inside = False
    n = len(boundary)
    for i in range(n):
        a, b = boundary[i], boundary[(i + 1) % n]
        if (a.lat > lat) != (b.lat > lat):
            t = (lat - a.lat) / (b.lat - a.lat)
            crossing = a.lon + t * (b.lon - a.lon)
            if lon < crossing:
                inside = not inside
    return inside


# -- thematic circle layout -------------------------------------------


def _category_members(corpus: Corpus, scheme: LayoutScheme) -> dict[str, tuple[str, list[str]]]:
    """Map category id -> (label, associated voice ids) for a scheme."""
    categories: dict[str, tuple[str, list[str]]] = {}
    if scheme is LayoutScheme.TOPIC:
        wanted = {t.id: t.name for t in corpus.topics.values()}
        for voice in corpus.voices.values():
            for topic_id in voice.topic_ids:
                if topic_id in wanted:
                    categories.setdefault(topic_id, (wanted[topic_id], []))[1].append(voice.id)
    else:
        kind = OutputKind.GOAL if scheme is LayoutScheme.GOAL else OutputKind.RECOMMENDATION
        wanted = {o.id: o.title for o in corpus.outputs.values() if o.kind is kind}
        for voice in corpus.voices.values():
            for output_id in voice.output_ids:
                if output_id in wanted:
                    categories.setdefault(output_id, (wanted[output_id], []))[1].append(voice.id)
    return categories


def _place_on_spiral(radius: float, placed: list[tuple[float, float, float]]) -> tuple[float, float]:
    """First non-overlapping position walking outward on an Archimedean spiral."""
    if not placed:
        return 0.0, 0.0
    theta = 0.0
    while True:
        r = SPIRAL_GROWTH * theta
        x = r * math.cos(theta)
        y = r * math.sin(theta)
        if all(
            math.hypot(x - px, y - py) >= radius + pr + CIRCLE_PADDING
            for px, py, pr in placed
        ):
            return x, y
        theta += SPIRAL_STEP


def _sunflower(center_x: float, center_y: float, radius: float, n: int) -> list[tuple[float, float]]:
    points = []
    for k in range(n):
        rho = radius * MEMBER_FILL * math.sqrt((k + 0.5) / n)
        angle = k * GOLDEN_ANGLE
        points.append((center_x + rho * math.cos(angle), center_y + rho * math.sin(angle)))
    return points


def cluster_layout(corpus: Corpus, scheme: LayoutScheme) -> list[CategoryCircle]:
    """Deterministic circle layout: one circle per category with >=1 voice.

    Radius is BASE_RADIUS * sqrt(count); circles are placed largest first,
    so radii for counts 4 and 1 come out exactly 2:1.
    """
    categories = _category_members(corpus, scheme)
    order = sorted(
        categories.items(),
        key=lambda item: (-len(set(item[1][1])), item[1][0], item[0]),
    )

    voice_color: dict[str, Optional[int]] = {}
    for voice in corpus.voices.values():
        slots = [
            corpus.topics[t].color_index
            for t in voice.topic_ids
            if t in corpus.topics and corpus.topics[t].color_index is not None
        ]
        voice_color[voice.id] = min(slots) if slots else None

    placed: list[tuple[float, float, float]] = []
    circles: list[CategoryCircle] = []
    for category_id, (label, voice_ids) in order:
        members = sorted(set(voice_ids))
        radius = BASE_RADIUS * math.sqrt(len(members))
        x, y = _place_on_spiral(radius, placed)
        placed.append((x, y, radius))
        positions = _sunflower(x, y, radius, len(members))
        circles.append(
            CategoryCircle(
                category_id=category_id,
                label=label,
                count=len(members),
                center_x=x,
                center_y=y,
                radius=radius,
                member_points=[
                    MemberPoint(
                        voice_id=vid, x=px, y=py, color_index=voice_color.get(vid)
                    )
                    for vid, (px, py) in zip(members, positions)
                ],
            )
        )
    return circles


# -- geocoding ---------------------------------------------------------


class GeocodeResult(BaseModel):
    input_text: str
    lat: float
    lon: float
    confidence: float
    provider: str
    cached_at: dt.datetime


class GeocoderUnavailable(Exception):
    """Provider kept failing; the lookup stays unresolved and uncached."""


class StubGeocoder:
    """Offline adapter backed by a fixture mapping of text -> coordinates."""

    name = "stub"

    def __init__(self, fixtures: Optional[Mapping[str, dict]] = None):
        self._fixtures = dict(fixtures or {})

    def lookup(self, text: str) -> Optional[tuple[float, float, float]]:
        entry = self._fixtures.get(text)
        if entry is None:
            return None
        return float(entry["lat"]), float(entry["lon"]), float(entry.get("confidence", 1.0))


class HttpGeocoder:
    """Client for an address-validation style JSON endpoint."""

    name = "http"

    def __init__(self, url: str, api_key: str = "", client: Optional[httpx.Client] = None):
        self._url = url
        self._api_key = api_key
        self._client = client or httpx.Client(timeout=10.0)

    def lookup(self, text: str) -> Optional[tuple[float, float, float]]:
        try:
            response = self._client.post(
                self._url,
                json={"address": text},
                headers={"Authorization": f"Bearer {self._api_key}"} if self._api_key else {},
            )
        except httpx.HTTPError as exc:
            raise GeocoderUnavailable(str(exc)) from exc
        if response.status_code == 404:
            return None
        if response.status_code >= 400:
            raise GeocoderUnavailable(f"provider returned {response.status_code}")
        data = response.json()
        if not data or "lat" not in data:
            return None
        return float(data["lat"]), float(data["lon"]), float(data.get("confidence", 0.0))


class TokenBucket:
    """Blocking rate limiter shared by concurrent geocode callers."""

    def __init__(
        self,
        rate_per_sec: float,
        capacity: Optional[float] = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._rate = max(rate_per_sec, 1e-9)
        self._capacity = capacity if capacity is not None else max(1.0, rate_per_sec)
        self._tokens = self._capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            self._sleep(wait)


class GeocodingService:
    """Caching, rate-limited facade over a geocoder adapter.

    Results (including definitive no-matches) are cached by exact input
    text in the store's extra space; transient provider failures are
    retried with capped exponential backoff and never cached.
    """

    def __init__(
        self,
        adapter,
        store: Optional[DocumentStore] = None,
        rate_per_sec: float = 10.0,
        max_attempts: int = 4,
        backoff_base: float = 0.2,
        backoff_cap: float = 2.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._adapter = adapter
        self._store = store
        self._bucket = TokenBucket(rate_per_sec, sleep=sleep)
        self._max_attempts = max_attempts
        self._backoff_base = backoff_base
        self._backoff_cap = backoff_cap
        self._sleep = sleep
        self._memory: dict[str, Optional[GeocodeResult]] = {}
        self._lock = threading.Lock()
        self.provider_calls = 0

    @staticmethod
    def _cache_id(text: str) -> str:
        return hashlib.sha1(text.encode("utf-8")).hexdigest()

    def _cache_get(self, text: str) -> tuple[bool, Optional[GeocodeResult]]:
        with self._lock:
            if text in self._memory:
                return True, self._memory[text]
        if self._store is not None:
            envelope = self._store.get("geocode_cache", self._cache_id(text))
            if envelope is not None:
                body = envelope.body
                result = GeocodeResult(**body["result"]) if body.get("result") else None
                with self._lock:
                    self._memory[text] = result
                return True, result
        return False, None

    def _cache_put(self, text: str, result: Optional[GeocodeResult]) -> None:
        with self._lock:
            self._memory[text] = result
        if self._store is not None:
            body = {
                "input_text": text,
                "result": result.model_dump(mode="json") if result else None,
            }
            cache_id = self._cache_id(text)
            current = self._store.get("geocode_cache", cache_id)
            self._store.put(
                "geocode_cache", cache_id, body, current.revision if current else 0
            )

    def geocode(self, location_text: str) -> Optional[GeocodeResult]:
        """Resolve free text to coordinates, or None when unresolved."""
        if not location_text or not location_text.strip():
            raise ValueError("location_text must be nonempty")

        hit, cached = self._cache_get(location_text)
        if hit:
            return cached

        attempt = 0
        while True:
            self._bucket.acquire()
            try:
                self.provider_calls += 1
                raw = self._adapter.lookup(location_text)
                break
            except GeocoderUnavailable as exc:
                attempt += 1
                if attempt >= self._max_attempts:
                    logger.warning("geocode gave up on %r: %s", location_text, exc)
                    return None
                delay = min(self._backoff_base * (2 ** (attempt - 1)), self._backoff_cap)
                self._sleep(delay)

        if raw is None:
            self._cache_put(location_text, None)
            return None
        lat, lon, confidence = raw
        result = GeocodeResult(
            input_text=location_text,
            lat=lat,
            lon=lon,
            confidence=confidence,
            provider=getattr(self._adapter, "name", "unknown"),
            cached_at=dt.datetime.now(dt.timezone.utc),
        )
        self._cache_put(location_text, result)
        return result


def geocoder_from_env(env: Mapping[str, str], store: Optional[DocumentStore] = None) -> GeocodingService:
    """Build the configured geocoder: GEOCODER_PROVIDER in {stub, http}."""
    provider = env.get("GEOCODER_PROVIDER", "stub")
    rate = float(env.get("GEOCODER_RATE", "10"))
    if provider == "http":
        url = env.get("GEOCODER_URL", "")
        if not url:
            raise ValueError("GEOCODER_URL is required when GEOCODER_PROVIDER=http")
        adapter = HttpGeocoder(url, env.get("GEOCODER_KEY", ""))
    elif provider == "stub":
        fixtures = {}
        fixture_path = env.get("GEOCODER_FIXTURE")
        if fixture_path:
            import json as _json
            from pathlib import Path as _Path

            fixtures = _json.loads(_Path(fixture_path).read_text(encoding="utf-8"))
        adapter = StubGeocoder(fixtures)
    else:
        raise ValueError(f"unknown GEOCODER_PROVIDER {provider!r}")
    return GeocodingService(adapter, store=store, rate_per_sec=rate)
