// Slippy-tile map pane with cluster bubbles. Tiles come from a standard
// OSM tile layer; clusters are fetched from the API on every zoom or pan
// so detail grows as the user zooms in.

import { h, clear, paletteColor } from "./dom.js";
import type { ApiClient } from "./api.js";
import type { TelemetryAgent } from "./telemetry.js";
import type { MapCluster, TopicChip } from "./types.js";

const TILE = 256;
const TILE_URL = "https://tile.openstreetmap.org";
const MAX_LAT = 85.05112878;

export function lonToX(lon: number, zoom: number): number {
  return ((lon + 180) / 360) * TILE * 2 ** zoom;
}

export function latToY(lat: number, zoom: number): number {
  const clamped = Math.max(-MAX_LAT, Math.min(MAX_LAT, lat));
  const phi = (clamped * Math.PI) / 180;
  return (0.5 - Math.log(Math.tan(Math.PI / 4 + phi / 2)) / (2 * Math.PI)) * TILE * 2 ** zoom;
}

export function xToLon(x: number, zoom: number): number {
  return (x / (TILE * 2 ** zoom)) * 360 - 180;
}

export function yToLat(y: number, zoom: number): number {
  const n = Math.PI - (2 * Math.PI * y) / (TILE * 2 ** zoom);
  return (180 / Math.PI) * Math.atan(0.5 * (Math.exp(n) - Math.exp(-n)));
}

export interface TileMapOptions {
  center?: { lat: number; lon: number };
  zoom?: number;
  minZoom?: number;
  maxZoom?: number;
  onPointClick?: (cluster: MapCluster) => void;
}

export class TileMap {
  zoom: number;
  center: { lat: number; lon: number };
  private viewport: HTMLElement;
  private overlay: HTMLElement;
  private tileLayer: HTMLElement;
  private topicColor = new Map<string, number | null>();
  private refetchTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private container: HTMLElement,
    private api: ApiClient,
    private agent?: TelemetryAgent,
    private options: TileMapOptions = {},
  ) {
    this.zoom = options.zoom ?? 11;
    this.center = options.center ?? { lat: 40.7, lon: -73.85 };
    this.viewport = h("div", { class: "map-viewport" });
    this.tileLayer = h("div", { class: "map-tiles" });
    this.overlay = h("div", { class: "map-overlay" });
    const controls = h(
      "div",
      { class: "map-controls" },
      h("button", { class: "map-zoom-in", onclick: () => this.setZoom(this.zoom + 1) }, "+"),
      h("button", { class: "map-zoom-out", onclick: () => this.setZoom(this.zoom - 1) }, "-"),
    );
    this.viewport.append(this.tileLayer, this.overlay);
    this.container.append(this.viewport, controls);
    this.wireDrag();
  }

  setTopics(topics: TopicChip[]): void {
    this.topicColor = new Map(topics.map((t) => [t.id, t.color_index]));
  }

  setZoom(zoom: number): void {
    const clamped = Math.max(this.options.minZoom ?? 3, Math.min(this.options.maxZoom ?? 18, zoom));
    if (clamped === this.zoom) return;
    this.zoom = clamped;
    void this.refresh();
  }

  private wireDrag(): void {
    let dragging = false;
    let last: [number, number] = [0, 0];
    this.viewport.addEventListener("pointerdown", (event) => {
      dragging = true;
      last = [event.clientX, event.clientY];
    });
    this.viewport.addEventListener("pointermove", (event) => {
      if (!dragging) return;
      const dx = event.clientX - last[0];
      const dy = event.clientY - last[1];
      last = [event.clientX, event.clientY];
      this.panBy(-dx, -dy);
    });
    const stop = () => {
      if (dragging) {
        dragging = false;
        this.scheduleRefetch();
      }
    };
    this.viewport.addEventListener("pointerup", stop);
    this.viewport.addEventListener("pointerleave", stop);
  }

  panBy(dxPixels: number, dyPixels: number): void {
    const x = lonToX(this.center.lon, this.zoom) + dxPixels;
    const y = latToY(this.center.lat, this.zoom) + dyPixels;
    this.center = { lat: yToLat(y, this.zoom), lon: xToLon(x, this.zoom) };
    this.renderTiles();
  }

  private scheduleRefetch(): void {
    if (this.refetchTimer) clearTimeout(this.refetchTimer);
    this.refetchTimer = setTimeout(() => void this.refresh(), 150);
  }

  bbox(): [number, number, number, number] {
    const width = this.viewport.clientWidth || 800;
    const height = this.viewport.clientHeight || 500;
    const cx = lonToX(this.center.lon, this.zoom);
    const cy = latToY(this.center.lat, this.zoom);
    const west = Math.max(-180, xToLon(cx - width / 2, this.zoom));
    const east = Math.min(180, xToLon(cx + width / 2, this.zoom));
    const north = Math.min(90, yToLat(cy - height / 2, this.zoom));
    const south = Math.max(-90, yToLat(cy + height / 2, this.zoom));
    return [west, south, east, north];
  }

  async refresh(): Promise<void> {
    this.renderTiles();
    const response = await this.api.getClusters(this.zoom, this.bbox());
    this.renderClusters(response.clusters);
  }

  private renderTiles(): void {
    clear(this.tileLayer);
    const width = this.viewport.clientWidth || 800;
    const height = this.viewport.clientHeight || 500;
    const cx = lonToX(this.center.lon, this.zoom);
    const cy = latToY(this.center.lat, this.zoom);
    const maxTile = 2 ** this.zoom;
    const x0 = Math.floor((cx - width / 2) / TILE);
    const y0 = Math.floor((cy - height / 2) / TILE);
    const x1 = Math.floor((cx + width / 2) / TILE);
    const y1 = Math.floor((cy + height / 2) / TILE);
    for (let tx = x0; tx <= x1; tx++) {
      for (let ty = Math.max(0, y0); ty <= Math.min(maxTile - 1, y1); ty++) {
        const wrapped = ((tx % maxTile) + maxTile) % maxTile;
        const img = h("img", {
          class: "map-tile",
          src: `${TILE_URL}/${this.zoom}/${wrapped}/${ty}.png`,
          alt: "",
        });
        img.style.left = `${tx * TILE - (cx - width / 2)}px`;
        img.style.top = `${ty * TILE - (cy - height / 2)}px`;
        this.tileLayer.append(img);
      }
    }
  }

  renderClusters(clusters: MapCluster[]): void {
    clear(this.overlay);
    const width = this.viewport.clientWidth || 800;
    const height = this.viewport.clientHeight || 500;
    const cx = lonToX(this.center.lon, this.zoom);
    const cy = latToY(this.center.lat, this.zoom);
    for (const cluster of clusters) {
      const size = cluster.member_voice_ids.length;
      const px = lonToX(cluster.centroid.lon, this.zoom) - (cx - width / 2);
      const py = latToY(cluster.centroid.lat, this.zoom) - (cy - height / 2);
      const diameter = size === 1 ? 12 : Math.min(44, 14 + 5 * Math.sqrt(size));
      const dot = h(
        "button",
        {
          class: size === 1 ? "map-dot" : "map-bubble",
          title: size === 1 ? "1 voice" : `${size} voices`,
        },
        size === 1 ? "" : String(size),
      );
      dot.style.left = `${px - diameter / 2}px`;
      dot.style.top = `${py - diameter / 2}px`;
      dot.style.width = `${diameter}px`;
      dot.style.height = `${diameter}px`;
      const colorIndex = cluster.dominant_topic_id
        ? (this.topicColor.get(cluster.dominant_topic_id) ?? null)
        : null;
      dot.style.background = paletteColor(colorIndex);
      dot.addEventListener("click", () => {
        this.agent?.emit("map_point_click", cluster.member_voice_ids[0]);
        this.options.onPointClick?.(cluster);
      });
      this.overlay.append(dot);
    }
  }
}
