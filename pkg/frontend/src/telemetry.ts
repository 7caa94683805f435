// Usage telemetry: feature events on interaction plus a 5-second heartbeat
// carrying page, device type, and language. Events batch and flush on the
// heartbeat tick, on navigation, and on unload; heartbeats stop while the
// tab is hidden (session duration reflects visible time).

import type { ApiClient } from "./api.js";
import type { CommunityPage, EventKind } from "./types.js";

export const HEARTBEAT_MS = 5_000;

export interface TelemetryOptions {
  intervalMs?: number;
  now?: () => Date;
  doc?: Document;
  win?: Window;
}

export function deviceType(width: number): "desktop" | "mobile" | "tablet" {
  if (width <= 600) return "mobile";
  if (width <= 1024) return "tablet";
  return "desktop";
}

export class TelemetryAgent {
  private page: CommunityPage | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private eventQueue: string[] = [];
  private readonly intervalMs: number;
  private readonly now: () => Date;
  private readonly doc: Document;
  private readonly win: Window;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    options: TelemetryOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? HEARTBEAT_MS;
    this.now = options.now ?? (() => new Date());
    this.doc = options.doc ?? document;
    this.win = options.win ?? window;
  }

  start(): void {
    this.doc.addEventListener("visibilitychange", this.onVisibility);
    this.win.addEventListener("pagehide", this.onUnload);
    if (this.doc.visibilityState !== "hidden") this.startBeats();
  }

  stop(): void {
    this.stopBeats();
    this.doc.removeEventListener("visibilitychange", this.onVisibility);
    this.win.removeEventListener("pagehide", this.onUnload);
  }

  private onVisibility = (): void => {
    if (this.doc.visibilityState === "hidden") {
      this.stopBeats();
      void this.flush();
    } else {
      this.startBeats();
    }
  };

  private onUnload = (): void => {
    void this.flush();
  };

  private startBeats(): void {
    if (this.timer) return;
    this.timer = setInterval(() => this.beat(), this.intervalMs);
  }

  private stopBeats(): void {
    if (this.timer) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  // Community pages report under their route name; planner screens are not
  // part of the public platform and emit nothing.
  setPage(page: CommunityPage | null): void {
    const previous = this.page;
    this.page = page;
    if (page && page !== previous) this.emit("page_view");
    void this.flush();
  }

  emit(kind: EventKind, subjectId?: string, meta?: Record<string, unknown>): void {
    if (!this.page) return;
    this.eventQueue.push(
      JSON.stringify({
        session_id: this.sessionId,
        timestamp: this.now().toISOString(),
        kind,
        page: this.page,
        ...(subjectId ? { subject_id: subjectId } : {}),
        ...(meta ? { meta } : {}),
      }),
    );
  }

  private beat(): void {
    if (!this.page) return;
    const line = JSON.stringify({
      session_id: this.sessionId,
      timestamp: this.now().toISOString(),
      page: this.page,
      device_type: deviceType(this.win.innerWidth),
      language: this.win.navigator.language || "en",
    });
    void this.api.postTelemetry("heartbeats", [line]);
    void this.flush();
  }

  async flush(): Promise<void> {
    if (!this.eventQueue.length) return;
    const lines = this.eventQueue;
    this.eventQueue = [];
    await this.api.postTelemetry("events", lines);
  }
}
