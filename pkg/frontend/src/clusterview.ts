// Thematic cluster view: category circles sized by voice count with
// member voices as hoverable points, organized by topic, goal, or
// recommendation. Coordinates come from the server layout verbatim.

import { h, clear, paletteColor } from "./dom.js";
import type { ApiClient } from "./api.js";
import type { CategoryCircle } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export class ClusterView {
  scheme = "topic";
  private svgWrap: HTMLElement;
  private popover: HTMLElement;
  private voiceTextCache = new Map<string, string>();

  constructor(
    private container: HTMLElement,
    private api: ApiClient,
  ) {
    const switcher = h(
      "div",
      { class: "scheme-switcher" },
      ...["topic", "goal", "recommendation"].map((scheme) =>
        h(
          "button",
          {
            class: "scheme-button",
            "data-scheme": scheme,
            onclick: () => void this.setScheme(scheme),
          },
          `By ${scheme}`,
        ),
      ),
    );
    this.svgWrap = h("div", { class: "cluster-canvas" });
    this.popover = h("div", { class: "cluster-popover", hidden: true });
    this.container.append(switcher, this.svgWrap, this.popover);
  }

  async setScheme(scheme: string): Promise<void> {
    this.scheme = scheme;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const layout = await this.api.getLayout(this.scheme);
    this.render(layout.circles);
  }

  render(circles: CategoryCircle[]): void {
    clear(this.svgWrap);
    if (!circles.length) {
      this.svgWrap.append(h("p", { class: "empty-note" }, "No voices to organize yet."));
      return;
    }
    let minX = Infinity;
    let minY = Infinity;
    let maxX = -Infinity;
    let maxY = -Infinity;
    for (const circle of circles) {
      minX = Math.min(minX, circle.center_x - circle.radius);
      minY = Math.min(minY, circle.center_y - circle.radius);
      maxX = Math.max(maxX, circle.center_x + circle.radius);
      maxY = Math.max(maxY, circle.center_y + circle.radius);
    }
    const pad = 4;
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute(
      "viewBox",
      `${minX - pad} ${minY - pad} ${maxX - minX + 2 * pad} ${maxY - minY + 2 * pad}`,
    );
    svg.setAttribute("class", "cluster-svg");

    for (const circle of circles) {
      const group = document.createElementNS(SVG_NS, "g");
      const outline = document.createElementNS(SVG_NS, "circle");
      outline.setAttribute("cx", String(circle.center_x));
      outline.setAttribute("cy", String(circle.center_y));
      outline.setAttribute("r", String(circle.radius));
      outline.setAttribute("class", "category-circle");
      group.append(outline);

      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(circle.center_x));
      label.setAttribute("y", String(circle.center_y - circle.radius - 1));
      label.setAttribute("class", "category-label");
      label.textContent = `${circle.label} (${circle.count})`;
      group.append(label);

      for (const point of circle.member_points) {
        const dot = document.createElementNS(SVG_NS, "circle");
        dot.setAttribute("cx", String(point.x));
        dot.setAttribute("cy", String(point.y));
        dot.setAttribute("r", "1.2");
        dot.setAttribute("class", "member-point");
        dot.setAttribute("data-voice-id", point.voice_id);
        dot.setAttribute("fill", paletteColor(point.color_index));
        dot.addEventListener("mouseenter", (event) =>
          void this.showVoice(point.voice_id, event as MouseEvent),
        );
        dot.addEventListener("mouseleave", () => {
          this.popover.hidden = true;
        });
        group.append(dot);
      }
      svg.append(group);
    }
    this.svgWrap.append(svg);
  }

  private async showVoice(voiceId: string, event: MouseEvent): Promise<void> {
    let text = this.voiceTextCache.get(voiceId);
    if (text === undefined) {
      try {
        const voice = await this.api.getVoice(voiceId);
        text = voice.text;
      } catch {
        text = "(voice unavailable)";
      }
      this.voiceTextCache.set(voiceId, text);
    }
    this.popover.textContent = text;
    this.popover.style.left = `${event.clientX + 10}px`;
    this.popover.style.top = `${event.clientY + 10}px`;
    this.popover.hidden = false;
  }
}
