// Voice and output card renderers. Every number or label shown comes
// straight from the API payload; nothing is recounted client-side.

import { h, paletteColor } from "./dom.js";
import type { TelemetryAgent } from "./telemetry.js";
import type { OutputCard, OutputRef, TopicChip, VoiceCard } from "./types.js";

export const RATIONALE_TEXT: Record<string, string> = {
  insufficient_context: "Insufficient context",
  outside_project_scope: "Outside project scope",
  duplicate_of_cited: "Duplicate of a cited voice",
  addressed_elsewhere: "Addressed elsewhere",
  other: "Other",
};

export interface ChipInfo {
  name: string;
  kindLabel: string;
  description: string;
}

function showDialog(info: ChipInfo): void {
  const dialog = h(
    "dialog",
    { class: "chip-dialog" },
    h("h3", {}, info.name),
    h("p", { class: "chip-kind" }, info.kindLabel),
    h("p", {}, info.description || "No description available."),
    h("button", { onclick: () => dialog.remove() }, "Close"),
  ) as HTMLDialogElement;
  document.body.append(dialog);
  if (typeof dialog.showModal === "function") dialog.showModal();
  else dialog.setAttribute("open", "");
}

function chip(label: string, color: string | null, onClick: () => void): HTMLElement {
  const attrs: Record<string, string | ((e: Event) => void)> = {
    class: "chip",
    onclick: () => onClick(),
  };
  const el = h("button", attrs, label);
  if (color) el.style.setProperty("--chip-color", color);
  return el;
}

export interface VoiceCardOptions {
  agent?: TelemetryAgent;
  chipInfo?: (kind: "event" | "phase" | "topic", id: string) => ChipInfo | null;
  onOutputClick?: (output: OutputRef) => void;
}

export function renderVoiceCard(voice: VoiceCard, options: VoiceCardOptions = {}): HTMLElement {
  const { agent, chipInfo, onOutputClick } = options;
  const card = h("article", { class: "voice-card", "data-voice-id": voice.id });
  card.addEventListener("click", () => agent?.emit("voice_card_view", voice.id), {
    once: true,
  });

  card.append(h("p", { class: "voice-text" }, voice.text));

  if (voice.audio_ref) {
    const audio = h("audio", { controls: true, src: voice.audio_ref, preload: "none" });
    audio.addEventListener("play", () => agent?.emit("audio_play", voice.id));
    card.append(audio);
  }

  const chips = h("div", { class: "chips" });
  if (voice.event) {
    chips.append(
      chip(voice.event.name, null, () => {
        const info = chipInfo?.("event", voice.event!.id) ?? {
          name: voice.event!.name,
          kindLabel: `Event · ${voice.event!.kind}`,
          description: "",
        };
        showDialog(info);
      }),
    );
  }
  if (voice.phase) {
    chips.append(
      chip(voice.phase.name, null, () => {
        const info = chipInfo?.("phase", voice.phase!.id) ?? {
          name: voice.phase!.name,
          kindLabel: "Phase",
          description: "",
        };
        showDialog(info);
      }),
    );
  }
  for (const topic of voice.topics) {
    chips.append(
      chip(topic.name, paletteColor(topic.color_index), () => {
        const info = chipInfo?.("topic", topic.id) ?? {
          name: topic.name,
          kindLabel: "Topic",
          description: "",
        };
        showDialog(info);
      }),
    );
  }
  if (voice.sub_geography) {
    chips.append(chip(voice.sub_geography.name, null, () => {
      showDialog({ name: voice.sub_geography!.name, kindLabel: "Area", description: "" });
    }));
  }
  card.append(chips);

  // The "cited" accordion: linked outputs for cited voices, the rationale
  // for uncited ones.
  const accordion = h("details", { class: "cited-accordion" }) as HTMLDetailsElement;
  accordion.addEventListener("toggle", () => {
    if (accordion.open) agent?.emit("citation_accordion_expand", voice.id);
  });
  if (voice.cited) {
    accordion.append(h("summary", {}, `Cited in ${voice.cited_outputs.length} output(s)`));
    const list = h("ul", { class: "cited-list" });
    for (const output of voice.cited_outputs) {
      const link = h(
        "a",
        { href: `#/outputs`, class: "cited-link", "data-output-id": output.id },
        `${output.kind}: ${output.title}`,
      );
      link.addEventListener("click", () => {
        agent?.emit("voice_output_click", output.id);
        onOutputClick?.(output);
      });
      list.append(h("li", {}, link));
    }
    accordion.append(list);
  } else {
    accordion.append(h("summary", {}, "Uncited"));
    const rationale = voice.uncited_rationale
      ? RATIONALE_TEXT[voice.uncited_rationale] ?? voice.uncited_rationale
      : "No rationale recorded yet.";
    accordion.append(h("p", { class: "uncited-rationale" }, rationale));
    if (voice.uncited_note) {
      accordion.append(h("p", { class: "uncited-note" }, voice.uncited_note));
    }
  }
  card.append(accordion);
  return card;
}

export interface OutputCardOptions {
  agent?: TelemetryAgent;
  onGoalClick?: (goalId: string) => void;
  onOutputRefClick?: (ref: OutputRef) => void;
  topics?: TopicChip[];
}

// Stacked bar of voice-topic pairs; widths are proportional to the
// pair counts reported by the API.
function stackedBar(card: OutputCard, agent?: TelemetryAgent): HTMLElement {
  const distribution = card.topic_distribution;
  const totalPairs =
    distribution.entries.reduce((sum, e) => sum + e.pair_count, 0) + distribution.untagged_count;
  const bar = h("div", { class: "topic-bar", role: "img" });
  if (!totalPairs) {
    bar.classList.add("topic-bar-empty");
    return bar;
  }
  const colorByTopic = new Map<string, number | null>();
  for (const entry of distribution.entries) colorByTopic.set(entry.topic_id, null);
  for (const entry of distribution.entries) {
    const seg = h("div", {
      class: "topic-bar-seg",
      title: `${entry.topic_name}: ${entry.pair_count}`,
      "data-topic-id": entry.topic_id,
    });
    seg.style.width = `${(entry.pair_count / totalPairs) * 100}%`;
    bar.append(seg);
  }
  if (distribution.untagged_count) {
    const seg = h("div", {
      class: "topic-bar-seg topic-bar-untagged",
      title: `Untagged: ${distribution.untagged_count}`,
    });
    seg.style.width = `${(distribution.untagged_count / totalPairs) * 100}%`;
    bar.append(seg);
  }
  bar.addEventListener("click", () => agent?.emit("output_deep_dive", card.id));
  return bar;
}

export function renderOutputCard(card: OutputCard, options: OutputCardOptions = {}): HTMLElement {
  const { agent, onGoalClick, onOutputRefClick, topics } = options;
  const colorOf = new Map((topics ?? []).map((t) => [t.id, t.color_index]));

  const el = h("article", { class: `output-card output-${card.kind}`, "data-output-id": card.id });
  const title = h("h3", { class: "output-title" }, card.title);
  if (card.kind === "goal") {
    title.addEventListener("click", () => {
      agent?.emit("goal_card_click", card.id);
      onGoalClick?.(card.id);
    });
    title.classList.add("goal-clickable");
  }
  el.append(
    h("span", { class: "output-kind" }, card.kind),
    title,
    h("p", { class: "output-description" }, card.description),
    h("p", { class: "output-cited-count" }, `${card.cited_voice_count} cited voices`),
  );
  if (card.voice_summary) {
    el.append(h("p", { class: "output-summary" }, card.voice_summary));
  }

  const bar = stackedBar(card, agent);
  for (const seg of Array.from(bar.children) as HTMLElement[]) {
    const topicId = seg.getAttribute("data-topic-id");
    if (topicId) seg.style.background = paletteColor(colorOf.get(topicId) ?? null);
  }
  el.append(bar);

  const expanded = h("div", { class: "distribution-detail", hidden: true });
  for (const entry of card.topic_distribution.entries) {
    expanded.append(h("div", {}, `${entry.topic_name}: ${entry.pair_count}`));
  }
  if (card.topic_distribution.untagged_count) {
    expanded.append(h("div", {}, `Untagged: ${card.topic_distribution.untagged_count}`));
  }
  bar.addEventListener("click", () => {
    expanded.hidden = !expanded.hidden;
  });
  el.append(expanded);

  const links = h("div", { class: "output-links" });
  const linkList = (label: string, refs: OutputRef[]) => {
    if (!refs.length) return;
    const wrap = h("div", { class: "output-link-group" }, h("strong", {}, label));
    for (const ref of refs) {
      const link = h("a", { href: "#/outputs", class: "output-ref" }, ref.title);
      link.addEventListener("click", () => {
        agent?.emit("output_to_output_click", ref.id);
        onOutputRefClick?.(ref);
      });
      wrap.append(link);
    }
    links.append(wrap);
  };
  linkList("Sparked by", card.sparked_by);
  linkList("Next steps", card.next_steps);
  el.append(links);
  return el;
}
