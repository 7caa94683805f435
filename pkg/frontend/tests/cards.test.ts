// Card rendering against fixed payloads: accordion contents, audio player,
// and stacked-bar proportions straight from the distribution.

import { beforeEach, expect, test } from "vitest";

import { renderOutputCard, renderVoiceCard } from "../src/cards.js";
import { makeOutput, makeVoice } from "./testutil.js";

beforeEach(() => {
  document.body.innerHTML = "";
});

test("uncited voice shows its rationale inside the accordion", () => {
  const card = renderVoiceCard(
    makeVoice({
      id: "v1",
      uncited_rationale: "insufficient_context",
      uncited_note: "Too short to interpret.",
    }),
  );
  expect(card.querySelector("summary")!.textContent).toBe("Uncited");
  expect(card.querySelector(".uncited-rationale")!.textContent).toBe("Insufficient context");
  expect(card.querySelector(".uncited-note")!.textContent).toBe("Too short to interpret.");
});

test("cited voice lists one linked entry per cited output", () => {
  const card = renderVoiceCard(
    makeVoice({
      id: "v2",
      cited_outputs: [
        { id: "o1", kind: "goal", title: "Goal A" },
        { id: "o2", kind: "recommendation", title: "Strategy B" },
      ],
    }),
  );
  const links = [...card.querySelectorAll(".cited-link")].map((a) => a.textContent);
  expect(links).toEqual(["goal: Goal A", "recommendation: Strategy B"]);
  expect(card.querySelector("summary")!.textContent).toContain("2 output(s)");
});

test("audio voices render a player alongside the transcription", () => {
  const card = renderVoiceCard(
    makeVoice({ id: "v3", text: "Transcribed words.", audio_ref: "/media/a.mp3" }),
  );
  const audio = card.querySelector("audio")!;
  expect(audio.getAttribute("src")).toBe("/media/a.mp3");
  expect(audio.hasAttribute("controls")).toBe(true);
  expect(card.querySelector(".voice-text")!.textContent).toBe("Transcribed words.");
});

test("stacked bar widths are proportional to the reported pair counts", () => {
  const output = makeOutput({
    id: "o1",
    cited_voice_count: 9,
    topic_distribution: {
      output_id: "o1",
      entries: [
        { topic_id: "t1", topic_name: "Safety", pair_count: 6 },
        { topic_id: "t2", topic_name: "Housing", pair_count: 3 },
      ],
      untagged_count: 1,
      total_cited_voices: 9,
    },
  });
  const card = renderOutputCard(output);
  const segs = [...card.querySelectorAll(".topic-bar-seg")] as HTMLElement[];
  expect(segs.length).toBe(3);
  // Oracle: widths must equal pair_count / total pairs (6+3+1 = 10).
  expect(segs[0].style.width).toBe("60%");
  expect(segs[1].style.width).toBe("30%");
  expect(segs[2].style.width).toBe("10%");
  expect(segs[0].title).toBe("Safety: 6");
});

test("output card shows the payload's cited count verbatim", () => {
  const card = renderOutputCard(makeOutput({ id: "o2", cited_voice_count: 123 }));
  expect(card.querySelector(".output-cited-count")!.textContent).toBe("123 cited voices");
});

test("clicking the bar toggles the expanded distribution detail", () => {
  const output = makeOutput({
    id: "o3",
    topic_distribution: {
      output_id: "o3",
      entries: [{ topic_id: "t1", topic_name: "Safety", pair_count: 2 }],
      untagged_count: 0,
      total_cited_voices: 2,
    },
  });
  const card = renderOutputCard(output);
  const detail = card.querySelector(".distribution-detail") as HTMLElement;
  expect(detail.hidden).toBe(true);
  (card.querySelector(".topic-bar") as HTMLElement).click();
  expect(detail.hidden).toBe(false);
  expect(detail.textContent).toContain("Safety: 2");
});
