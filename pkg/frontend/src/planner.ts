// Planner sensemaking screens: editable voice metadata (topics, citations,
// uncited rationale), output editing with sparked-by/next-steps links, and
// the cluster view. Saves use optimistic concurrency: a 409 shows a
// conflict banner, reloads the latest revision, and keeps the planner's
// pending selections so one click retries the edit on top of it.

import { h, clear } from "./dom.js";
import { RATIONALE_TEXT } from "./cards.js";
import { ApiError } from "./api.js";
import { ClusterView } from "./clusterview.js";
import type { ApiClient } from "./api.js";
import type { FacetOptions, OutputCard, VoiceCard } from "./types.js";

const TOKEN_KEY = "v2v_planner_token";

export function storedToken(): string | null {
  try {
    return window.localStorage.getItem(TOKEN_KEY);
  } catch {
    return null;
  }
}

export function renderTokenGate(root: HTMLElement, onToken: (token: string) => void): void {
  const input = h("input", { type: "password", class: "token-input", placeholder: "Planner token" }) as HTMLInputElement;
  const form = h("form", { class: "token-gate" }, h("h1", {}, "Planner sign-in"), input, h("button", {}, "Enter"));
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!input.value) return;
    try {
      window.localStorage.setItem(TOKEN_KEY, input.value);
    } catch {
      // storage unavailable; token lives only in memory
    }
    onToken(input.value);
  });
  clear(root);
  root.append(form);
}

interface VoiceDraft {
  topic_ids: Set<string>;
  output_ids: Set<string>;
  uncited_rationale: string | null;
  uncited_note: string | null;
}

function draftFrom(voice: VoiceCard): VoiceDraft {
  return {
    topic_ids: new Set(voice.topics.map((t) => t.id)),
    output_ids: new Set(voice.cited_outputs.map((o) => o.id)),
    uncited_rationale: voice.uncited_rationale,
    uncited_note: voice.uncited_note,
  };
}

export function renderVoiceEditor(
  container: HTMLElement,
  api: ApiClient,
  voice: VoiceCard,
  facets: FacetOptions,
  onSaved?: (updated: VoiceCard) => void,
): void {
  let revision = voice.revision;
  const draft = draftFrom(voice);
  const banner = h("div", { class: "conflict-banner", hidden: true });
  const status = h("p", { class: "save-status" });

  const topicBoxes = facets.topics.map((topic) => {
    const box = h("input", { type: "checkbox", value: topic.id }) as HTMLInputElement;
    box.checked = draft.topic_ids.has(topic.id);
    box.addEventListener("change", () => {
      box.checked ? draft.topic_ids.add(topic.id) : draft.topic_ids.delete(topic.id);
    });
    return h("label", { class: "edit-option" }, box, topic.name);
  });
  const outputBoxes = facets.outputs.map((output) => {
    const box = h("input", { type: "checkbox", value: output.id }) as HTMLInputElement;
    box.checked = draft.output_ids.has(output.id);
    box.addEventListener("change", () => {
      box.checked ? draft.output_ids.add(output.id) : draft.output_ids.delete(output.id);
    });
    return h("label", { class: "edit-option" }, box, `${output.kind}: ${output.title}`);
  });
  const rationaleSelect = h(
    "select",
    { class: "rationale-select" },
    h("option", { value: "" }, "No rationale"),
    ...Object.entries(RATIONALE_TEXT).map(([value, label]) => h("option", { value }, label)),
  ) as HTMLSelectElement;
  rationaleSelect.value = draft.uncited_rationale ?? "";

  async function save(): Promise<void> {
    const outputIds = [...draft.output_ids].sort();
    const changes = {
      topic_ids: [...draft.topic_ids].sort(),
      output_ids: outputIds,
      // A cited voice cannot carry a rationale; clear it on save.
      uncited_rationale: outputIds.length ? null : rationaleSelect.value || null,
      uncited_note: outputIds.length ? null : draft.uncited_note,
    };
    try {
      const updated = await api.patchVoice(voice.id, revision, changes);
      revision = updated.revision;
      banner.hidden = true;
      status.textContent = `Saved (revision ${updated.revision}).`;
      onSaved?.(updated);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        const fresh = await api.getVoice(voice.id);
        revision = fresh.revision;
        banner.hidden = false;
        clear(banner);
        banner.append(
          h(
            "p",
            {},
            "Someone else edited this voice. The latest version was reloaded; " +
              "your selections are still checked below. Save again to apply them on top.",
          ),
          h("button", { type: "button", class: "retry-save", onclick: () => void save() }, "Save again"),
        );
        status.textContent = "";
      } else if (error instanceof ApiError) {
        status.textContent = `Save failed: ${error.message}`;
      } else {
        throw error;
      }
    }
  }

  const form = h(
    "form",
    { class: "voice-editor", "data-voice-id": voice.id },
    banner,
    h("p", { class: "voice-text" }, voice.text),
    h("fieldset", { class: "edit-group edit-topics" }, h("legend", {}, "Topics"), ...topicBoxes),
    h("fieldset", { class: "edit-group edit-outputs" }, h("legend", {}, "Cited outputs"), ...outputBoxes),
    h(
      "fieldset",
      { class: "edit-group" },
      h("legend", {}, "Uncited rationale (applies when no outputs are cited)"),
      rationaleSelect,
    ),
    h("button", { type: "submit", class: "save-voice" }, "Save"),
    status,
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void save();
  });
  clear(container);
  container.append(form);
}

export async function renderPlannerVoices(root: HTMLElement, api: ApiClient, facets: FacetOptions): Promise<void> {
  const list = h("div", { class: "planner-voice-list" });
  const editor = h("div", { class: "planner-editor" }, h("p", {}, "Select a voice to edit."));
  const page = await api.getVoices({ limit: 50 });
  for (const voice of page.items) {
    const row = h(
      "button",
      { class: "planner-voice-row", "data-voice-id": voice.id },
      `${voice.text.slice(0, 80)}${voice.text.length > 80 ? "…" : ""} · ` +
        `${voice.cited ? voice.cited_outputs.length + " citations" : "uncited"}`,
    );
    row.addEventListener("click", () => renderVoiceEditor(editor, api, voice, facets));
    list.append(row);
  }
  clear(root);
  root.append(
    h(
      "section",
      { class: "page page-planner" },
      h("h1", {}, "Sensemaking: voices"),
      h("div", { class: "planner-layout" }, list, editor),
    ),
  );
}

export async function renderPlannerOutputs(root: HTMLElement, api: ApiClient, facets: FacetOptions): Promise<void> {
  const list = h("div", { class: "planner-output-list" });
  const editor = h("div", { class: "planner-editor" }, h("p", {}, "Select an output to edit."));
  const outputs = await api.getOutputs();

  const editOutput = (card: OutputCard) => {
    let revision = card.revision;
    const banner = h("div", { class: "conflict-banner", hidden: true });
    const status = h("p", { class: "save-status" });
    const title = h("input", { type: "text", value: card.title, class: "edit-title" }) as HTMLInputElement;
    const description = h("textarea", { class: "edit-description", rows: "4" }) as HTMLTextAreaElement;
    description.value = card.description;
    const summary = h("textarea", { class: "edit-summary", rows: "3" }) as HTMLTextAreaElement;
    summary.value = card.voice_summary;

    const linkBoxes = (selected: Set<string>, cls: string) =>
      outputs
        .filter((o) => o.id !== card.id)
        .map((o) => {
          const box = h("input", { type: "checkbox", value: o.id, class: cls }) as HTMLInputElement;
          box.checked = selected.has(o.id);
          box.addEventListener("change", () => {
            box.checked ? selected.add(o.id) : selected.delete(o.id);
          });
          return h("label", { class: "edit-option" }, box, `${o.kind}: ${o.title}`);
        });
    const sparked = new Set(card.sparked_by.map((r) => r.id));
    const next = new Set(card.next_steps.map((r) => r.id));

    async function save(): Promise<void> {
      const changes = {
        title: title.value,
        description: description.value,
        voice_summary: summary.value,
        sparked_by: [...sparked].sort(),
        next_steps: [...next].sort(),
      };
      try {
        const updated = await api.patchOutput(card.id, revision, changes);
        revision = updated.revision;
        banner.hidden = true;
        status.textContent = `Saved (revision ${updated.revision}).`;
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          const freshAll = await api.getOutputs();
          const fresh = freshAll.find((o) => o.id === card.id);
          if (fresh) revision = fresh.revision;
          banner.hidden = false;
          clear(banner);
          banner.append(
            h("p", {}, "This output changed elsewhere; reloaded the latest revision. Save again to apply your edits."),
            h("button", { type: "button", class: "retry-save", onclick: () => void save() }, "Save again"),
          );
        } else if (error instanceof ApiError) {
          status.textContent = `Save failed: ${error.message}`;
        } else {
          throw error;
        }
      }
    }

    const form = h(
      "form",
      { class: "output-editor" },
      banner,
      h("label", {}, "Title", title),
      h("label", {}, "Description", description),
      h("label", {}, "Summary of cited voices", summary),
      h("fieldset", { class: "edit-group" }, h("legend", {}, "Sparked by"), ...linkBoxes(sparked, "sparked-box")),
      h("fieldset", { class: "edit-group" }, h("legend", {}, "Next steps"), ...linkBoxes(next, "next-box")),
      h("button", { type: "submit", class: "save-output" }, "Save"),
      status,
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void save();
    });
    clear(editor);
    editor.append(form);
  };

  for (const card of outputs) {
    const row = h(
      "button",
      { class: "planner-output-row", "data-output-id": card.id },
      `${card.kind}: ${card.title}`,
    );
    row.addEventListener("click", () => editOutput(card));
    list.append(row);
  }
  clear(root);
  root.append(
    h(
      "section",
      { class: "page page-planner" },
      h("h1", {}, "Sensemaking: outputs"),
      h("div", { class: "planner-layout" }, list, editor),
    ),
  );
}

export async function renderClusterPage(root: HTMLElement, api: ApiClient): Promise<void> {
  clear(root);
  const section = h("section", { class: "page page-cluster" }, h("h1", {}, "Cluster view"));
  root.append(section);
  const view = new ClusterView(section, api);
  await view.refresh();
}
