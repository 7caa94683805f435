// Community-facing pages: project context home, about, voices list with
// filters, map, outputs (goals and strategies side by side), feedback.
// All of them are read-only; the only POSTs a community visitor triggers
// are telemetry and an explicit feedback submission.

import { h, clear } from "./dom.js";
import { renderOutputCard, renderVoiceCard, type ChipInfo } from "./cards.js";
import { TileMap } from "./map.js";
import type { ApiClient } from "./api.js";
import type { TelemetryAgent } from "./telemetry.js";
import type { FacetOptions, OutputCard, VoiceQuery } from "./types.js";

export interface PageContext {
  api: ApiClient;
  agent: TelemetryAgent;
  facets: FacetOptions | null;
}

function chipInfoLookup(facets: FacetOptions | null) {
  return (kind: "event" | "phase" | "topic", id: string): ChipInfo | null => {
    if (!facets) return null;
    if (kind === "event") {
      const event = facets.events.find((e) => e.id === id);
      return event
        ? {
            name: event.name,
            kindLabel: `Event · ${event.kind}`,
            description: (event as { description?: string }).description ?? "",
          }
        : null;
    }
    if (kind === "topic") {
      const topic = facets.topics.find((t) => t.id === id);
      return topic
        ? {
            name: topic.name,
            kindLabel: "Topic",
            description: (topic as { description?: string }).description ?? "",
          }
        : null;
    }
    return null;
  };
}

export async function renderHomePage(root: HTMLElement, ctx: PageContext): Promise<void> {
  const project = await ctx.api.getProject();
  const page = h(
    "section",
    { class: "page page-home" },
    h("h1", {}, project.name),
    h("p", { class: "project-description" }, project.description),
    h("h2", {}, "Goals overview"),
    h("p", { class: "goals-overview" }, project.goals_overview),
    h("h2", {}, "Engagement phases"),
  );
  const timeline = h("ol", { class: "phase-timeline" });
  for (const phase of project.phases) {
    const group = project.events_by_phase.find((g) => g.phase_id === phase.id);
    const events = h("ul", { class: "phase-events" });
    for (const event of group?.events ?? []) {
      events.append(h("li", {}, `${event.name} (${event.kind})`));
    }
    timeline.append(
      h(
        "li",
        { class: `phase phase-${phase.status}` },
        h("strong", {}, phase.name),
        h(
          "span",
          { class: "phase-dates" },
          ` ${phase.start_date}${phase.end_date ? " to " + phase.end_date : ""} · ${phase.status}`,
        ),
        h("p", {}, phase.description),
        events,
      ),
    );
  }
  page.append(timeline);
  page.append(
    h(
      "p",
      { class: "home-banner" },
      "Explore what neighbors said on the ",
      h("a", { href: "#/voices" }, "voices page"),
      ", see where feedback came from on the ",
      h("a", { href: "#/map" }, "map"),
      ", or read the resulting ",
      h("a", { href: "#/outputs" }, "goals and strategies"),
      ".",
    ),
  );
  clear(root);
  root.append(page);
}

export function renderAboutPage(root: HTMLElement): void {
  clear(root);
  root.append(
    h(
      "section",
      { class: "page page-about" },
      h("h1", {}, "About this platform"),
      h(
        "p",
        {},
        "This platform traces how community input shaped the neighborhood plan. " +
          "Every voice collected at an engagement event is published here with " +
          "its context, and every goal or strategy links back to the voices " +
          "that informed it. Uncited voices carry a rationale explaining why " +
          "they were not incorporated.",
      ),
      h(
        "p",
        {},
        "The plan is a living document: phases, events, and outputs update as " +
          "the process moves forward.",
      ),
    ),
  );
}

export async function renderVoicesPage(root: HTMLElement, ctx: PageContext): Promise<void> {
  const query: VoiceQuery = { limit: 25, offset: 0, sort: "phase_chronological" };
  const list = h("div", { class: "voice-list" });
  const status = h("p", { class: "list-status" });
  const pager = h("div", { class: "pager" });

  const facets = ctx.facets;
  const sidebar = h("aside", { class: "filter-sidebar" });

  const searchInput = h("input", {
    type: "search",
    class: "search-input",
    placeholder: "Search voices",
  }) as HTMLInputElement;
  const searchForm = h("form", { class: "search-form" }, searchInput, h("button", {}, "Search"));
  searchForm.addEventListener("submit", (event) => {
    event.preventDefault();
    query.search = searchInput.value || undefined;
    query.offset = 0;
    ctx.agent.emit("search", undefined, { q: searchInput.value });
    void load();
  });
  sidebar.append(searchForm);

  const facetGroup = (
    label: string,
    key: "event_id" | "topic_id" | "sub_geography_id" | "output_id",
    options: { id: string; name: string }[],
  ) => {
    const group = h("fieldset", { class: "facet-group" }, h("legend", {}, label));
    for (const option of options) {
      const box = h("input", { type: "checkbox", value: option.id }) as HTMLInputElement;
      box.addEventListener("change", () => {
        const selected = (query[key] ?? []).filter((v) => v !== option.id);
        if (box.checked) selected.push(option.id);
        query[key] = selected.length ? selected : undefined;
        query.offset = 0;
        ctx.agent.emit("filter_apply", option.id, { facet: key });
        void load();
      });
      group.append(h("label", { class: "facet-option" }, box, option.name));
    }
    return group;
  };
  if (facets) {
    sidebar.append(facetGroup("Events", "event_id", facets.events));
    sidebar.append(facetGroup("Topics", "topic_id", facets.topics));
    if (facets.sub_geographies.length) {
      sidebar.append(facetGroup("Areas", "sub_geography_id", facets.sub_geographies));
    }
    sidebar.append(
      facetGroup(
        "Outputs",
        "output_id",
        facets.outputs.map((o) => ({ id: o.id, name: o.title })),
      ),
    );
  }
  const citedSelect = h(
    "select",
    { class: "cited-select" },
    h("option", { value: "" }, "All voices"),
    h("option", { value: "true" }, "Cited only"),
    h("option", { value: "false" }, "Uncited only"),
  ) as HTMLSelectElement;
  citedSelect.addEventListener("change", () => {
    query.cited = citedSelect.value === "" ? undefined : citedSelect.value === "true";
    query.offset = 0;
    ctx.agent.emit("filter_apply", undefined, { facet: "cited" });
    void load();
  });
  sidebar.append(h("fieldset", { class: "facet-group" }, h("legend", {}, "Citations"), citedSelect));

  const sortSelect = h(
    "select",
    { class: "sort-select" },
    h("option", { value: "phase_chronological" }, "By project phase"),
    h("option", { value: "collected_at" }, "By date collected"),
  ) as HTMLSelectElement;
  sortSelect.addEventListener("change", () => {
    query.sort = sortSelect.value as VoiceQuery["sort"];
    void load();
  });
  sidebar.append(h("fieldset", { class: "facet-group" }, h("legend", {}, "Sort"), sortSelect));

  async function load(): Promise<void> {
    const page = await ctx.api.getVoices(query);
    clear(list);
    for (const voice of page.items) {
      list.append(
        renderVoiceCard(voice, {
          agent: ctx.agent,
          chipInfo: chipInfoLookup(ctx.facets),
          onOutputClick: () => {
            window.location.hash = "#/outputs";
          },
        }),
      );
    }
    status.textContent = `${page.total} voices · showing ${page.offset + 1}-${Math.min(
      page.offset + page.items.length,
      page.total,
    )}`;
    if (!page.total) status.textContent = "No voices match these filters.";
    clear(pager);
    const prev = h("button", { class: "pager-prev" }, "Previous") as HTMLButtonElement;
    const next = h("button", { class: "pager-next" }, "Next") as HTMLButtonElement;
    prev.disabled = page.offset === 0;
    next.disabled = page.offset + page.items.length >= page.total;
    prev.addEventListener("click", () => {
      query.offset = Math.max(0, (query.offset ?? 0) - (query.limit ?? 25));
      void load();
    });
    next.addEventListener("click", () => {
      query.offset = (query.offset ?? 0) + (query.limit ?? 25);
      void load();
    });
    pager.append(prev, next);
  }

  const page = h(
    "section",
    { class: "page page-voices" },
    h("h1", {}, "Community voices"),
    h(
      "p",
      { class: "viz-banner" },
      "Prefer a picture? Try the ",
      h("a", { href: "#/map" }, "map view"),
      " or the ",
      h("a", { href: "#/outputs" }, "outputs page"),
      ".",
    ),
    h("div", { class: "voices-layout" }, sidebar, h("div", { class: "voices-main" }, status, list, pager)),
  );
  clear(root);
  root.append(page);
  await load();
}

export async function renderMapPage(root: HTMLElement, ctx: PageContext): Promise<void> {
  const container = h("div", { class: "map-container" });
  const detail = h("div", { class: "map-detail" });
  const page = h(
    "section",
    { class: "page page-map" },
    h("h1", {}, "Voices on the map"),
    h("p", {}, "Dots are individual voices colored by topic; bubbles group nearby voices. Zoom in for detail."),
    container,
    detail,
  );
  clear(root);
  root.append(page);

  const map = new TileMap(container, ctx.api, ctx.agent, {
    onPointClick: async (cluster) => {
      clear(detail);
      const ids = cluster.member_voice_ids.slice(0, 5);
      for (const id of ids) {
        const voice = await ctx.api.getVoice(id);
        detail.append(renderVoiceCard(voice, { agent: ctx.agent, chipInfo: chipInfoLookup(ctx.facets) }));
      }
    },
  });
  if (ctx.facets) map.setTopics(ctx.facets.topics);
  await map.refresh();
}

export async function renderOutputsPage(root: HTMLElement, ctx: PageContext): Promise<void> {
  const goalsColumn = h("div", { class: "outputs-column goals-column" });
  const strategiesColumn = h("div", { class: "outputs-column strategies-column" });
  const insightsRow = h("div", { class: "insights-row" });
  const strategiesHeading = h("h2", {}, "Strategies");

  const all = await ctx.api.getOutputs();
  const byKind = (kind: string) => all.filter((o) => o.kind === kind);

  const renderCards = (column: HTMLElement, cards: OutputCard[]) => {
    clear(column);
    for (const card of cards) {
      const el = renderOutputCard(card, {
        agent: ctx.agent,
        topics: ctx.facets?.topics,
        onGoalClick: (goalId) => void filterStrategies(goalId),
      });
      el.addEventListener("click", () => ctx.agent.emit("output_card_view", card.id), {
        once: true,
      });
      column.append(el);
    }
  };

  let activeGoal: string | null = null;
  async function filterStrategies(goalId: string): Promise<void> {
    if (activeGoal === goalId) {
      activeGoal = null;
      strategiesHeading.textContent = "Strategies";
      renderCards(strategiesColumn, byKind("recommendation"));
      return;
    }
    activeGoal = goalId;
    const strategies = await ctx.api.getOutputs({ goal_id: goalId });
    ctx.agent.emit("output_filter", goalId, { by: "goal" });
    const goal = all.find((o) => o.id === goalId);
    strategiesHeading.textContent = `Strategies for: ${goal?.title ?? goalId}`;
    renderCards(strategiesColumn, strategies);
  }

  renderCards(goalsColumn, byKind("goal"));
  renderCards(strategiesColumn, byKind("recommendation"));
  renderCards(insightsRow, byKind("insight"));

  const page = h(
    "section",
    { class: "page page-outputs" },
    h("h1", {}, "From voices to outcomes"),
    h("p", {}, "Click a goal to see the strategies it sparked; the colored bar on each card shows which topics its cited voices address."),
    h(
      "div",
      { class: "outputs-side-by-side" },
      h("div", {}, h("h2", {}, "Goals"), goalsColumn),
      h("div", {}, strategiesHeading, strategiesColumn),
    ),
    h("h2", {}, "Insights"),
    insightsRow,
  );
  clear(root);
  root.append(page);
}

export function renderFeedbackPage(root: HTMLElement, ctx: PageContext): void {
  const textarea = h("textarea", {
    class: "feedback-text",
    rows: "6",
    placeholder: "What works? What is missing?",
  }) as HTMLTextAreaElement;
  const heard = h(
    "select",
    { class: "feedback-heard" },
    h("option", { value: "" }, "Choose one"),
    h("option", { value: "yes" }, "Yes"),
    h("option", { value: "somewhat" }, "Somewhat"),
    h("option", { value: "no" }, "No"),
  ) as HTMLSelectElement;
  const note = h("p", { class: "feedback-status" });
  const form = h(
    "form",
    { class: "feedback-form" },
    h("label", {}, "Do you feel your voice is reflected in this plan?", heard),
    h("label", {}, "Tell us more", textarea),
    h("button", { type: "submit" }, "Send feedback"),
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void ctx.api
      .postFeedback({ heard: heard.value, comments: textarea.value, page: "feedback" })
      .then(() => {
        note.textContent = "Thank you! Your feedback was recorded.";
        textarea.value = "";
      })
      .catch(() => {
        note.textContent = "Could not send feedback right now.";
      });
  });
  clear(root);
  root.append(
    h(
      "section",
      { class: "page page-feedback" },
      h("h1", {}, "Feedback"),
      h("p", {}, "Help improve this platform."),
      form,
      note,
    ),
  );
}
