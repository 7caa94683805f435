// Hash router over the five community pages plus the planner screens.
// Community navigation reports the page to the telemetry agent; planner
// screens are internal and emit nothing.

import { ApiClient } from "./api.js";
import { clear, h } from "./dom.js";
import {
  renderAboutPage,
  renderFeedbackPage,
  renderHomePage,
  renderMapPage,
  renderOutputsPage,
  renderVoicesPage,
  type PageContext,
} from "./pages.js";
import {
  renderClusterPage,
  renderPlannerOutputs,
  renderPlannerVoices,
  renderTokenGate,
  storedToken,
} from "./planner.js";
import type { TelemetryAgent } from "./telemetry.js";
import type { CommunityPage, FacetOptions } from "./types.js";

export interface Route {
  hash: string;
  page: CommunityPage | null;
  planner: boolean;
}

export const ROUTES: Route[] = [
  { hash: "#/home", page: "home", planner: false },
  { hash: "#/about", page: "about", planner: false },
  { hash: "#/voices", page: "voices_list", planner: false },
  { hash: "#/map", page: "map", planner: false },
  { hash: "#/outputs", page: "outputs", planner: false },
  { hash: "#/feedback", page: "feedback", planner: false },
  { hash: "#/planner/voices", page: null, planner: true },
  { hash: "#/planner/outputs", page: null, planner: true },
  { hash: "#/planner/cluster", page: null, planner: true },
];

export class Router {
  private facets: FacetOptions | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private agent: TelemetryAgent,
    private win: Window = window,
  ) {}

  start(): void {
    this.win.addEventListener("hashchange", () => void this.render());
    void this.render();
  }

  current(): Route {
    const hash = this.win.location.hash || "#/home";
    return ROUTES.find((r) => r.hash === hash) ?? ROUTES[0];
  }

  private async ensureFacets(): Promise<FacetOptions | null> {
    if (this.facets) return this.facets;
    try {
      this.facets = await this.api.getFacets();
    } catch {
      this.facets = null;
    }
    return this.facets;
  }

  async render(): Promise<void> {
    const route = this.current();
    this.agent.setPage(route.page);
    const facets = await this.ensureFacets();
    const ctx: PageContext = { api: this.api, agent: this.agent, facets };

    try {
      if (route.planner) {
        await this.renderPlanner(route);
        return;
      }
      switch (route.page) {
        case "home":
          await renderHomePage(this.root, ctx);
          break;
        case "about":
          renderAboutPage(this.root);
          break;
        case "voices_list":
          await renderVoicesPage(this.root, ctx);
          break;
        case "map":
          await renderMapPage(this.root, ctx);
          break;
        case "outputs":
          await renderOutputsPage(this.root, ctx);
          break;
        case "feedback":
          renderFeedbackPage(this.root, ctx);
          break;
      }
    } catch (error) {
      clear(this.root);
      this.root.append(
        h(
          "section",
          { class: "page page-error" },
          h("h1", {}, "Nothing to show yet"),
          h("p", {}, String(error instanceof Error ? error.message : error)),
        ),
      );
    }
  }

  private async renderPlanner(route: Route): Promise<void> {
    const token = this.api.plannerToken ?? storedToken();
    if (!token) {
      renderTokenGate(this.root, (entered) => {
        this.api.plannerToken = entered;
        void this.render();
      });
      return;
    }
    this.api.plannerToken = token;
    const facets = await this.ensureFacets();
    if (!facets) throw new Error("no dataset loaded");
    if (route.hash === "#/planner/voices") {
      await renderPlannerVoices(this.root, this.api, facets);
    } else if (route.hash === "#/planner/outputs") {
      await renderPlannerOutputs(this.root, this.api, facets);
    } else {
      await renderClusterPage(this.root, this.api);
    }
  }
}
