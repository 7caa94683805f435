// The community platform is read-only: a full click-through of all five
// pages must issue zero non-GET requests other than telemetry POSTs.

import { afterEach, beforeEach, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { Router } from "../src/router.js";
import { TelemetryAgent } from "../src/telemetry.js";
import { FakeBackend, mountShell } from "./testutil.js";

let backend: FakeBackend;
let root: HTMLElement;
let agent: TelemetryAgent;
let router: Router;

beforeEach(() => {
  backend = new FakeBackend();
  backend.install();
  root = mountShell();
  const api = new ApiClient();
  agent = new TelemetryAgent(api, "readonly-session");
  router = new Router(root, api, agent);
});

afterEach(() => {
  agent.stop();
  window.location.hash = "";
});

async function visit(hash: string): Promise<void> {
  window.location.hash = hash;
  await router.render();
}

test("click-through of all five community pages issues only GETs plus telemetry", async () => {
  await visit("#/home");
  expect(root.querySelector(".page-home")).toBeTruthy();

  await visit("#/about");
  expect(root.querySelector(".page-about")).toBeTruthy();

  await visit("#/voices");
  expect(root.querySelectorAll(".voice-card").length).toBe(3);
  // Interact: expand an accordion, click a topic chip, run a search.
  const accordion = root.querySelector(".cited-accordion") as HTMLDetailsElement;
  accordion.open = true;
  accordion.dispatchEvent(new Event("toggle"));
  (root.querySelector(".chip") as HTMLElement).click();
  const searchInput = root.querySelector(".search-input") as HTMLInputElement;
  searchInput.value = "tree";
  (root.querySelector(".search-form") as HTMLFormElement).dispatchEvent(
    new Event("submit", { cancelable: true }),
  );
  await new Promise((r) => setTimeout(r, 0));

  await visit("#/map");
  expect(root.querySelector(".map-viewport")).toBeTruthy();
  const bubble = root.querySelector(".map-bubble, .map-dot") as HTMLElement | null;
  bubble?.click();
  await new Promise((r) => setTimeout(r, 0));

  await visit("#/outputs");
  expect(root.querySelectorAll(".output-card").length).toBeGreaterThan(0);
  (root.querySelector(".goal-clickable") as HTMLElement).click();
  await new Promise((r) => setTimeout(r, 0));

  await visit("#/feedback");
  expect(root.querySelector(".feedback-form")).toBeTruthy();

  await agent.flush();

  const nonGet = backend.requests.filter((r) => r.method !== "GET");
  const offenders = nonGet.filter((r) => !r.path.startsWith("/api/analytics/"));
  expect(offenders).toEqual([]);
  // The telemetry itself did flow.
  expect(backend.telemetryEvents.length).toBeGreaterThan(0);
});

test("card fields come verbatim from the API payload", async () => {
  await visit("#/voices");
  const cited = root.querySelector('[data-voice-id="v-cited"]') as HTMLElement;
  expect(cited.querySelector(".voice-text")!.textContent).toBe(
    "We need more street trees near the library.",
  );
  const links = cited.querySelectorAll(".cited-link");
  expect(links.length).toBe(2);

  await visit("#/outputs");
  const goal = root.querySelector('[data-output-id="out-goal"]') as HTMLElement;
  expect(goal.querySelector(".output-cited-count")!.textContent).toBe("9 cited voices");
});
