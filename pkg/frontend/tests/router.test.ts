// Route gating and rendering: community routes open, planner routes behind
// the token gate, unknown hashes fall back to home.

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
  window.localStorage.clear();
  const api = new ApiClient();
  agent = new TelemetryAgent(api, "router-session");
  router = new Router(root, api, agent);
});

afterEach(() => {
  agent.stop();
  window.location.hash = "";
});

test("default and unknown hashes land on home", async () => {
  window.location.hash = "";
  await router.render();
  expect(root.querySelector(".page-home")).toBeTruthy();

  window.location.hash = "#/nonsense";
  await router.render();
  expect(root.querySelector(".page-home")).toBeTruthy();
});

test("planner route without a token shows the sign-in gate", async () => {
  window.location.hash = "#/planner/voices";
  await router.render();
  expect(root.querySelector(".token-gate")).toBeTruthy();
  expect(root.querySelector(".planner-voice-list")).toBeFalsy();
});

test("entering a token unlocks the sensemaking voices screen", async () => {
  window.location.hash = "#/planner/voices";
  await router.render();
  const input = root.querySelector(".token-input") as HTMLInputElement;
  input.value = backend.plannerToken;
  (root.querySelector(".token-gate") as HTMLFormElement).dispatchEvent(
    new Event("submit", { cancelable: true }),
  );
  await new Promise((r) => setTimeout(r, 0));
  await new Promise((r) => setTimeout(r, 0));
  expect(root.querySelectorAll(".planner-voice-row").length).toBe(3);
});

test("planner cluster view renders server-laid-out circles verbatim", async () => {
  window.localStorage.setItem("v2v_planner_token", backend.plannerToken);
  window.location.hash = "#/planner/cluster";
  await router.render();
  const circle = root.querySelector(".category-circle")!;
  expect(circle.getAttribute("r")).toBe("5.656854249492381");
  expect(root.querySelectorAll(".member-point").length).toBe(2);
});

test("community navigation reports page views for the five pages", async () => {
  for (const hash of ["#/home", "#/about", "#/voices", "#/map", "#/outputs", "#/feedback"]) {
    window.location.hash = hash;
    await router.render();
  }
  await agent.flush();
  const pageViews = backend.telemetryEvents
    .map((line) => JSON.parse(line))
    .filter((e) => e.kind === "page_view")
    .map((e) => e.page);
  expect(pageViews).toEqual(["home", "about", "voices_list", "map", "outputs", "feedback"]);
});
