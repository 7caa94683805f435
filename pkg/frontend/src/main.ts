// Application boot: session cookie, telemetry agent, router, translate toggle.

import { ApiClient } from "./api.js";
import { Router } from "./router.js";
import { TelemetryAgent } from "./telemetry.js";
import { getSessionId } from "./session.js";

export interface App {
  api: ApiClient;
  agent: TelemetryAgent;
  router: Router;
}

export function boot(root: HTMLElement, baseUrl = ""): App {
  const api = new ApiClient(baseUrl);
  const agent = new TelemetryAgent(api, getSessionId());
  const router = new Router(root, api, agent);
  agent.start();
  router.start();

  const translate = document.getElementById("translate-toggle");
  if (translate) {
    let active = false;
    translate.addEventListener("click", () => {
      active = !active;
      agent.emit("translate_toggle", undefined, { active });
      // Embeddable translation widget mounts here in production; the
      // toggle itself is what the usage metrics track.
      document.body.classList.toggle("translate-active", active);
    });
  }
  return app(api, agent, router);
}

function app(api: ApiClient, agent: TelemetryAgent, router: Router): App {
  return { api, agent, router };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app")!);
}
