// Browser entry point: pairing form, login buttons, challenge area, verdict
// banner. Everything interesting lives in flow.ts/tiles.ts; this file only
// wires them to the page in index.html.

import { ApiClient } from "./api";
import { LoginFlow } from "./flow";
import { renderChallenge } from "./tiles";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

// the service allows CORS, so the page can live on any static host
function api(): ApiClient {
  return new ApiClient(el<HTMLInputElement>("service-url").value.replace(/\/$/, ""));
}

let flow: LoginFlow | null = null;

function setStatus(text: string, kind: "info" | "ok" | "bad" = "info"): void {
  const banner = el<HTMLElement>("status");
  banner.textContent = text;
  banner.dataset.kind = kind;
}

function refresh(): void {
  if (!flow || !flow.view) return;
  const view = flow.view;
  el<HTMLElement>("question").textContent =
    view.format === "selection" ? view.question ?? "" : "Arrange the images in the order they happened.";
  el<HTMLElement>("clicks").textContent = `clicks: ${view.clickCount}`;
  renderChallenge(el("challenge"), view, api(), {
    onChange: () => {
      el<HTMLElement>("clicks").textContent = `clicks: ${view.clickCount}`;
    },
    onRendered: () => {
      flow?.beaconRendered().catch(() => setStatus("beacon failed", "bad"));
    },
  });
}

async function startLogin(format: "arrangement" | "selection"): Promise<void> {
  const deviceId = el<HTMLInputElement>("device-id").value;
  const secret = el<HTMLInputElement>("shared-secret").value;
  flow = new LoginFlow(api(), deviceId, secret);
  const phase = await flow.start(format);
  if (phase === "fallback_required") {
    setStatus("not enough scene variety; use fallback authentication", "bad");
    return;
  }
  setStatus("challenge ready");
  refresh();
}

async function submit(): Promise<void> {
  if (!flow) return;
  try {
    const phase = await flow.submit();
    if (phase === "accepted") {
      setStatus("accepted: you are in", "ok");
      el<HTMLElement>("challenge").innerHTML = "";
    } else if (phase === "challenged" && flow.view?.clickCount === 0) {
      setStatus("wrong order, fresh challenge", "info");
      refresh();
    } else if (phase === "challenged") {
      setStatus("try again", "info");
    } else if (phase === "locked_out") {
      setStatus("locked out", "bad");
      el<HTMLButtonElement>("submit").disabled = true;
    } else {
      setStatus("fallback authentication required", "bad");
    }
  } catch {
    setStatus("network hiccup; press submit to resend (will not double-count)", "bad");
  }
}

export function boot(): void {
  el<HTMLButtonElement>("pair").addEventListener("click", async () => {
    try {
      const record = await api().pair(
        el<HTMLInputElement>("device-id").value,
        el<HTMLInputElement>("pair-code").value,
      );
      el<HTMLInputElement>("shared-secret").value = record.shared_secret;
      setStatus("paired", "ok");
    } catch (err) {
      setStatus(`pairing failed: ${err}`, "bad");
    }
  });
  el<HTMLButtonElement>("login-arrangement").addEventListener("click", () =>
    startLogin("arrangement"),
  );
  el<HTMLButtonElement>("login-selection").addEventListener("click", () =>
    startLogin("selection"),
  );
  el<HTMLButtonElement>("submit").addEventListener("click", submit);
}

if (typeof document !== "undefined" && document.getElementById("pair")) {
  boot();
}
