import { ApiClient } from "./api.js";
import { App } from "./app.js";

function param(name: string): string | undefined {
  return new URLSearchParams(window.location.search).get(name) ?? undefined;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  let annotator = param("annotator") ?? window.localStorage.getItem("annotator") ?? "";
  if (!annotator) {
    annotator = window.prompt("annotator name?")?.trim() ?? "";
  }
  if (!annotator) {
    root.textContent = "an annotator name is required (use ?annotator=NAME)";
    return;
  }
  window.localStorage.setItem("annotator", annotator);
  const app = new App(root, new ApiClient((url, init) => fetch(url, init)));
  window.addEventListener("online", () => void app.flushQueue());
  try {
    await app.start(annotator, param("dialect"));
  } catch (err) {
    root.textContent = `could not start a session: ${err instanceof Error ? err.message : err}`;
  }
}

void boot();
