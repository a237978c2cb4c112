// Browser entry point: mounts the app and exposes minimal controls.

import { App } from "./app.js";

export async function mount(root: HTMLElement, apiBase = ""): Promise<App> {
  const app = new App(root, apiBase, fetch.bind(globalThis), window.localStorage);
  await app.start();

  const doc = root.ownerDocument;
  const controls = doc.createElement("div");
  controls.className = "controls";

  const fileInput = doc.createElement("input");
  fileInput.type = "file";
  fileInput.accept = "image/png";
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) {
      void app.analyze(file);
    }
  });
  controls.appendChild(fileInput);

  const analyzeButton = doc.createElement("button");
  analyzeButton.textContent = "Analyze Infographic";
  analyzeButton.addEventListener("click", () => fileInput.click());
  controls.appendChild(analyzeButton);

  const recommendButton = doc.createElement("button");
  recommendButton.textContent = "Get Recommendations";
  recommendButton.addEventListener("click", () => void app.getRecommendations(5));
  controls.appendChild(recommendButton);

  const bindButton = doc.createElement("button");
  bindButton.textContent = "Bind Selection";
  bindButton.addEventListener("click", () => app.bindSelection());
  controls.appendChild(bindButton);

  const bookmarkButton = doc.createElement("button");
  bookmarkButton.textContent = "Bookmark";
  bookmarkButton.addEventListener("click", () => void app.bookmarkSelected());
  controls.appendChild(bookmarkButton);

  root.prepend(controls);
  return app;
}
