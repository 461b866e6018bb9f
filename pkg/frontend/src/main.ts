/**
 * Browser entry point: builds the client from the page's
 * `checker-api` meta tag, mounts the app, and wires delegated DOM
 * events onto the re-rendered markup.
 *
 * Text inputs commit on change (blur or Enter) because every dispatch
 * re-renders the root; committing per keystroke would steal focus.
 */

import { CheckerClient, DEFAULT_BASE_URL } from "./api.js";
import { App } from "./app.js";
import { clientToPlan } from "./plan.js";
import type { ParamFormValues } from "./state.js";

const PARAM_FIELDS: ReadonlyArray<keyof ParamFormValues> = [
  "cutOffset",
  "sampleSpacing",
  "dbscanEps",
  "dbscanMinPts",
  "hullK",
];

export function apiBaseUrl(doc: Document): string {
  const meta = doc.querySelector('meta[name="checker-api"]');
  const content = meta?.getAttribute("content") ?? "";
  return content.trim() === "" ? DEFAULT_BASE_URL : content.trim();
}

function isParamField(name: string): name is keyof ParamFormValues {
  return (PARAM_FIELDS as readonly string[]).includes(name);
}

function handleAction(app: App, element: HTMLElement): void {
  const action = element.getAttribute("data-action");
  const storey = element.getAttribute("data-storey");
  switch (action) {
    case "pick-reference":
      if (storey !== null) {
        void app.pickReference(storey);
      }
      break;
    case "toggle-layer":
      if (storey !== null) {
        app.toggleLayer(storey);
      }
      break;
    case "line-side": {
      const side = element.getAttribute("data-side");
      if (side === "left" || side === "right") {
        app.setSide(side);
      }
      break;
    }
    case "run-overhang":
      void app.runOverhang();
      break;
    case "reset-line":
      app.resetLine();
      break;
    case "rerun":
      void app.rerunFootprints();
      break;
    default:
      break;
  }
}

function handlePlanClick(app: App, svg: SVGSVGElement,
                         event: MouseEvent): void {
  const rect = svg.getBoundingClientRect();
  const viewBox = svg.getAttribute("viewBox") ?? "";
  if (viewBox === "" || rect.width === 0 || rect.height === 0) {
    return;
  }
  app.planClick(
    clientToPlan(rect, viewBox, event.clientX, event.clientY));
}

function handleFieldChange(app: App, element: HTMLInputElement): void {
  const field = element.getAttribute("data-field");
  if (field === null) {
    return;
  }
  if (isParamField(field)) {
    app.editParam(field, element.value);
  } else if (field === "lineLabel") {
    app.editLineLabel(element.value);
  } else if (field === "lineLimit") {
    app.editLineLimit(element.value);
  } else if (field === "snapRadius") {
    app.setSnapRadius(Number(element.value));
  } else if (field === "modelFile") {
    const file = element.files?.[0];
    if (file !== undefined) {
      void file.arrayBuffer().then(
        (buffer) => app.uploadModel(file.name, buffer));
    }
  }
}

export function wireApp(root: HTMLElement, app: App): void {
  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    if (target === null) {
      return;
    }
    const actor = target.closest<HTMLElement>("[data-action]");
    if (actor !== null) {
      if (!actor.hasAttribute("disabled")) {
        handleAction(app, actor);
      }
      return;
    }
    const svg = target.closest<SVGSVGElement>('svg[data-role="plan"]');
    if (svg !== null) {
      handlePlanClick(app, svg, event as MouseEvent);
    }
  });

  root.addEventListener("change", (event) => {
    const target = event.target as HTMLElement | null;
    if (target instanceof HTMLInputElement
        && target.hasAttribute("data-field")
        && !target.hasAttribute("disabled")) {
      handleFieldChange(app, target);
    }
  });

  root.addEventListener("mouseover", (event) => {
    const target = event.target as HTMLElement | null;
    if (target === null) {
      return;
    }
    const hovered = target.closest<HTMLElement>(
      "[data-storey-layer], [data-storey-row]");
    if (hovered === null) {
      return;
    }
    const name = hovered.getAttribute("data-storey-layer")
      ?? hovered.getAttribute("data-storey-row");
    app.selectStorey(name);
  });
}

export function boot(doc: Document): App | null {
  const root = doc.querySelector<HTMLElement>("#app");
  if (root === null) {
    return null;
  }
  const client = new CheckerClient(apiBaseUrl(doc));
  const app = new App(client, root);
  wireApp(root, app);
  return app;
}

if (typeof document !== "undefined" && document.querySelector("#app")) {
  boot(document);
}
