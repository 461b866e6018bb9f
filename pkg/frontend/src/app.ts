/**
 * Controller wiring the pure state core to the HTTP client and the DOM
 * root. All service traffic funnels through `flight`, which enforces
 * the one-request-in-flight rule and turns thrown ApiErrors into the
 * failure banner with the service's own code and message.
 */

import { ApiError } from "./api.js";
import type { CheckerClient } from "./api.js";
import { snapToVertex } from "./plan.js";
import { renderApp } from "./render.js";
import {
  buildComputeBody,
  emptyStoreyNames,
  initialState,
  lineComplete,
  NO_VERTEX_NOTE,
  paramFormErrors,
  reduce,
  storeyNames,
} from "./state.js";
import type { Action, AppState, ParamFormValues } from "./state.js";
import type {
  LineSide,
  OverhangRequestBody,
  PlanPoint,
  Ring,
} from "./types.js";

/** The only DOM capability the controller needs. */
export interface RootLike {
  innerHTML: string;
}

function toFailure(error: unknown): Action {
  if (error instanceof ApiError) {
    return {
      type: "request-failed",
      failure: { code: error.code, message: error.message,
                 detail: error.detail },
    };
  }
  const message = error instanceof Error ? error.message : String(error);
  return {
    type: "request-failed",
    failure: { code: "client-error", message, detail: null },
  };
}

export class App {
  public state: AppState;

  constructor(
    private readonly client: CheckerClient,
    private readonly root: RootLike,
  ) {
    this.state = initialState();
    this.paint();
  }

  public dispatch(action: Action): void {
    this.state = reduce(this.state, action);
    this.paint();
  }

  private paint(): void {
    this.root.innerHTML = renderApp(this.state);
  }

  /**
   * Run one service conversation. A second call while busy is a no-op;
   * the render layer disables the controls meanwhile.
   */
  private async flight(work: () => Promise<void>): Promise<void> {
    if (this.state.data.busy) {
      return;
    }
    this.dispatch({ type: "compute-started" });
    try {
      await work();
    } catch (error) {
      this.dispatch(toFailure(error));
      return;
    }
    this.dispatch({ type: "idle" });
  }

  public async uploadModel(
    fileName: string,
    payload: string | ArrayBuffer,
  ): Promise<void> {
    await this.flight(async () => {
      const upload = await this.client.upload(fileName, payload);
      const storeys = await this.client.storeys(upload.session_id);
      this.dispatch({
        type: "session-loaded",
        sessionId: upload.session_id,
        modelName: storeys.model,
        groundStorey: storeys.ground_storey,
        storeys: storeys.storeys,
      });
      await this.refreshComputations(this.state.view.referenceStorey);
    });
  }

  /** Fetch footprints and the overlap table for the given reference. */
  private async refreshComputations(
    reference: string | null,
  ): Promise<void> {
    const sessionId = this.state.data.sessionId;
    if (sessionId === null) {
      return;
    }
    const body = buildComputeBody(this.state.view, reference);
    const footprints = await this.client.footprints(sessionId, body);
    this.dispatch({ type: "footprints-loaded", payload: footprints });
    const overlaps = await this.client.overlaps(sessionId, body);
    this.dispatch({ type: "overlaps-loaded", payload: overlaps });
  }

  /** Re-run the footprint pipeline with the current form values. */
  public async rerunFootprints(): Promise<void> {
    if (this.state.data.sessionId === null || this.state.data.busy) {
      return;
    }
    const errors = paramFormErrors(this.state.view.params);
    if (errors.length > 0) {
      this.dispatch({
        type: "request-failed",
        failure: { code: "invalid-form", message: errors.join("; "),
                   detail: null },
      });
      return;
    }
    await this.flight(async () => {
      await this.refreshComputations(this.state.view.referenceStorey);
    });
  }

  /**
   * Promote a storey to reference and re-run the overlap table.
   * Re-picking the current reference answers from what is already on
   * screen — no request leaves the browser.
   */
  public async pickReference(name: string): Promise<void> {
    const { data } = this.state;
    if (data.sessionId === null || data.busy) {
      return;
    }
    if (!storeyNames(data).includes(name)
        || emptyStoreyNames(data).includes(name)) {
      return;
    }
    if (data.overlaps !== null && data.overlaps.reference_storey === name) {
      this.dispatch({ type: "cache-hit" });
      return;
    }
    await this.flight(async () => {
      await this.refreshComputations(name);
    });
  }

  /**
   * A click on the plan, already mapped to model coordinates. Snaps to
   * the nearest footprint vertex of the reference storey (or the first
   * storey with a footprint) so line endpoints are always vertices the
   * service itself returned.
   */
  public planClick(point: PlanPoint): void {
    const { data, view } = this.state;
    if (data.footprints === null || data.busy) {
      return;
    }
    const rings = this.snapRings();
    const snapped = snapToVertex(point, rings, view.snapRadiusM);
    if (snapped === null) {
      this.dispatch({ type: "line-note", note: NO_VERTEX_NOTE });
      return;
    }
    this.dispatch({ type: "line-point", point: snapped });
  }

  private snapRings(): Ring[] {
    const footprints = this.state.data.footprints;
    if (footprints === null) {
      return [];
    }
    const reference = footprints.storeys.find(
      (storey) => storey.name === this.state.view.referenceStorey
        && storey.polygons.length > 0,
    );
    const source = reference
      ?? footprints.storeys.find((storey) => storey.polygons.length > 0);
    return source === undefined ? [] : source.polygons;
  }

  /** Post the composed facade line against every storey with a footprint. */
  public async runOverhang(): Promise<void> {
    const { data, view } = this.state;
    const line = view.line;
    if (data.sessionId === null || data.busy || data.footprints === null
        || !lineComplete(line) || line.a === null || line.b === null) {
      return;
    }
    const limit = Number(line.limitText);
    if (line.limitText.trim() === "" || !Number.isFinite(limit)) {
      this.dispatch({
        type: "request-failed",
        failure: { code: "invalid-form",
                   message: "overhang limit is not a number", detail: null },
      });
      return;
    }
    const targets = data.footprints.storeys
      .filter((storey) => storey.polygons.length > 0)
      .map((storey) => storey.name);
    const body: OverhangRequestBody = {
      lines: [{
        label: line.label.trim() === "" ? "facade" : line.label.trim(),
        p1: line.a,
        p2: line.b,
        side: line.side,
        limit,
      }],
      target_storeys: targets,
    };
    await this.flight(async () => {
      const sessionId = this.state.data.sessionId;
      if (sessionId === null) {
        return;
      }
      const payload = await this.client.overhang(sessionId, body);
      this.dispatch({ type: "overhang-loaded", payload });
    });
  }

  public toggleLayer(name: string): void {
    this.dispatch({ type: "toggle-layer", name });
  }

  public selectStorey(name: string | null): void {
    if (this.state.view.selectedStorey === name) {
      return;
    }
    this.dispatch({ type: "select-storey", name });
  }

  public editParam(field: keyof ParamFormValues, value: string): void {
    this.dispatch({ type: "edit-param", field, value });
  }

  public setSide(side: LineSide): void {
    this.dispatch({ type: "line-side", side });
  }

  public editLineLabel(value: string): void {
    this.dispatch({ type: "line-label", value });
  }

  public editLineLimit(value: string): void {
    this.dispatch({ type: "line-limit", value });
  }

  public setSnapRadius(value: number): void {
    this.dispatch({ type: "set-snap-radius", value });
  }

  public resetLine(): void {
    this.dispatch({ type: "line-reset" });
  }
}
