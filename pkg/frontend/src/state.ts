/**
 * Pure state core: server-owned session data, view state, and the
 * reducer tying them together.
 *
 * Invariants enforced here:
 *  - the reference storey always names a storey of the current session;
 *  - a facade-line selection is complete only with two distinct
 *    endpoints and a side;
 *  - layer toggles and storey selection only accept known storeys.
 */

import type {
  ApiFailure,
  ComputeRequestBody,
  FootprintsResponse,
  LineSide,
  OverhangResponse,
  OverlapsResponse,
  PlanPoint,
  StoreySummary,
} from "./types.js";

export interface ParamFormValues {
  cutOffset: string;
  sampleSpacing: string;
  dbscanEps: string;
  dbscanMinPts: string;
  hullK: string;
}

export interface LineDraft {
  label: string;
  limitText: string;
  side: LineSide;
  a: PlanPoint | null;
  b: PlanPoint | null;
  note: string | null;
}

export interface ViewState {
  selectedStorey: string | null;
  hiddenLayers: string[];
  referenceStorey: string | null;
  params: ParamFormValues;
  line: LineDraft;
  snapRadiusM: number;
}

export interface SessionData {
  sessionId: string | null;
  modelName: string | null;
  groundStorey: string | null;
  storeys: StoreySummary[];
  footprints: FootprintsResponse | null;
  overlaps: OverlapsResponse | null;
  previousOverlaps: OverlapsResponse | null;
  overhang: OverhangResponse | null;
  failure: ApiFailure | null;
  busy: boolean;
  cacheHit: boolean;
}

export interface AppState {
  data: SessionData;
  view: ViewState;
}

export const DEFAULT_PARAM_FORM: ParamFormValues = {
  cutOffset: "1.0",
  sampleSpacing: "0.2",
  dbscanEps: "1.0",
  dbscanMinPts: "4",
  hullK: "7",
};

export const DEFAULT_SNAP_RADIUS_M = 0.5;
export const DEFAULT_LINE_LIMIT = "10";

export const IDENTICAL_POINT_NOTE =
  "line endpoints must be two distinct vertices";
export const NO_VERTEX_NOTE = "no polygon vertex within the snap radius";

export type Action =
  | { type: "session-loaded"; sessionId: string; modelName: string;
      groundStorey: string; storeys: StoreySummary[] }
  | { type: "footprints-loaded"; payload: FootprintsResponse }
  | { type: "overlaps-loaded"; payload: OverlapsResponse }
  | { type: "overhang-loaded"; payload: OverhangResponse }
  | { type: "compute-started" }
  | { type: "idle" }
  | { type: "request-failed"; failure: ApiFailure }
  | { type: "cache-hit" }
  | { type: "select-storey"; name: string | null }
  | { type: "toggle-layer"; name: string }
  | { type: "edit-param"; field: keyof ParamFormValues; value: string }
  | { type: "line-point"; point: PlanPoint }
  | { type: "line-side"; side: LineSide }
  | { type: "line-label"; value: string }
  | { type: "line-limit"; value: string }
  | { type: "line-note"; note: string }
  | { type: "line-reset" }
  | { type: "set-snap-radius"; value: number };

export function emptyLineDraft(): LineDraft {
  return {
    label: "",
    limitText: DEFAULT_LINE_LIMIT,
    side: "left",
    a: null,
    b: null,
    note: null,
  };
}

export function initialState(): AppState {
  return {
    data: {
      sessionId: null,
      modelName: null,
      groundStorey: null,
      storeys: [],
      footprints: null,
      overlaps: null,
      previousOverlaps: null,
      overhang: null,
      failure: null,
      busy: false,
      cacheHit: false,
    },
    view: {
      selectedStorey: null,
      hiddenLayers: [],
      referenceStorey: null,
      params: { ...DEFAULT_PARAM_FORM },
      line: emptyLineDraft(),
      snapRadiusM: DEFAULT_SNAP_RADIUS_M,
    },
  };
}

export function samePlanPoint(a: PlanPoint, b: PlanPoint): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

/** Two distinct endpoints and a side — nothing less counts. */
export function lineComplete(line: LineDraft): boolean {
  return line.a !== null && line.b !== null
    && !samePlanPoint(line.a, line.b)
    && (line.side === "left" || line.side === "right");
}

export function storeyNames(data: SessionData): string[] {
  return data.storeys.map((storey) => storey.name);
}

/** Storeys whose cut produced no footprint polygon at all. */
export function emptyStoreyNames(data: SessionData): string[] {
  if (!data.footprints) {
    return [];
  }
  return data.footprints.storeys
    .filter((storey) => storey.polygons.length === 0)
    .map((storey) => storey.name);
}

/** Form fields that do not parse as finite numbers, by label. */
export function paramFormErrors(params: ParamFormValues): string[] {
  const errors: string[] = [];
  const entries: Array<[string, string]> = [
    ["cut offset", params.cutOffset],
    ["sample spacing", params.sampleSpacing],
    ["cluster radius", params.dbscanEps],
    ["cluster minimum points", params.dbscanMinPts],
    ["hull neighbours", params.hullK],
  ];
  for (const [label, text] of entries) {
    if (text.trim() === "" || !Number.isFinite(Number(text))) {
      errors.push(`${label} is not a number`);
    }
  }
  return errors;
}

/**
 * The exact request body the compute endpoints receive. Form strings
 * convert by Number() and nothing else, so what the officer typed is
 * what the service gets.
 */
export function buildComputeBody(
  view: ViewState,
  reference: string | null,
): ComputeRequestBody {
  const body: ComputeRequestBody = {
    footprint: {
      cut_offset: Number(view.params.cutOffset),
      sample_spacing: Number(view.params.sampleSpacing),
      dbscan_eps: Number(view.params.dbscanEps),
      dbscan_min_pts: Number(view.params.dbscanMinPts),
      hull_k: Number(view.params.hullK),
    },
  };
  if (reference !== null) {
    body.reference_storey = reference;
  }
  return body;
}

function toggleSorted(values: string[], value: string): string[] {
  const next = values.includes(value)
    ? values.filter((item) => item !== value)
    : [...values, value];
  return next.sort();
}

function referenceFailure(reference: string): ApiFailure {
  return {
    code: "reference-not-in-session",
    message: `reference storey ${reference} is not part of this session`,
    detail: null,
  };
}

export function reduce(state: AppState, action: Action): AppState {
  const { data, view } = state;
  switch (action.type) {
    case "session-loaded": {
      const names = action.storeys.map((storey) => storey.name);
      return {
        data: {
          ...initialState().data,
          sessionId: action.sessionId,
          modelName: action.modelName,
          groundStorey: action.groundStorey,
          storeys: action.storeys,
          busy: data.busy,
        },
        view: {
          ...initialState().view,
          params: view.params,
          snapRadiusM: view.snapRadiusM,
          referenceStorey: names.includes(action.groundStorey)
            ? action.groundStorey
            : null,
        },
      };
    }
    case "footprints-loaded": {
      const reference = action.payload.reference_storey;
      if (!storeyNames(data).includes(reference)) {
        return {
          data: { ...data, failure: referenceFailure(reference) },
          view,
        };
      }
      return {
        data: { ...data, footprints: action.payload, failure: null,
                cacheHit: false },
        view: { ...view, referenceStorey: reference },
      };
    }
    case "overlaps-loaded": {
      const reference = action.payload.reference_storey;
      if (!storeyNames(data).includes(reference)) {
        return {
          data: { ...data, failure: referenceFailure(reference) },
          view,
        };
      }
      return {
        data: {
          ...data,
          previousOverlaps: data.overlaps,
          overlaps: action.payload,
          failure: null,
          cacheHit: false,
        },
        view: { ...view, referenceStorey: reference },
      };
    }
    case "overhang-loaded":
      return {
        data: { ...data, overhang: action.payload, failure: null },
        view,
      };
    case "compute-started":
      return {
        data: { ...data, busy: true, failure: null, cacheHit: false },
        view,
      };
    case "idle":
      return { data: { ...data, busy: false }, view };
    case "request-failed":
      return {
        data: { ...data, busy: false, failure: action.failure },
        view,
      };
    case "cache-hit":
      return { data: { ...data, cacheHit: true }, view };
    case "select-storey": {
      const name = action.name !== null
        && storeyNames(data).includes(action.name) ? action.name : null;
      return { data, view: { ...view, selectedStorey: name } };
    }
    case "toggle-layer": {
      if (!storeyNames(data).includes(action.name)) {
        return state;
      }
      return {
        data,
        view: { ...view,
                hiddenLayers: toggleSorted(view.hiddenLayers, action.name) },
      };
    }
    case "edit-param":
      return {
        data,
        view: {
          ...view,
          params: { ...view.params, [action.field]: action.value },
        },
      };
    case "line-point": {
      const line = view.line;
      if (line.a === null || line.b !== null) {
        // first click, or a fresh start after a completed pair
        return {
          data,
          view: { ...view,
                  line: { ...line, a: action.point, b: null, note: null } },
        };
      }
      if (samePlanPoint(line.a, action.point)) {
        return {
          data,
          view: { ...view, line: { ...line, note: IDENTICAL_POINT_NOTE } },
        };
      }
      return {
        data,
        view: { ...view, line: { ...line, b: action.point, note: null } },
      };
    }
    case "line-side":
      return { data, view: { ...view,
                             line: { ...view.line, side: action.side } } };
    case "line-label":
      return { data, view: { ...view,
                             line: { ...view.line, label: action.value } } };
    case "line-limit":
      return {
        data,
        view: { ...view, line: { ...view.line, limitText: action.value } },
      };
    case "line-note":
      return { data, view: { ...view,
                             line: { ...view.line, note: action.note } } };
    case "line-reset":
      return {
        data,
        view: {
          ...view,
          line: { ...emptyLineDraft(), label: view.line.label,
                  limitText: view.line.limitText, side: view.line.side },
        },
      };
    case "set-snap-radius":
      if (!Number.isFinite(action.value) || action.value <= 0) {
        return state;
      }
      return { data, view: { ...view, snapRadiusM: action.value } };
  }
}
