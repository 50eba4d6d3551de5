/**
 * View state machine. The state is a pure function of the last server
 * payloads plus the pending local selections; reducers return new states and
 * never call the network themselves.
 */

import type { ClusterInfo, ErrorBody, ScatterPoint, Selection } from "./api.js";
import { cannotPairCount, mustPairCount } from "./geometry.js";

export type SelectionMode = "MUST" | "CANNOT_A" | "CANNOT_B" | "EDIT";

export interface ViewState {
  docId: string | null;
  clusters: ClusterInfo[];
  scatter: ScatterPoint[];
  svg: string;
  mode: SelectionMode;
  pendingMustGroups: number[][];
  pendingCannotA: number[];
  pendingCannotB: number[];
  busy: boolean; // one in-flight mutating request at a time
  runInFlight: boolean; // server reported 409 IN_FLIGHT; submit stays disabled
  toast: string | null;
}

export function initialState(): ViewState {
  return {
    docId: null,
    clusters: [],
    scatter: [],
    svg: "",
    mode: "MUST",
    pendingMustGroups: [],
    pendingCannotA: [],
    pendingCannotB: [],
    busy: false,
    runInFlight: false,
    toast: null,
  };
}

export function withDocument(state: ViewState, docId: string, svg: string): ViewState {
  return { ...initialState(), docId, svg, mode: state.mode };
}

export function withClusters(state: ViewState, clusters: ClusterInfo[]): ViewState {
  return { ...state, clusters };
}

export function withScatter(state: ViewState, points: ScatterPoint[]): ViewState {
  return { ...state, scatter: points };
}

export function withSvg(state: ViewState, svg: string): ViewState {
  return { ...state, svg };
}

export function setMode(state: ViewState, mode: SelectionMode): ViewState {
  return { ...state, mode };
}

export function setBusy(state: ViewState, busy: boolean): ViewState {
  return { ...state, busy };
}

/** Route a lasso result into the pending selections for the current mode. */
export function addLasso(state: ViewState, wordIds: number[]): ViewState {
  if (wordIds.length === 0) return state;
  switch (state.mode) {
    case "MUST":
      if (wordIds.length < 2) return { ...state, toast: "select at least 2 words" };
      return { ...state, pendingMustGroups: [...state.pendingMustGroups, wordIds] };
    case "CANNOT_A":
      return { ...state, pendingCannotA: wordIds };
    case "CANNOT_B":
      return { ...state, pendingCannotB: wordIds };
    case "EDIT":
      return state;
  }
}

export function clearPending(state: ViewState): ViewState {
  return { ...state, pendingMustGroups: [], pendingCannotA: [], pendingCannotB: [] };
}

/** A cannot selection needs both groups before it may be submitted. */
export function cannotPairReady(state: ViewState): boolean {
  return state.pendingCannotA.length > 0 && state.pendingCannotB.length > 0;
}

export function hasSubmittableSelections(state: ViewState): boolean {
  if (state.pendingMustGroups.length > 0) return true;
  return cannotPairReady(state);
}

export function submitEnabled(state: ViewState): boolean {
  if (state.busy || state.runInFlight) return false;
  if (state.pendingCannotA.length > 0 || state.pendingCannotB.length > 0) {
    if (!cannotPairReady(state)) return false;
  }
  return hasSubmittableSelections(state);
}

/** Pairwise constraints implied by the pending selections. */
export function pendingConstraintCount(state: ViewState): number {
  let total = state.pendingMustGroups.reduce((acc, g) => acc + mustPairCount(g.length), 0);
  if (cannotPairReady(state)) {
    total += cannotPairCount(state.pendingCannotA.length, state.pendingCannotB.length);
  }
  return total;
}

export function pendingSelections(state: ViewState): Selection[] {
  const out: Selection[] = state.pendingMustGroups.map((g) => ({
    kind: "must_group" as const,
    word_ids: g,
  }));
  if (cannotPairReady(state)) {
    out.push({
      kind: "cannot_group",
      group_a: state.pendingCannotA,
      group_b: state.pendingCannotB,
    });
  }
  return out;
}

/** Surface a server error verbatim; a 409 marks the run as in flight. */
export function applyError(state: ViewState, status: number, body: ErrorBody): ViewState {
  const next: ViewState = { ...state, toast: JSON.stringify(body) };
  if (status === 409 && body.code === "IN_FLIGHT") {
    next.runInFlight = true;
  }
  return next;
}

export function runSettled(state: ViewState): ViewState {
  return { ...state, runInFlight: false };
}

export function clearToast(state: ViewState): ViewState {
  return { ...state, toast: null };
}

export function clusterColor(state: ViewState, clusterId: number): string {
  const cluster = state.clusters.find((c) => c.id === clusterId);
  return cluster ? cluster.color : "#999999";
}
