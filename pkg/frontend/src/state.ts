/** Session state and its pure transitions.
 *
 * The edited pane only ever shows a server response image: no transition
 * synthesizes pixels locally. Failed requests keep the previous pane and
 * surface an error message instead.
 */

import type { HistoryEntry, LoadedImage } from "./types.js";

export interface SessionState {
  original: LoadedImage | null;
  mask: LoadedImage | null;
  attribute: number;
  editedImage: string | null; // data URL of the latest EditResponse image
  inFlight: boolean;
  error: string | null;
  history: HistoryEntry[];
}

export function initialState(): SessionState {
  return {
    original: null,
    mask: null,
    attribute: 0.5,
    editedImage: null,
    inFlight: false,
    error: null,
    history: [],
  };
}

export function clampAttribute(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(1, Math.max(0, value));
}

export function withAttribute(state: SessionState, value: number): SessionState {
  return { ...state, attribute: clampAttribute(value) };
}

export function withImage(state: SessionState, image: LoadedImage): SessionState {
  // A new photo invalidates the previous edit and its history.
  return { ...state, original: image, editedImage: null, history: [], error: null };
}

export function withMask(state: SessionState, mask: LoadedImage | null): SessionState {
  return { ...state, mask };
}

export function requestStarted(state: SessionState): SessionState {
  return { ...state, inFlight: true };
}

export function responseArrived(
  state: SessionState,
  attribute: number,
  imageDataUrl: string,
): SessionState {
  return {
    ...state,
    inFlight: false,
    error: null,
    editedImage: imageDataUrl,
    history: [...state.history, { attribute, imageDataUrl }],
  };
}

export function requestFailed(state: SessionState, message: string): SessionState {
  // Pane and history stay untouched so the session survives server trouble.
  return { ...state, inFlight: false, error: message };
}
