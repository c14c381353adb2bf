/** DOM wiring: upload controls, the attribute slider, before/after panes,
 * history strip, and the error toast. All editing happens server-side.
 */

import { ApiError, EditClient } from "./api.js";
import { EditScheduler } from "./scheduler.js";
import {
  initialState,
  requestFailed,
  requestStarted,
  responseArrived,
  withAttribute,
  withImage,
  withMask,
  type SessionState,
} from "./state.js";
import type { AppConfig, EditResponse, EndpointConfig } from "./types.js";
import { DEFAULT_SERVER_MAX_EDGE, loadImageFile } from "./upload.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

let state: SessionState = initialState();
let client: EditClient;
let maxEdge = DEFAULT_SERVER_MAX_EDGE;

function render(): void {
  const before = $<HTMLImageElement>("before-pane");
  const after = $<HTMLImageElement>("after-pane");
  before.src = state.original?.dataUrl ?? "";
  if (state.editedImage) after.src = state.editedImage;
  $<HTMLSpanElement>("attribute-value").textContent = state.attribute.toFixed(2);
  $<HTMLInputElement>("attribute-slider").disabled = state.original === null;
  const toast = $<HTMLDivElement>("toast");
  toast.textContent = state.error ?? "";
  toast.hidden = state.error === null;
  $<HTMLDivElement>("spinner").hidden = !state.inFlight;

  const strip = $<HTMLDivElement>("history");
  strip.replaceChildren(
    ...state.history.slice(-12).map((entry) => {
      const fig = document.createElement("figure");
      const img = document.createElement("img");
      img.src = entry.imageDataUrl;
      const cap = document.createElement("figcaption");
      cap.textContent = entry.attribute.toFixed(2);
      fig.append(img, cap);
      return fig;
    }),
  );
}

const scheduler = new EditScheduler<EditResponse>(
  {
    send: (attribute) => {
      if (!state.original) return Promise.reject(new Error("load an image first"));
      return client.edit({
        image: state.original.base64,
        mask: state.mask?.base64,
        attribute,
      });
    },
    onStart: () => {
      state = requestStarted(state);
      render();
    },
    onResult: (attribute, response) => {
      state = responseArrived(state, attribute, `data:image/png;base64,${response.image}`);
      render();
    },
    onError: (_attribute, error) => {
      const message =
        error instanceof ApiError ? `server error ${error.status}: ${error.message}` : String(error);
      state = requestFailed(state, message);
      render();
    },
  },
  150,
);

function pickEndpoint(endpoints: EndpointConfig[], attribute: string): EndpointConfig {
  return endpoints.find((e) => e.attribute === attribute) ?? endpoints[0];
}

async function boot(): Promise<void> {
  const config = (await (await fetch("config.json")).json()) as AppConfig;
  maxEdge = config.serverMaxEdge ?? DEFAULT_SERVER_MAX_EDGE;

  const select = $<HTMLSelectElement>("endpoint-select");
  if (config.endpoints.length > 1) {
    select.replaceChildren(
      ...config.endpoints.map((e) => new Option(e.attribute, e.attribute)),
    );
    select.hidden = false;
    select.onchange = () => {
      client = new EditClient(pickEndpoint(config.endpoints, select.value).url);
    };
  }
  client = new EditClient(config.endpoints[0].url);
  $<HTMLSpanElement>("attribute-name").textContent = config.endpoints[0].attribute;

  $<HTMLInputElement>("image-input").onchange = async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      state = withImage(state, await loadImageFile(file, maxEdge));
      render();
      scheduler.fireNow(state.attribute);
    } catch (err) {
      state = requestFailed(state, String(err));
      render();
    }
  };

  $<HTMLInputElement>("mask-input").onchange = async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      state = withMask(state, await loadImageFile(file, maxEdge));
      render();
    } catch (err) {
      state = requestFailed(state, String(err));
      render();
    }
  };

  $<HTMLInputElement>("attribute-slider").oninput = (ev) => {
    const value = Number((ev.target as HTMLInputElement).value);
    state = withAttribute(state, value);
    render();
    if (state.original) scheduler.request(state.attribute);
  };

  render();
}

boot().catch((err) => {
  state = requestFailed(state, `startup failed: ${err}`);
  render();
});
