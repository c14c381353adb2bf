/** Wire types of the inference service and UI-side session records. */

export interface EditRequest {
  image: string; // base64 PNG
  mask?: string; // base64 PNG; omitted -> server uses the image alpha
  attribute: number; // [0,1]
}

export interface ModelInfo {
  attribute_name: string;
  checkpoint_id: string;
}

export interface EditResponse {
  image: string; // base64 PNG, original resolution, composited
  model_info: ModelInfo;
  latency_ms: number;
}

export interface HealthInfo {
  status: string;
  checkpoint_id?: string;
  attribute_name?: string;
}

/** One deployed model endpoint, from the static config file. */
export interface EndpointConfig {
  attribute: string;
  url: string;
}

export interface AppConfig {
  endpoints: EndpointConfig[];
  serverMaxEdge?: number;
}

export interface LoadedImage {
  base64: string; // PNG payload sent to the server
  dataUrl: string; // preview source
  width: number;
  height: number;
}

export interface HistoryEntry {
  attribute: number;
  /** Thumbnail/pane source; always a server-returned image. */
  imageDataUrl: string;
}
