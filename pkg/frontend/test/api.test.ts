import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiError, EditClient } from "../src/api.js";
import { EditScheduler } from "../src/scheduler.js";
import {
  initialState,
  requestFailed,
  requestStarted,
  responseArrived,
  withImage,
  type SessionState,
} from "../src/state.js";
import type { EditResponse } from "../src/types.js";
import { decodePng, encodePng, type RawImage } from "./png.js";
import { startStubServer, type StubHandle } from "./stub_server.js";

function testImage(width = 24, height = 20): RawImage {
  const rgba = new Uint8Array(width * height * 4);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const p = (y * width + x) * 4;
      const inside = (x - width / 2) ** 2 + (y - height / 2) ** 2 < 64;
      rgba[p] = (x * 11) % 256;
      rgba[p + 1] = (y * 17) % 256;
      rgba[p + 2] = (x * y) % 256;
      rgba[p + 3] = inside ? 255 : 0;
    }
  }
  return { width, height, rgba };
}

const toB64 = (img: RawImage) => Buffer.from(encodePng(img)).toString("base64");

describe("EditClient against a stub server", () => {
  let stub: StubHandle;
  beforeAll(async () => {
    stub = await startStubServer();
  });
  afterAll(async () => {
    await stub.close();
  });

  it("round-trips an edit and reports model info", async () => {
    const client = new EditClient(stub.url);
    const response = await client.edit({ image: toB64(testImage()), attribute: 0.5 });
    expect(response.model_info.attribute_name).toBe("glossy");
    expect(response.model_info.checkpoint_id).toBe("stub0001");
    expect(response.latency_ms).toBeGreaterThanOrEqual(0);
  });

  it("returns an image of the request dimensions with the background untouched", async () => {
    const request = testImage();
    const client = new EditClient(stub.url);
    const response = await client.edit({ image: toB64(request), attribute: 0.25 });
    const out = decodePng(Uint8Array.from(Buffer.from(response.image, "base64")));
    expect(out.width).toBe(request.width);
    expect(out.height).toBe(request.height);
    let objectChanged = false;
    for (let p = 0; p < request.width * request.height; p++) {
      const background = request.rgba[p * 4 + 3] <= 127;
      for (let ch = 0; ch < 3; ch++) {
        if (background) {
          expect(out.rgba[p * 4 + ch]).toBe(request.rgba[p * 4 + ch]);
        } else if (out.rgba[p * 4 + ch] !== request.rgba[p * 4 + ch]) {
          objectChanged = true;
        }
      }
    }
    expect(objectChanged).toBe(true);
  });

  it("raises ApiError with the status for rejected requests", async () => {
    const client = new EditClient(stub.url);
    await expect(client.edit({ image: toB64(testImage()), attribute: 7 })).rejects.toMatchObject({
      name: "ApiError",
      status: 400,
    });
  });

  it("reads /health", async () => {
    const client = new EditClient(stub.url);
    expect((await client.health()).status).toBe("ok");
  });
});

describe("UI flow against the stub", () => {
  it("drag -> one request -> pane shows the exact response image", async () => {
    const stub = await startStubServer();
    try {
      const client = new EditClient(stub.url);
      const photo = testImage();
      let state: SessionState = withImage(initialState(), {
        base64: toB64(photo),
        dataUrl: "data:image/png;base64,orig",
        width: photo.width,
        height: photo.height,
      });
      let lastResponse: EditResponse | null = null;
      const scheduler = new EditScheduler<EditResponse>(
        {
          send: (attribute) => client.edit({ image: state.original!.base64, attribute }),
          onStart: () => {
            state = requestStarted(state);
          },
          onResult: (attribute, response) => {
            lastResponse = response;
            state = responseArrived(state, attribute, `data:image/png;base64,${response.image}`);
          },
          onError: (_a, err) => {
            state = requestFailed(state, String(err));
          },
        },
        5,
      );
      // A quick drag: several moves inside one debounce window.
      scheduler.request(0.2);
      scheduler.request(0.4);
      scheduler.request(0.8);
      await new Promise((r) => setTimeout(r, 120));
      expect(stub.requestCount()).toBe(1);
      expect(state.editedImage).toBe(`data:image/png;base64,${lastResponse!.image}`);
      expect(state.history.map((h) => h.attribute)).toEqual([0.8]);
      expect(state.error).toBeNull();
    } finally {
      await stub.close();
    }
  });

  it("degrades visibly but keeps the session when the server is down", async () => {
    const stub = await startStubServer({ failWith: 503 });
    try {
      const client = new EditClient(stub.url);
      const photo = testImage();
      let state: SessionState = withImage(initialState(), {
        base64: toB64(photo),
        dataUrl: "data:image/png;base64,orig",
        width: photo.width,
        height: photo.height,
      });
      const scheduler = new EditScheduler<EditResponse>(
        {
          send: (attribute) => client.edit({ image: state.original!.base64, attribute }),
          onStart: () => {
            state = requestStarted(state);
          },
          onResult: (attribute, response) => {
            state = responseArrived(state, attribute, `data:image/png;base64,${response.image}`);
          },
          onError: (_a, err) => {
            const message = err instanceof ApiError ? `server error ${err.status}` : String(err);
            state = requestFailed(state, message);
          },
        },
        5,
      );
      scheduler.request(0.6);
      await new Promise((r) => setTimeout(r, 120));
      expect(state.error).toContain("503");
      expect(state.editedImage).toBeNull(); // pane unchanged (nothing had arrived)
      expect(state.original).not.toBeNull(); // session intact, still interactive
      expect(state.inFlight).toBe(false);
    } finally {
      await stub.close();
    }
  });

  it("omits the mask field so the server falls back to the alpha channel", async () => {
    const stub = await startStubServer();
    try {
      const client = new EditClient(stub.url);
      const response = await client.edit({ image: toB64(testImage()), attribute: 0.0 });
      const out = decodePng(Uint8Array.from(Buffer.from(response.image, "base64")));
      const request = testImage();
      for (let p = 0; p < out.width * out.height; p++) {
        if (request.rgba[p * 4 + 3] > 127) {
          expect(out.rgba[p * 4]).toBe(0); // attribute 0 zeroes object pixels in the stub
        }
      }
    } finally {
      await stub.close();
    }
  });
});
