import { describe, expect, it } from "vitest";
import {
  clampAttribute,
  initialState,
  requestFailed,
  requestStarted,
  responseArrived,
  withAttribute,
  withImage,
} from "../src/state.js";
import type { LoadedImage } from "../src/types.js";

const img = (tag: string): LoadedImage => ({
  base64: tag,
  dataUrl: `data:image/png;base64,${tag}`,
  width: 10,
  height: 10,
});

describe("session state", () => {
  it("clamps the slider value into [0,1]", () => {
    expect(clampAttribute(-0.3)).toBe(0);
    expect(clampAttribute(1.7)).toBe(1);
    expect(clampAttribute(0.42)).toBe(0.42);
    expect(withAttribute(initialState(), 9).attribute).toBe(1);
  });

  it("appends history and updates the pane on a response", () => {
    let s = withImage(initialState(), img("orig"));
    s = requestStarted(s);
    expect(s.inFlight).toBe(true);
    s = responseArrived(s, 0.7, "data:image/png;base64,edited1");
    expect(s.inFlight).toBe(false);
    expect(s.editedImage).toBe("data:image/png;base64,edited1");
    expect(s.history).toEqual([{ attribute: 0.7, imageDataUrl: "data:image/png;base64,edited1" }]);
  });

  it("keeps the pane and history when a request fails", () => {
    let s = withImage(initialState(), img("orig"));
    s = responseArrived(s, 0.5, "data:image/png;base64,good");
    s = requestStarted(s);
    s = requestFailed(s, "server error 503: unavailable");
    expect(s.editedImage).toBe("data:image/png;base64,good");
    expect(s.history.length).toBe(1);
    expect(s.error).toContain("503");
    expect(s.inFlight).toBe(false);
    expect(s.original?.base64).toBe("orig"); // session survives
  });

  it("resets edits when a new photo is loaded", () => {
    let s = responseArrived(withImage(initialState(), img("a")), 0.5, "x");
    s = withImage(s, img("b"));
    expect(s.editedImage).toBeNull();
    expect(s.history).toEqual([]);
  });
});
