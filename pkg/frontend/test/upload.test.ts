import { describe, expect, it } from "vitest";
import { base64FromDataUrl, looksLikeImage, planUpload } from "../src/upload.js";

describe("upload policy", () => {
  it("sends small images untouched", () => {
    expect(planUpload(640, 480)).toEqual({ resize: false, targetWidth: 640, targetHeight: 480 });
    expect(planUpload(2048, 2048)).toEqual({ resize: false, targetWidth: 2048, targetHeight: 2048 });
  });

  it("downscales a 4000px photo to the 2048 server limit", () => {
    const plan = planUpload(4000, 3000);
    expect(plan.resize).toBe(true);
    expect(plan.targetWidth).toBe(2048);
    expect(plan.targetHeight).toBe(1536);
    expect(Math.max(plan.targetWidth, plan.targetHeight)).toBeLessThanOrEqual(2048);
  });

  it("respects a custom server limit", () => {
    const plan = planUpload(100, 400, 200);
    expect(plan).toEqual({ resize: true, targetWidth: 50, targetHeight: 200 });
  });

  it("rejects non-image files by mime type", () => {
    expect(looksLikeImage({ type: "image/png" })).toBe(true);
    expect(looksLikeImage({ type: "text/plain" })).toBe(false);
  });

  it("strips the data-url prefix", () => {
    expect(base64FromDataUrl("data:image/png;base64,QUJD")).toBe("QUJD");
    expect(() => base64FromDataUrl("garbage")).toThrow();
  });
});
