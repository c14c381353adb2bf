/** File intake: validation, preview data URLs, and the downscale policy.
 *
 * Images larger than the server's edge limit are resampled client-side
 * (canvas) before upload; smaller ones are sent byte-for-byte.
 */

import type { LoadedImage } from "./types.js";

export const DEFAULT_SERVER_MAX_EDGE = 2048;

export interface UploadPlan {
  resize: boolean;
  targetWidth: number;
  targetHeight: number;
}

export function planUpload(width: number, height: number, maxEdge = DEFAULT_SERVER_MAX_EDGE): UploadPlan {
  const longest = Math.max(width, height);
  if (longest <= maxEdge) {
    return { resize: false, targetWidth: width, targetHeight: height };
  }
  const scale = maxEdge / longest;
  return {
    resize: true,
    targetWidth: Math.max(1, Math.round(width * scale)),
    targetHeight: Math.max(1, Math.round(height * scale)),
  };
}

export function looksLikeImage(file: { type: string }): boolean {
  return file.type.startsWith("image/");
}

export function base64FromDataUrl(dataUrl: string): string {
  const comma = dataUrl.indexOf(",");
  if (comma < 0) throw new Error("not a data URL");
  return dataUrl.slice(comma + 1);
}

function readAsDataUrl(file: Blob): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(reader.result as string);
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
}

function loadElement(dataUrl: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error("file is not a decodable image"));
    img.src = dataUrl;
  });
}

/** Browser-only: decode, apply the downscale policy, return upload payload. */
export async function loadImageFile(file: File, maxEdge = DEFAULT_SERVER_MAX_EDGE): Promise<LoadedImage> {
  if (!looksLikeImage(file)) {
    throw new Error(`"${file.name}" is not an image file`);
  }
  const dataUrl = await readAsDataUrl(file);
  const img = await loadElement(dataUrl);
  const plan = planUpload(img.naturalWidth, img.naturalHeight, maxEdge);
  if (!plan.resize) {
    return {
      base64: base64FromDataUrl(dataUrl),
      dataUrl,
      width: img.naturalWidth,
      height: img.naturalHeight,
    };
  }
  const canvas = document.createElement("canvas");
  canvas.width = plan.targetWidth;
  canvas.height = plan.targetHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  ctx.drawImage(img, 0, 0, plan.targetWidth, plan.targetHeight);
  const scaledUrl = canvas.toDataURL("image/png");
  return {
    base64: base64FromDataUrl(scaledUrl),
    dataUrl: scaledUrl,
    width: plan.targetWidth,
    height: plan.targetHeight,
  };
}
