/** In-process HTTP stub honouring the /edit contract for UI tests.
 *
 * The "edit" scales object-pixel RGB by the attribute; background pixels are
 * copied verbatim from the request, matching the real service's compositing
 * guarantee.
 */

import { createServer, type Server } from "node:http";
import { decodePng, encodePng } from "./png.js";

export interface StubOptions {
  failWith?: number; // force this HTTP status on /edit
}

export interface StubHandle {
  url: string;
  requestCount: () => number;
  close: () => Promise<void>;
}

export async function startStubServer(options: StubOptions = {}): Promise<StubHandle> {
  let edits = 0;
  const server: Server = createServer((req, res) => {
    if (req.method === "GET" && req.url === "/health") {
      res.writeHead(200, { "Content-Type": "application/json" });
      res.end(JSON.stringify({ status: "ok", checkpoint_id: "stub0001", attribute_name: "glossy" }));
      return;
    }
    if (req.method === "POST" && req.url === "/edit") {
      edits += 1;
      if (options.failWith) {
        res.writeHead(options.failWith, { "Content-Type": "application/json" });
        res.end(JSON.stringify({ detail: "stubbed failure" }));
        return;
      }
      const chunks: Buffer[] = [];
      req.on("data", (c) => chunks.push(c));
      req.on("end", () => {
        try {
          const body = JSON.parse(Buffer.concat(chunks).toString("utf-8")) as {
            image: string;
            mask?: string;
            attribute: number;
          };
          if (!(body.attribute >= 0 && body.attribute <= 1)) {
            res.writeHead(400, { "Content-Type": "application/json" });
            res.end(JSON.stringify({ detail: "attribute outside [0,1]" }));
            return;
          }
          const img = decodePng(Uint8Array.from(Buffer.from(body.image, "base64")));
          const maskAlpha = body.mask
            ? decodePng(Uint8Array.from(Buffer.from(body.mask, "base64"))).rgba
            : img.rgba;
          const out = new Uint8Array(img.rgba);
          for (let p = 0; p < img.width * img.height; p++) {
            if (maskAlpha[p * 4 + 3] > 127) {
              for (let ch = 0; ch < 3; ch++) {
                out[p * 4 + ch] = Math.round(img.rgba[p * 4 + ch] * body.attribute);
              }
            }
          }
          res.writeHead(200, { "Content-Type": "application/json" });
          res.end(
            JSON.stringify({
              image: Buffer.from(encodePng({ width: img.width, height: img.height, rgba: out })).toString(
                "base64",
              ),
              model_info: { attribute_name: "glossy", checkpoint_id: "stub0001" },
              latency_ms: 1.0,
            }),
          );
        } catch (err) {
          res.writeHead(400, { "Content-Type": "application/json" });
          res.end(JSON.stringify({ detail: String(err) }));
        }
      });
      return;
    }
    res.writeHead(404);
    res.end();
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const address = server.address();
  if (address === null || typeof address === "string") throw new Error("no port");
  return {
    url: `http://127.0.0.1:${address.port}`,
    requestCount: () => edits,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}
