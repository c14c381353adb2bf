/** Typed client for the inference service. */

import type { EditRequest, EditResponse, HealthInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class EditClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  async edit(request: EditRequest): Promise<EditResponse> {
    const res = await this.fetchImpl(`${this.baseUrl}/edit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!res.ok) {
      throw new ApiError(res.status, await describeFailure(res));
    }
    return (await res.json()) as EditResponse;
  }

  async health(): Promise<HealthInfo> {
    const res = await this.fetchImpl(`${this.baseUrl}/health`);
    if (!res.ok) {
      throw new ApiError(res.status, await describeFailure(res));
    }
    return (await res.json()) as HealthInfo;
  }
}

async function describeFailure(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    if (body.detail !== undefined) return JSON.stringify(body.detail);
  } catch {
    /* non-JSON body */
  }
  return `server responded ${res.status}`;
}
