import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { EditScheduler, type SchedulerHooks } from "../src/scheduler.js";

interface Call {
  attribute: number;
  resolve: (v: string) => void;
  reject: (e: unknown) => void;
}

function instrumented(debounceMs = 150) {
  const calls: Call[] = [];
  const results: Array<[number, string]> = [];
  const errors: Array<[number, unknown]> = [];
  let concurrent = 0;
  let maxConcurrent = 0;
  const hooks: SchedulerHooks<string> = {
    send: (attribute) =>
      new Promise<string>((resolve, reject) => {
        concurrent += 1;
        maxConcurrent = Math.max(maxConcurrent, concurrent);
        calls.push({
          attribute,
          resolve: (v) => {
            concurrent -= 1;
            resolve(v);
          },
          reject: (e) => {
            concurrent -= 1;
            reject(e);
          },
        });
      }),
    onStart: () => {},
    onResult: (attribute, result) => results.push([attribute, result]),
    onError: (attribute, error) => errors.push([attribute, error]),
  };
  return { scheduler: new EditScheduler(hooks, debounceMs), calls, results, errors, maxConcurrent: () => maxConcurrent };
}

describe("EditScheduler", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("coalesces rapid changes into exactly one terminal request", async () => {
    const { scheduler, calls } = instrumented();
    scheduler.request(0.2);
    await vi.advanceTimersByTimeAsync(60);
    scheduler.request(0.9);
    await vi.advanceTimersByTimeAsync(149);
    expect(calls.length).toBe(0); // still inside the debounce window
    await vi.advanceTimersByTimeAsync(1);
    expect(calls.length).toBe(1);
    expect(calls[0].attribute).toBe(0.9);
  });

  it("applies the response to the pane state via onResult", async () => {
    const { scheduler, calls, results } = instrumented();
    scheduler.request(0.4);
    await vi.advanceTimersByTimeAsync(150);
    calls[0].resolve("img-a");
    await vi.advanceTimersByTimeAsync(0);
    expect(results).toEqual([[0.4, "img-a"]]);
  });

  it("keeps at most one request in flight and fires the newest afterwards", async () => {
    const { scheduler, calls, results, maxConcurrent } = instrumented();
    scheduler.request(0.1);
    await vi.advanceTimersByTimeAsync(150);
    expect(calls.length).toBe(1);
    // Three changes while the first request is still running.
    scheduler.request(0.5);
    await vi.advanceTimersByTimeAsync(150);
    scheduler.request(0.6);
    await vi.advanceTimersByTimeAsync(150);
    scheduler.request(0.7);
    await vi.advanceTimersByTimeAsync(150);
    expect(calls.length).toBe(1);
    calls[0].resolve("first");
    await vi.advanceTimersByTimeAsync(0);
    expect(calls.length).toBe(2);
    expect(calls[1].attribute).toBe(0.7); // latest wins
    calls[1].resolve("second");
    await vi.advanceTimersByTimeAsync(0);
    expect(results).toEqual([
      [0.1, "first"],
      [0.7, "second"],
    ]);
    expect(maxConcurrent()).toBe(1);
  });

  it("reports errors and continues with the queued value", async () => {
    const { scheduler, calls, results, errors } = instrumented();
    scheduler.request(0.3);
    await vi.advanceTimersByTimeAsync(150);
    scheduler.request(0.8);
    await vi.advanceTimersByTimeAsync(150);
    calls[0].reject(new Error("boom"));
    await vi.advanceTimersByTimeAsync(0);
    expect(errors.length).toBe(1);
    expect(calls.length).toBe(2);
    calls[1].resolve("recovered");
    await vi.advanceTimersByTimeAsync(0);
    expect(results).toEqual([[0.8, "recovered"]]);
  });

  it("fireNow bypasses the debounce", async () => {
    const { scheduler, calls } = instrumented();
    scheduler.fireNow(0.5);
    expect(calls.length).toBe(1);
  });
});
