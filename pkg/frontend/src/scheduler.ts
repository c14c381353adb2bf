/** Debounced, latest-wins edit scheduling.
 *
 * Slider input is trailing-edge debounced (default 150 ms). At most one
 * request is in flight; values arriving while a request runs replace each
 * other and the newest fires once the response lands. Responses are applied
 * only when their id is the latest issued.
 */

export interface SchedulerHooks<R> {
  send: (attribute: number) => Promise<R>;
  onStart: () => void;
  onResult: (attribute: number, result: R) => void;
  onError: (attribute: number, error: unknown) => void;
}

type Timer = ReturnType<typeof setTimeout>;

export class EditScheduler<R> {
  private timer: Timer | null = null;
  private inFlight = false;
  private queued: number | null = null;
  private issued = 0;

  constructor(
    private hooks: SchedulerHooks<R>,
    private debounceMs = 150,
  ) {}

  /** Called on every slider movement. */
  request(attribute: number): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(attribute);
    }, this.debounceMs);
  }

  /** Bypass the debounce (e.g. first edit after loading an image). */
  fireNow(attribute: number): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.fire(attribute);
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private fire(attribute: number): void {
    if (this.inFlight) {
      this.queued = attribute; // latest wins
      return;
    }
    this.inFlight = true;
    const id = ++this.issued;
    this.hooks.onStart();
    this.hooks.send(attribute).then(
      (result) => this.settle(id, () => this.hooks.onResult(attribute, result)),
      (error) => this.settle(id, () => this.hooks.onError(attribute, error)),
    );
  }

  private settle(id: number, deliver: () => void): void {
    this.inFlight = false;
    if (id === this.issued) deliver();
    const next = this.queued;
    this.queued = null;
    if (next !== null) this.fire(next);
  }
}
