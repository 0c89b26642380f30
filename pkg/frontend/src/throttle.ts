/**
 * Rate limiter for outgoing drag updates: sends at most once per interval,
 * always eventually sending the newest value (trailing edge), so the server
 * converges on where the pointer actually stopped.
 */
export class Throttle<T> {
  private lastSentAt = -Infinity;
  private pending: T | undefined;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly intervalMs: number,
    private readonly send: (value: T) => void,
    private readonly now: () => number = () => performance.now(),
    private readonly schedule: (fn: () => void, ms: number) => ReturnType<typeof setTimeout> = setTimeout,
  ) {}

  update(value: T): void {
    const t = this.now();
    if (t - this.lastSentAt >= this.intervalMs) {
      this.lastSentAt = t;
      this.send(value);
      return;
    }
    this.pending = value;
    if (this.timer === null) {
      const wait = this.intervalMs - (t - this.lastSentAt);
      this.timer = this.schedule(() => this.flush(), wait);
    }
  }

  /** Deliver the pending value immediately (drag release). */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.pending !== undefined) {
      this.lastSentAt = this.now();
      this.send(this.pending);
      this.pending = undefined;
    }
  }
}
