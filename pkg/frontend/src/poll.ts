// Periodic event polling with reconnect backoff. A phase change shows up
// in the view within one poll interval; failures double the delay up to a
// cap and a successful poll resets it.

import type { EventView } from "./types.js";

export class EventPoller {
  private lastSeq = -1;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private delayMs: number;
  private running = false;

  constructor(
    private readonly fetchEvents: (after: number) => Promise<EventView[]>,
    private readonly onEvents: (events: EventView[]) => void,
    private readonly intervalMs = 1000,
    private readonly maxBackoffMs = 10_000,
  ) {
    this.delayMs = intervalMs;
  }

  get lastSeenSeq(): number {
    return this.lastSeq;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    void this.loop();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  async tickOnce(): Promise<void> {
    try {
      const events = await this.fetchEvents(this.lastSeq);
      if (events.length > 0) {
        this.lastSeq = Math.max(...events.map((e) => e.seq));
        this.onEvents(events);
      }
      this.delayMs = this.intervalMs;
    } catch {
      this.delayMs = Math.min(this.delayMs * 2, this.maxBackoffMs);
    }
  }

  private async loop(): Promise<void> {
    if (!this.running) return;
    await this.tickOnce();
    if (!this.running) return;
    this.timer = setTimeout(() => void this.loop(), this.delayMs);
  }
}
