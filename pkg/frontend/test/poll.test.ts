import { describe, expect, it, vi } from "vitest";

import { EventPoller } from "../src/poll.js";
import type { EventView } from "../src/types.js";

function event(seq: number, kind = "phase_transition"): EventView {
  return { seq, kind, data: {}, timestamp: 0 };
}

describe("EventPoller", () => {
  it("tracks the last seen sequence and forwards new events", async () => {
    const calls: number[] = [];
    const batches: EventView[][] = [[event(0), event(1)], [], [event(2)]];
    const seen: EventView[][] = [];
    const poller = new EventPoller(
      async (after) => {
        calls.push(after);
        return batches.shift() ?? [];
      },
      (events) => seen.push(events),
    );
    await poller.tickOnce();
    await poller.tickOnce();
    await poller.tickOnce();
    expect(calls).toEqual([-1, 1, 1]);
    expect(seen.map((batch) => batch.map((e) => e.seq))).toEqual([[0, 1], [2]]);
    expect(poller.lastSeenSeq).toBe(2);
  });

  it("doubles the delay on failure and resets it on success", async () => {
    let fail = true;
    const poller = new EventPoller(
      async () => {
        if (fail) throw new Error("connection dropped");
        return [];
      },
      () => {},
      1000,
      10_000,
    );
    await poller.tickOnce();
    await poller.tickOnce();
    await poller.tickOnce();
    expect((poller as unknown as { delayMs: number }).delayMs).toBe(8000);
    fail = false;
    await poller.tickOnce();
    expect((poller as unknown as { delayMs: number }).delayMs).toBe(1000);
  });

  it("caps the backoff delay", async () => {
    const poller = new EventPoller(
      async () => {
        throw new Error("down");
      },
      () => {},
      1000,
      10_000,
    );
    for (let i = 0; i < 8; i += 1) await poller.tickOnce();
    expect((poller as unknown as { delayMs: number }).delayMs).toBe(10_000);
  });

  it("start/stop schedule and clear the timer", async () => {
    vi.useFakeTimers();
    const calls: number[] = [];
    const poller = new EventPoller(
      async (after) => {
        calls.push(after);
        return [];
      },
      () => {},
      50,
    );
    poller.start();
    await vi.advanceTimersByTimeAsync(10);
    expect(calls).toHaveLength(1);
    await vi.advanceTimersByTimeAsync(60);
    expect(calls).toHaveLength(2);
    poller.stop();
    await vi.advanceTimersByTimeAsync(500);
    expect(calls).toHaveLength(2);
    vi.useRealTimers();
  });
});
