import type { ApiClient } from "./api.js";
import type { JobSnapshot, JobStatus } from "./types.js";

/** Minimal observable state container; all view updates flow through it. */
export class Store<S> {
  private listeners = new Set<(state: S) => void>();

  constructor(private state: S) {}

  get(): S {
    return this.state;
  }

  set(patch: Partial<S>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  subscribe(fn: (state: S) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}

const TERMINAL: JobStatus[] = ["done", "failed", "interrupted"];

export function isTerminal(status: JobStatus): boolean {
  return TERMINAL.includes(status);
}

interface ActivePoll {
  generation: number;
  timer: ReturnType<typeof setTimeout> | null;
}

/**
 * Polls run states, one chain per run id, at most one request per
 * interval per run. Responses landing after `stop` (or after a restart
 * bumped the generation) are discarded, so a superseded view never
 * receives a stale snapshot.
 */
export class RunPollers {
  private active = new Map<string, ActivePoll>();

  constructor(
    private readonly api: ApiClient,
    readonly intervalMs = 1000,
  ) {}

  start(runId: string, onUpdate: (snap: JobSnapshot) => void): void {
    this.stop(runId);
    const poll: ActivePoll = { generation: this.nextGeneration(runId), timer: null };
    this.active.set(runId, poll);

    const tick = async () => {
      let snap: JobSnapshot;
      try {
        snap = await this.api.runState(runId);
      } catch {
        schedule(); // transient failure; keep polling
        return;
      }
      if (this.active.get(runId) !== poll) return; // stale: poller replaced
      onUpdate(snap);
      if (isTerminal(snap.status)) {
        this.active.delete(runId);
        return;
      }
      schedule();
    };

    const schedule = () => {
      if (this.active.get(runId) !== poll) return;
      // chained timers: the next request starts a full interval after the
      // previous one finished, which bounds the rate at one per interval
      poll.timer = setTimeout(tick, this.intervalMs);
    };

    void tick();
  }

  stop(runId: string): void {
    const poll = this.active.get(runId);
    if (!poll) return;
    if (poll.timer !== null) clearTimeout(poll.timer);
    this.active.delete(runId);
  }

  stopAll(): void {
    for (const runId of [...this.active.keys()]) this.stop(runId);
  }

  polling(runId: string): boolean {
    return this.active.has(runId);
  }

  private generations = new Map<string, number>();

  private nextGeneration(runId: string): number {
    const next = (this.generations.get(runId) ?? 0) + 1;
    this.generations.set(runId, next);
    return next;
  }
}
