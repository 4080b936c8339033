/**
 * Debounced parameter mailbox.
 *
 * A slider drag produces a burst of values; the service wants at most one
 * in-flight update at a time with last-write-wins semantics. Edits merge
 * into a pending batch, the batch is sent after a short quiet delay, and
 * anything pushed while a request is in flight is sent in the next batch.
 * The final acknowledged value therefore always equals the last pushed
 * value, no matter how fast the drag was.
 */

import type { ServerState, WireParams } from './types.js';

export interface MailboxOptions {
  /** Quiet time before a batch is sent, in ms. */
  delayMs?: number;
}

export class ParamMailbox {
  private readonly send: (changes: Partial<WireParams>) => Promise<ServerState>;
  private readonly onAck: (state: ServerState) => void;
  private readonly onError: (error: unknown, changes: Partial<WireParams>) => void;
  private readonly delayMs: number;

  private pending: Partial<WireParams> | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight = false;
  private idleWaiters: (() => void)[] = [];

  constructor(
    send: (changes: Partial<WireParams>) => Promise<ServerState>,
    onAck: (state: ServerState) => void,
    onError: (error: unknown, changes: Partial<WireParams>) => void = () => {},
    options: MailboxOptions = {},
  ) {
    this.send = send;
    this.onAck = onAck;
    this.onError = onError;
    this.delayMs = options.delayMs ?? 30;
  }

  /** Queue parameter changes; later pushes of the same field win. */
  push(changes: Partial<WireParams>): void {
    this.pending = { ...this.pending, ...changes };
    this.schedule();
  }

  get busy(): boolean {
    return this.inflight || this.pending !== null || this.timer !== null;
  }

  /** Resolves once every queued change has been acknowledged or failed. */
  whenIdle(): Promise<void> {
    if (!this.busy) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  private schedule(): void {
    if (this.inflight || this.timer !== null) {
      return; // flush() re-schedules once the current request settles
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, this.delayMs);
  }

  private async flush(): Promise<void> {
    if (this.inflight || this.pending === null) {
      this.notifyIfIdle();
      return;
    }
    const batch = this.pending;
    this.pending = null;
    this.inflight = true;
    try {
      const state = await this.send(batch);
      this.onAck(state);
    } catch (error) {
      this.onError(error, batch);
    } finally {
      this.inflight = false;
      if (this.pending !== null) {
        this.schedule();
      } else {
        this.notifyIfIdle();
      }
    }
  }

  private notifyIfIdle(): void {
    if (!this.busy && this.idleWaiters.length > 0) {
      const waiters = this.idleWaiters;
      this.idleWaiters = [];
      for (const resolve of waiters) {
        resolve();
      }
    }
  }
}
