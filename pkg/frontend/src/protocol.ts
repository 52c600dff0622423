// JSON message schema of the follower's WebSocket bridge, plus the
// client-side safety rails: clamping (mirroring the host) and command
// rate limiting so slider drags cannot flood the link.

export interface HelloMsg {
  type: "hello";
  dh: [number, number, number, number][];
  q_min: number[];
  q_max: number[];
  workspace: { t_min: number[]; t_max: number[]; rpy_span: number[] };
  role: "operator" | "observer";
}

export interface StateMsg {
  type: "state";
  q: number[];
  gripper: number;
  err_t: number;
  err_r: number;
  latency_ms: number;
  seq: number;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = HelloMsg | StateMsg | ErrorMsg;

export type ClientMsg =
  | { type: "target_joints"; q: number[]; gripper?: number }
  | { type: "target_pose"; t: number[]; rpy: number[]; gripper?: number }
  | { type: "mode"; mode: "joint" | "pose" }
  | { type: "gripper"; value: number };

function clampScalar(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Clamp a joint vector into the limits announced by the hello message. */
export function clampJoints(q: number[], qMin: number[], qMax: number[]): number[] {
  return q.map((v, i) => clampScalar(v, qMin[i], qMax[i]));
}

/** Clamp translation into the workspace box and rpy into +-span/2. */
export function clampPose(
  t: number[],
  rpy: number[],
  ws: HelloMsg["workspace"],
): { t: number[]; rpy: number[] } {
  return {
    t: t.map((v, i) => clampScalar(v, ws.t_min[i], ws.t_max[i])),
    rpy: rpy.map((v, i) => clampScalar(v, -ws.rpy_span[i] / 2, ws.rpy_span[i] / 2)),
  };
}

/**
 * Latest-wins command throttle. Commands submitted faster than the rate
 * cap are coalesced; the newest one is flushed when the window opens, so
 * the robot always ends up at the last slider position.
 */
export class RateLimiter {
  private lastSend = -Infinity;
  private pending: ClientMsg | null = null;
  readonly minIntervalMs: number;

  constructor(
    private readonly send: (msg: ClientMsg) => void,
    rateHz = 50,
    private readonly now: () => number = () => performance.now(),
  ) {
    this.minIntervalMs = 1000 / rateHz;
  }

  submit(msg: ClientMsg): void {
    const t = this.now();
    if (t - this.lastSend >= this.minIntervalMs) {
      this.lastSend = t;
      this.pending = null;
      this.send(msg);
    } else {
      this.pending = msg;
    }
  }

  /** Call periodically (or on a timer) to deliver a coalesced command. */
  flush(): void {
    if (this.pending === null) return;
    const t = this.now();
    if (t - this.lastSend >= this.minIntervalMs) {
      this.lastSend = t;
      const msg = this.pending;
      this.pending = null;
      this.send(msg);
    }
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }
}

/** Tracks state freshness; the UI shows a banner when the feed goes quiet. */
export class StaleTracker {
  private lastState = -Infinity;

  constructor(
    readonly thresholdMs = 500,
    private readonly now: () => number = () => performance.now(),
  ) {}

  markFresh(): void {
    this.lastState = this.now();
  }

  get stale(): boolean {
    return this.now() - this.lastState > this.thresholdMs;
  }
}
