// Headless cockpit core: owns the socket, the command throttle, and the
// latest telemetry. The DOM layer (main.ts) only binds widgets to this.

import { DHRow, forwardKinematics, Skeleton } from "./math.js";
import {
  ClientMsg,
  clampJoints,
  clampPose,
  HelloMsg,
  RateLimiter,
  ServerMsg,
  StaleTracker,
  StateMsg,
} from "./protocol.js";

/** Minimal WebSocket surface so tests can plug in a loopback mock. */
export interface SocketLike {
  send(data: string): void;
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export interface CockpitEvents {
  onRender?: (skeleton: Skeleton, state: StateMsg) => void;
  onHello?: (hello: HelloMsg) => void;
  onError?: (message: string) => void;
}

export class Cockpit {
  hello: HelloMsg | null = null;
  state: StateMsg | null = null;
  readonly staleness: StaleTracker;
  private readonly limiter: RateLimiter;
  renders = 0;

  constructor(
    private readonly socket: SocketLike,
    private readonly events: CockpitEvents = {},
    rateHz = 50,
    now: () => number = () => performance.now(),
  ) {
    this.staleness = new StaleTracker(500, now);
    this.limiter = new RateLimiter(
      (msg) => socket.send(JSON.stringify(msg)), rateHz, now);
    socket.onmessage = (ev) => this.handleMessage(ev.data);
  }

  private handleMessage(data: string): void {
    let msg: ServerMsg;
    try {
      msg = JSON.parse(data);
    } catch {
      this.events.onError?.(`unparseable server frame: ${data.slice(0, 80)}`);
      return;
    }
    if (msg.type === "hello") {
      this.hello = msg;
      this.events.onHello?.(msg);
    } else if (msg.type === "state") {
      this.state = msg;
      this.staleness.markFresh();
      if (this.hello) {
        this.renders++;
        this.events.onRender?.(
          forwardKinematics(this.hello.dh as DHRow[], msg.q), msg);
      }
    } else if (msg.type === "error") {
      this.events.onError?.(msg.message);
    }
  }

  get isOperator(): boolean {
    return this.hello?.role === "operator";
  }

  /** Clamped joint command; returns the values actually sent. */
  commandJoints(q: number[], gripper?: number): number[] {
    if (!this.hello) throw new Error("not connected yet");
    const clamped = clampJoints(q, this.hello.q_min, this.hello.q_max);
    const msg: ClientMsg = { type: "target_joints", q: clamped };
    if (gripper !== undefined) msg.gripper = Math.min(1, Math.max(0, gripper));
    this.limiter.submit(msg);
    return clamped;
  }

  /** Clamped pose command; returns the values actually sent. */
  commandPose(t: number[], rpy: number[], gripper?: number) {
    if (!this.hello) throw new Error("not connected yet");
    const clamped = clampPose(t, rpy, this.hello.workspace);
    const msg: ClientMsg = { type: "target_pose", t: clamped.t, rpy: clamped.rpy };
    if (gripper !== undefined) msg.gripper = Math.min(1, Math.max(0, gripper));
    this.limiter.submit(msg);
    return clamped;
  }

  commandGripper(value: number): void {
    this.limiter.submit({ type: "gripper", value: Math.min(1, Math.max(0, value)) });
  }

  setMode(mode: "joint" | "pose"): void {
    this.limiter.submit({ type: "mode", mode });
  }

  /** Deliver any coalesced command; call from a ~20 ms interval timer. */
  pump(): void {
    this.limiter.flush();
  }

  close(): void {
    this.socket.close();
  }
}
