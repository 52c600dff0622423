import { describe, expect, it } from "vitest";

import { Cockpit, SocketLike } from "../src/cockpit.js";
import { HelloMsg, StateMsg } from "../src/protocol.js";
import fixtures from "./fixtures/fk_fixtures.json";

const HELLO: HelloMsg = {
  type: "hello",
  dh: fixtures.dh as HelloMsg["dh"],
  q_min: fixtures.q_min,
  q_max: fixtures.q_max,
  workspace: {
    t_min: [-0.1, -0.1, 0.05],
    t_max: [0.1, 0.1, 0.25],
    rpy_span: [Math.PI / 2, Math.PI / 2, Math.PI / 2],
  },
  role: "operator",
};

function stateMsg(seq: number, q: number[] = [0, 0, 0, 0, 0]): StateMsg {
  return {
    type: "state", q, gripper: 0, err_t: 0, err_r: 0, latency_ms: 1.5, seq,
  };
}

/**
 * In-process loopback standing in for the bridge: replies to every
 * command with an echoed state frame, like the real server does after
 * applying (and clamping) the target.
 */
class MockBridge implements SocketLike {
  onmessage: ((ev: { data: string }) => void) | null = null;
  received: unknown[] = [];
  private seq = 0;

  open(): void {
    this.deliver(HELLO);
    this.deliver(stateMsg(this.seq));
  }

  send(data: string): void {
    const msg = JSON.parse(data);
    this.received.push(msg);
    this.seq++;
    // echo: joint targets come back clamped as the new state
    if (msg.type === "target_joints") {
      this.deliver(stateMsg(this.seq, msg.q));
    } else {
      this.deliver(stateMsg(this.seq));
    }
  }

  deliver(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }

  close(): void {}
}

describe("cockpit core", () => {
  it("applies the hello handshake and reports the role", () => {
    const bridge = new MockBridge();
    const cockpit = new Cockpit(bridge);
    bridge.open();
    expect(cockpit.hello?.dh.length).toBe(5);
    expect(cockpit.isOperator).toBe(true);
  });

  it("renders every streamed state: 30 Hz in is >= 20 Hz out", () => {
    const bridge = new MockBridge();
    let renders = 0;
    const cockpit = new Cockpit(bridge, { onRender: () => renders++ });
    bridge.open();
    for (let i = 1; i <= 30; i++) {
      bridge.deliver(stateMsg(i)); // one simulated second at 30 Hz
    }
    expect(renders).toBeGreaterThanOrEqual(20);
    expect(cockpit.renders).toBe(renders);
  });

  it("clamps joint commands before sending", () => {
    const bridge = new MockBridge();
    const cockpit = new Cockpit(bridge);
    bridge.open();
    const sent = cockpit.commandJoints([9, -9, 0, 0, 0]);
    expect(sent[0]).toBeCloseTo(Math.PI / 2, 12);
    expect(sent[1]).toBeCloseTo(-Math.PI / 2, 12);
    const wire = bridge.received[0] as { q: number[] };
    expect(wire.q).toEqual(sent);
  });

  it("clamps pose commands into the workspace", () => {
    const bridge = new MockBridge();
    const cockpit = new Cockpit(bridge);
    bridge.open();
    const sent = cockpit.commandPose([5, 0, 0], [9, 0, 0]);
    expect(sent.t[0]).toBe(0.1);
    expect(sent.rpy[0]).toBeCloseTo(Math.PI / 4, 12);
  });

  it("echoed state after a command arrives within 200 ms on loopback", () => {
    const bridge = new MockBridge();
    let echoed: StateMsg | null = null;
    const cockpit = new Cockpit(bridge, {
      onRender: (_s, state) => { echoed = state; },
    });
    bridge.open();
    const target = [0.3, -0.2, 0.1, 0.2, -0.3];
    const t0 = performance.now();
    cockpit.commandJoints(target);
    const elapsed = performance.now() - t0;
    expect(echoed).not.toBeNull();
    expect(echoed!.q).toEqual(target);
    expect(elapsed).toBeLessThan(200);
  });

  it("marks telemetry stale when the feed stops", () => {
    let clock = 0;
    const bridge = new MockBridge();
    const cockpit = new Cockpit(bridge, {}, 50, () => clock);
    bridge.open();
    expect(cockpit.staleness.stale).toBe(false);
    clock += 1000;
    expect(cockpit.staleness.stale).toBe(true);
    bridge.deliver(stateMsg(99));
    expect(cockpit.staleness.stale).toBe(false);
  });

  it("surfaces server error frames", () => {
    const bridge = new MockBridge();
    const errors: string[] = [];
    new Cockpit(bridge, { onError: (m) => errors.push(m) });
    bridge.open();
    bridge.deliver({ type: "error", message: "read-only client" });
    expect(errors).toEqual(["read-only client"]);
  });
});
