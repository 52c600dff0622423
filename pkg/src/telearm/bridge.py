"""WebSocket bridge between the control pipeline and the browser cockpit.

JSON protocol (normative for the cockpit):

  outbound, on connect:
    {"type": "hello", "dh": [[theta_off, d, a, alpha], ...],
     "q_min": [...], "q_max": [...],
     "workspace": {"t_min": [...], "t_max": [...], "rpy_span": [...]},
     "role": "operator" | "observer"}
  outbound, streamed:
    {"type": "state", "q": [...5], "gripper": g, "err_t": e1, "err_r": e2,
     "latency_ms": l, "seq": n}
  inbound (operator only):
    {"type": "target_joints", "q": [...5], "gripper": g?}
    {"type": "target_pose", "t": [x, y, z], "rpy": [r, p, y], "gripper": g?}
    {"type": "mode", "mode": "joint" | "pose"}
    {"type": "gripper", "value": g}

The first client to connect is the operator; later clients are read-only.
Malformed JSON gets an error frame back and the connection stays open;
unknown message types are counted and ignored.
"""

from __future__ import annotations

import asyncio
import json

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .kinematics import Pose
from .master import Workspace, rpy_to_rotation
from .mathcore import Quaternion
from .pipeline import ControlLoop

STATE_RATE_HZ = 30.0


def make_app(loop: ControlLoop, workspace: Workspace | None = None) -> FastAPI:
    ws_box = workspace or Workspace()
    app = FastAPI()
    app.state.operator: WebSocket | None = None
    app.state.unknown_messages = 0

    def hello(role: str) -> dict:
        return {
            "type": "hello",
            "dh": [[r.theta_off, r.d, r.a, r.alpha] for r in loop.chain.rows],
            "q_min": list(loop.chain.q_min),
            "q_max": list(loop.chain.q_max),
            "workspace": {
                "t_min": list(ws_box.t_min),
                "t_max": list(ws_box.t_max),
                "rpy_span": list(ws_box.rpy_span),
            },
            "role": role,
        }

    def state_msg() -> dict:
        s = loop.snapshot()
        return {
            "type": "state",
            "q": list(s.q),
            "gripper": s.gripper,
            "err_t": s.err_t,
            "err_r": s.err_r,
            "latency_ms": s.latency_ms,
            "seq": s.seq,
        }

    def handle(msg: dict):
        mtype = msg.get("type")
        if mtype == "target_joints":
            loop.set_joint_target(np.asarray(msg["q"], dtype=float),
                                  msg.get("gripper"))
        elif mtype == "target_pose":
            t = np.clip(np.asarray(msg["t"], dtype=float),
                        ws_box.t_min, ws_box.t_max)
            rpy = np.clip(np.asarray(msg["rpy"], dtype=float),
                          -ws_box.rpy_span / 2, ws_box.rpy_span / 2)
            pose = Pose(rpy_to_rotation(*rpy), Quaternion(0.0, *t))
            loop.set_pose_target(pose, msg.get("gripper"))
        elif mtype == "mode":
            loop.set_mode(msg["mode"])
        elif mtype == "gripper":
            loop.set_joint_target(loop.q_d, float(msg["value"]))
        else:
            app.state.unknown_messages += 1

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        operator = app.state.operator is None
        if operator:
            app.state.operator = ws
        await ws.send_text(json.dumps(
            hello("operator" if operator else "observer")))
        await ws.send_text(json.dumps(state_msg()))

        async def sender():
            while True:
                await asyncio.sleep(1.0 / STATE_RATE_HZ)
                await ws.send_text(json.dumps(state_msg()))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError as exc:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": f"bad json: {exc}"}))
                    continue
                if not operator:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": "read-only client"}))
                    continue
                try:
                    handle(msg)
                except (KeyError, ValueError, TypeError) as exc:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": str(exc)}))
                    continue
                # echo the applied state so the UI sees clamping immediately;
                # only step here when no control thread is pacing the loop
                if not loop.running:
                    loop.tick()
                await ws.send_text(json.dumps(state_msg()))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            if app.state.operator is ws:
                app.state.operator = None

    return app
