"""`telearm` command line: follow, lead, relay, sim, calibrate, replay.

Exit codes: 0 ok, 2 config error, 3 device error, 4 network error.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import controller as ctl
from . import master as mst
from . import report as rpt
from . import telelink
from .kinematics import DHChain, Pose, fkm, load_chain, umirobot_chain
from .master import Workspace, rpy_to_rotation
from .mathcore import Quaternion
from .pipeline import ControlLoop, DeviceError, SerialDevice
from .simdevice import ServoModel, SimRobot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEVICE = 3
EXIT_NETWORK = 4


@dataclass(frozen=True)
class AppConfig:
    role: str = "sim"
    alpha: float = 0.999
    lam: float = 0.01
    eta: float = 4.0
    tick_rate: float = 100.0
    device: str = "sim"          # "sim" or "serial:PORT"
    chain_file: str | None = None
    calibration_file: str | None = None
    connect: str | None = None   # host:port toward the relay
    listen: int | None = None
    listen_leader: int | None = None
    listen_follower: int | None = None
    ui_port: int | None = None
    fixed_delay: float = 0.0
    jitter: float = 0.0
    drop_rate: float = 0.0
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AppConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def controller_config(self, T: float | None = None) -> ctl.ControllerConfig:
        return ctl.ControllerConfig(self.alpha, self.lam, self.eta,
                                    T if T is not None else 1.0 / self.tick_rate)


def _load_config(args) -> AppConfig:
    cfg = AppConfig()
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg = AppConfig.from_json(f.read())
    overrides = {}
    for name in ("alpha", "lam", "eta", "tick_rate", "device", "chain_file",
                 "calibration_file", "connect", "listen", "listen_leader",
                 "listen_follower", "ui_port", "fixed_delay", "jitter",
                 "drop_rate", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    return replace(cfg, **overrides)


def _chain(cfg: AppConfig) -> DHChain:
    if cfg.chain_file:
        return load_chain(cfg.chain_file)
    return umirobot_chain()


def _device(cfg: AppConfig, chain: DHChain):
    if cfg.device == "sim":
        return SimRobot(chain, ServoModel())
    if cfg.device.startswith("serial:"):
        return SerialDevice(cfg.device.split(":", 1)[1], chain=chain)
    raise ValueError(f"unknown device backend {cfg.device!r}")


def _hostport(s: str):
    host, _, port = s.rpartition(":")
    return host or "127.0.0.1", int(port)


def _parse_floats(s: str, n: int) -> np.ndarray:
    vals = [float(v) for v in s.split(",")]
    if len(vals) != n:
        raise ValueError(f"expected {n} comma-separated values")
    return np.array(vals)


def _start_ui(loop: ControlLoop, port: int):
    import uvicorn

    from .bridge import make_app
    app = make_app(loop)
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    t = threading.Thread(target=server.run, daemon=True)
    t.start()
    return server


# ---------------------------------------------------------------------------
# subcommands


def cmd_sim(args) -> int:
    cfg = _load_config(args)
    chain = _chain(cfg)
    T = 1.0 / cfg.tick_rate
    log_f = open(args.log, "w") if args.log else None
    loop = ControlLoop(chain, cfg.controller_config(T),
                       SimRobot(chain, ServoModel()),
                       tick_rate=cfg.tick_rate, log_file=log_f)
    if args.target_pose:
        vals = _parse_floats(args.target_pose, 6)
        pose = Pose(rpy_to_rotation(*vals[3:]), Quaternion(0.0, *vals[:3]))
        loop.set_pose_target(pose)
    else:
        q_target = _parse_floats(args.target_q or "0,0,0,0,0", len(chain))
        loop.set_joint_target(q_target)

    snap = None
    for _ in range(args.steps):
        snap = loop.tick(T)
    if log_f:
        log_f.close()
    if args.target_pose:
        print(f"final translation error: {snap.err_t:.3e} m, "
              f"rotation error: {snap.err_r:.3e}")
    else:
        final = float(np.linalg.norm(snap.q - loop.q_d))
        print(f"final ||q - q_d||: {final:.3e} rad")
    if args.report_dir and args.log:
        written = rpt.render_report(rpt.load_log(args.log), args.report_dir)
        print("report: " + ", ".join(written))
    return EXIT_OK


def cmd_relay(args) -> int:
    cfg = _load_config(args)
    faults = telelink.LinkFaults(cfg.fixed_delay / 1000.0,
                                 cfg.jitter / 1000.0, cfg.drop_rate)
    try:
        relay = telelink.Relay(cfg.listen_leader or 0, cfg.listen_follower or 0,
                               faults=faults, seed=cfg.seed).start()
    except OSError as exc:
        print(f"relay bind failed: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    print(f"relay: leader port {relay.leader_port}, "
          f"follower port {relay.follower_port}")
    try:
        signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    relay.stop()
    return EXIT_OK


def cmd_follow(args) -> int:
    cfg = _load_config(args)
    chain = _chain(cfg)
    try:
        device = _device(cfg, chain)
    except DeviceError as exc:
        print(f"device error: {exc}", file=sys.stderr)
        return EXIT_DEVICE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log_f = open(args.log, "w") if args.log else None
    loop = ControlLoop(chain, cfg.controller_config(), device,
                       tick_rate=cfg.tick_rate, log_file=log_f)

    def apply_target(frame: telelink.TeleopFrame):
        if frame.kind == telelink.Kind.JOINT_TARGET:
            loop.set_joint_target(frame.q, frame.gripper)
        else:
            loop.set_pose_target(telelink.frame_pose(frame), frame.gripper)

    def get_state():
        s = loop.device.state
        return s.q, s.gripper

    session = telelink.FollowerSession(apply_target, get_state)
    try:
        if cfg.connect:
            session.connect(*_hostport(cfg.connect))
        else:
            session.serve("127.0.0.1", cfg.listen or 0)
            print(f"follower listening on {session.listen_port}")
    except OSError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK

    if cfg.ui_port is not None:
        _start_ui(loop, cfg.ui_port)

    run_t = threading.Thread(target=loop.run,
                             kwargs={"duration": args.duration}, daemon=True)
    run_t.start()
    try:
        run_t.join()
    except KeyboardInterrupt:
        pass
    loop.stop()
    session.stop()
    if log_f:
        log_f.flush()
        log_f.close()
    return EXIT_OK


def cmd_lead(args) -> int:
    cfg = _load_config(args)
    if not cfg.connect:
        print("lead requires --connect HOST:PORT", file=sys.stderr)
        return EXIT_CONFIG
    try:
        client = telelink.LeaderClient(*_hostport(cfg.connect))
    except OSError as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK

    if args.script:
        try:
            rc = _lead_from_script(client, args.script)
        finally:
            client.close()
        return rc

    # pot-driven lead needs a serial master and a calibration file
    if not cfg.calibration_file:
        print("task-space lead requires --calibration-file", file=sys.stderr)
        client.close()
        return EXIT_CONFIG
    try:
        cal = mst.load_calibration(cfg.calibration_file)
    except OSError as exc:
        print(f"missing calibration file: {exc}", file=sys.stderr)
        client.close()
        return EXIT_CONFIG
    try:
        device = SerialDevice(cfg.device.split(":", 1)[1])
    except (DeviceError, IndexError) as exc:
        print(f"device error: {exc}", file=sys.stderr)
        client.close()
        return EXIT_DEVICE
    ws = Workspace()
    try:
        while True:
            device.advance(0.02)
            if device.pots is not None:
                pose = mst.map_to_pose(cal, device.pots, ws)
                client.send_pose_target(pose)
            time.sleep(0.02)
    except KeyboardInterrupt:
        pass
    finally:
        client.close()
    return EXIT_OK


def _lead_from_script(client: "telelink.LeaderClient", path: str) -> int:
    """Stream scripted targets: JSONL of {"t": s, "q": [...5], "gripper": g}
    or {"t": s, "pose": {"t": [x,y,z], "rpy": [r,p,y]}, "gripper": g}."""
    entries = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                print(f"{path}:{lineno}: {exc}", file=sys.stderr)
                return EXIT_CONFIG
    t0 = time.monotonic()
    for e in entries:
        wait = e.get("t", 0.0) - (time.monotonic() - t0)
        if wait > 0:
            time.sleep(wait)
        g = e.get("gripper", 0.0)
        if "q" in e:
            client.send_joint_target(np.asarray(e["q"], dtype=float), g)
        elif "pose" in e:
            p = e["pose"]
            pose = Pose(rpy_to_rotation(*p.get("rpy", (0, 0, 0))),
                        Quaternion(0.0, *p["t"]))
            client.send_pose_target(pose, g)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    cal = mst.CalibrationState()
    if args.from_file:
        with open(args.from_file) as f:
            for line in f:
                parts = line.split()
                if parts:
                    cal = mst.ingest(cal, [int(v) for v in parts])
    else:
        try:
            device = SerialDevice(cfg.device.split(":", 1)[1])
        except (DeviceError, IndexError) as exc:
            print(f"device error: {exc}", file=sys.stderr)
            return EXIT_DEVICE
        print("sweep all pots through their range; ctrl-C to finish")
        try:
            while True:
                device.advance(0.02)
                if device.pots is not None:
                    cal = mst.ingest(cal, device.pots)
                time.sleep(0.02)
        except KeyboardInterrupt:
            pass
    for ch in range(mst.N_CHANNELS):
        lo, hi = cal.min_seen[ch], cal.max_seen[ch]
        ok = "ok" if cal.calibrated(ch) else "INSUFFICIENT TRAVEL"
        print(f"channel {ch}: min={lo} max={hi} [{ok}]")
    out = cfg.calibration_file or args.out or "calibration.txt"
    mst.save_calibration(cal, out)
    print(f"wrote {out}")
    return EXIT_OK if cal.all_calibrated() else EXIT_DEVICE


def cmd_replay(args) -> int:
    cfg = _load_config(args)
    chain = _chain(cfg)
    try:
        records = rpt.load_log(args.log)
    except rpt.LogError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    # re-run the logged joint targets against a fresh sim
    robot = SimRobot(chain, ServoModel(), q0=np.asarray(records[0]["q"]))
    ts = [r["ts"] for r in records]
    track_err = []
    for i, rec in enumerate(records):
        dt = ts[i] - ts[i - 1] if i > 0 else (ts[1] - ts[0] if len(ts) > 1 else 0.01)
        robot.command(np.asarray(rec["q_d"], dtype=float))
        state = robot.advance(max(dt, 1e-6))
        track_err.append(float(np.linalg.norm(
            state.q - np.asarray(rec["q"], dtype=float))))
    summary = rpt.summarize(records)
    summary["replay_max_q_dev"] = max(track_err)
    for k, v in summary.items():
        print(f"{k}: {v}")
    if args.report_dir:
        written = rpt.render_report(records, args.report_dir)
        print("report: " + ", ".join(written))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="telearm")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--alpha", type=float)
        p.add_argument("--lam", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--tick-rate", dest="tick_rate", type=float)
        p.add_argument("--device")
        p.add_argument("--chain-file", dest="chain_file")
        p.add_argument("--calibration-file", dest="calibration_file")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("sim", help="local closed loop without network")
    common(p)
    p.add_argument("--target-q", dest="target_q")
    p.add_argument("--target-pose", dest="target_pose",
                   help="x,y,z,roll,pitch,yaw")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--log")
    p.add_argument("--report-dir", dest="report_dir")
    p.set_defaults(fn=cmd_sim)

    p = sub.add_parser("follow", help="robot-side session")
    common(p)
    p.add_argument("--connect", help="relay follower endpoint host:port")
    p.add_argument("--listen", type=int, help="direct listen port")
    p.add_argument("--ui-port", dest="ui_port", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--log")
    p.set_defaults(fn=cmd_follow)

    p = sub.add_parser("lead", help="operator-side session")
    common(p)
    p.add_argument("--connect", help="relay leader endpoint host:port")
    p.add_argument("--script", help="JSONL of timed targets")
    p.set_defaults(fn=cmd_lead)

    p = sub.add_parser("relay", help="public pairing gateway")
    common(p)
    p.add_argument("--listen-leader", dest="listen_leader", type=int)
    p.add_argument("--listen-follower", dest="listen_follower", type=int)
    p.add_argument("--fixed-delay", dest="fixed_delay", type=float,
                   help="ms")
    p.add_argument("--jitter", type=float, help="ms")
    p.add_argument("--drop-rate", dest="drop_rate", type=float)
    p.set_defaults(fn=cmd_relay)

    p = sub.add_parser("calibrate", help="pot min/max capture")
    common(p)
    p.add_argument("--from-file", dest="from_file",
                   help="whitespace-separated readings, one sample per line")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("replay", help="re-run a tick log against the sim")
    common(p)
    p.add_argument("log")
    p.add_argument("--report-dir", dest="report_dir")
    p.set_defaults(fn=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
