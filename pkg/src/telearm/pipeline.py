"""Control pipeline: one loop owning the controller and the device.

The control loop is the sole writer of robot targets. UI bridge and
network session threads hand it targets through a latest-wins slot; state
fans out as immutable snapshots to registered listeners.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from . import controller as ctl
from . import serialio
from .kinematics import DHChain, Pose, fkm
from .simdevice import ServoModel, SimRobot


class DeviceError(Exception):
    pass


class SerialDevice:
    """Drives a real servo controller over the serial protocol.

    Same command/advance surface as SimRobot so the pipeline does not
    care which backend it is driving.
    """

    def __init__(self, port: str, baud: int = 115200, chain: DHChain = None):
        try:
            import serial  # pyserial
        except ImportError as exc:
            raise DeviceError("pyserial is not installed") from exc
        try:
            self._port = serial.Serial(port, baud, timeout=0.05)
        except Exception as exc:
            raise DeviceError(f"cannot open serial port {port}: {exc}") from exc
        self.chain = chain
        self._decoder = serialio.StreamDecoder()
        self._last_q = np.zeros(5)
        self._gripper = 0.0
        self.pots = None

    def command(self, target_q, target_gripper: float | None = None):
        g = self._gripper if target_gripper is None else target_gripper
        self._gripper = g
        frame = serialio.targets_frame(target_q, g)
        self._port.write(serialio.encode(frame))

    def advance(self, dt: float):
        self._port.write(serialio.encode(
            serialio.SerialFrame(serialio.FrameType.GET_STATE)))
        data = self._port.read(256)
        for frame in self._decoder.feed(data):
            if frame.type == serialio.FrameType.STATE:
                self._last_q, self._gripper = serialio.frame_to_targets(frame)
            elif frame.type == serialio.FrameType.POTS:
                self.pots = frame.values
        return self.state

    @property
    def state(self):
        from .simdevice import RobotState
        return RobotState(self._last_q, self._gripper)


@dataclass(frozen=True)
class Snapshot:
    q: np.ndarray
    gripper: float
    q_d: np.ndarray
    err_t: float
    err_r: float
    seq: int
    t_sim: float
    latency_ms: float = 0.0


class ControlLoop:
    MODE_JOINT = "joint"
    MODE_POSE = "pose"

    def __init__(self, chain: DHChain, cfg: ctl.ControllerConfig | None = None,
                 device=None, tick_rate: float = 100.0, log_file=None):
        self.chain = chain
        self.cfg = cfg or ctl.ControllerConfig()
        self.device = device or SimRobot(chain, ServoModel())
        self.tick_rate = tick_rate
        self.log_file = log_file
        self.controller = ctl.KinematicController(chain, self.cfg)

        self._lock = threading.Lock()
        self._mode = self.MODE_JOINT
        self._target_q = np.zeros(len(chain))
        self._target_pose: Pose | None = None
        self._gripper = 0.0
        self._latency_ms = 0.0
        self.q_d = np.zeros(len(chain))
        self.seq = 0
        self._listeners = []
        self._stop = threading.Event()
        self.running = False

    # -- thread-safe target entry points (latest wins) --

    def set_mode(self, mode: str):
        if mode not in (self.MODE_JOINT, self.MODE_POSE):
            raise ValueError(f"unknown mode {mode!r}")
        with self._lock:
            self._mode = mode

    def set_joint_target(self, q, gripper: float | None = None):
        q = self.chain.clamp(q)
        with self._lock:
            self._mode = self.MODE_JOINT
            self._target_q = q
            if gripper is not None:
                self._gripper = float(np.clip(gripper, 0.0, 1.0))

    def set_pose_target(self, pose: Pose, gripper: float | None = None):
        with self._lock:
            self._mode = self.MODE_POSE
            self._target_pose = pose
            if gripper is not None:
                self._gripper = float(np.clip(gripper, 0.0, 1.0))

    def set_latency_ms(self, ms: float):
        self._latency_ms = ms

    def add_listener(self, fn):
        self._listeners.append(fn)

    # -- stepping --

    def tick(self, dt: float | None = None) -> Snapshot:
        dt = dt if dt is not None else 1.0 / self.tick_rate
        with self._lock:
            mode = self._mode
            target_q = self._target_q
            target_pose = self._target_pose
            gripper = self._gripper

        err_t = err_r = 0.0
        u = np.zeros(len(self.chain))
        if mode == self.MODE_POSE and target_pose is not None:
            u = self.controller.compute_velocity(self.q_d, target_pose)
            self.q_d = ctl.integrate(self.q_d, u, dt, self.chain)
            err_t, err_r = ctl.task_errors(self.chain, self.q_d, target_pose)
        else:
            self.q_d = ctl.step_configuration_mode(target_q, self.chain)

        self.device.command(self.q_d, gripper)
        state = self.device.advance(dt)
        self.seq += 1

        snap = Snapshot(state.q, state.gripper, self.q_d.copy(), err_t, err_r,
                        self.seq, getattr(state, "t_sim", 0.0),
                        self._latency_ms)
        if self.log_file is not None:
            active = 0
            if self.controller.last_solution is not None:
                active = len(self.controller.last_solution.active_set)
            self.log_file.write(ctl.tick_record(
                snap.t_sim, snap.q, snap.q_d, u, err_t, err_r, active) + "\n")
        for fn in self._listeners:
            fn(snap)
        return snap

    def run(self, duration: float | None = None, realtime: bool = True):
        """Paced loop at tick_rate; dt measured from the monotonic clock."""
        period = 1.0 / self.tick_rate
        t_end = None if duration is None else time.monotonic() + duration
        last = time.monotonic()
        self.running = True
        while not self._stop.is_set():
            now = time.monotonic()
            if t_end is not None and now >= t_end:
                break
            dt = now - last if realtime else period
            last = now
            self.tick(max(dt, 1e-4) if realtime else period)
            sleep = period - (time.monotonic() - now)
            if realtime and sleep > 0:
                time.sleep(sleep)
        self.running = False

    def stop(self):
        self._stop.set()

    def snapshot(self) -> Snapshot:
        state = self.device.state
        err_t = err_r = 0.0
        with self._lock:
            pose = self._target_pose
            if self._mode == self.MODE_POSE and pose is not None:
                err_t, err_r = ctl.task_errors(self.chain, self.q_d, pose)
        return Snapshot(state.q, state.gripper, self.q_d.copy(), err_t, err_r,
                        self.seq, getattr(state, "t_sim", 0.0),
                        self._latency_ms)

    def current_pose(self) -> Pose:
        return fkm(self.chain, self.device.state.q)
