"""Master-device signal pipeline: pot calibration and the two mappings.

Six 10-bit potentiometer channels. Calibration tracks per-channel min/max
counts; a channel counts as calibrated once it has seen at least
MIN_TRAVEL counts of travel (guards against mapping ADC noise to full
joint range). Mappings are affine with endpoint clamping: channels 0-4 to
joints (channel 5 to the gripper), or channels 0-2 to a translation box
and 3-5 to roll/pitch/yaw composed z-y-x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mathcore as mc
from .kinematics import DHChain, Pose
from .mathcore import Quaternion, UnitQuaternion

ADC_MAX = 1023
N_CHANNELS = 6
MIN_TRAVEL = 32


class CalibrationError(Exception):
    pass


@dataclass(frozen=True)
class CalibrationState:
    min_seen: tuple = (None,) * N_CHANNELS
    max_seen: tuple = (None,) * N_CHANNELS

    def calibrated(self, ch: int) -> bool:
        lo, hi = self.min_seen[ch], self.max_seen[ch]
        return lo is not None and hi - lo >= MIN_TRAVEL

    def all_calibrated(self) -> bool:
        return all(self.calibrated(ch) for ch in range(N_CHANNELS))


def ingest(cal: CalibrationState, reading) -> CalibrationState:
    """Fold one pot reading into the per-channel min/max envelope."""
    reading = _check_reading(reading)
    lo = list(cal.min_seen)
    hi = list(cal.max_seen)
    for ch, v in enumerate(reading):
        lo[ch] = v if lo[ch] is None else min(lo[ch], v)
        hi[ch] = v if hi[ch] is None else max(hi[ch], v)
    return CalibrationState(tuple(lo), tuple(hi))


def _check_reading(reading):
    reading = [int(v) for v in reading]
    if len(reading) != N_CHANNELS:
        raise ValueError(f"expected {N_CHANNELS} channels")
    for v in reading:
        if not 0 <= v <= ADC_MAX:
            raise ValueError(f"pot count {v} outside [0, {ADC_MAX}]")
    return reading


def _unit(cal: CalibrationState, ch: int, count: int) -> float:
    """Map a raw count to [0, 1] over the calibrated span, clamped."""
    if not cal.calibrated(ch):
        raise CalibrationError(f"channel {ch} not calibrated")
    lo, hi = cal.min_seen[ch], cal.max_seen[ch]
    return min(1.0, max(0.0, (count - lo) / (hi - lo)))


def map_to_joints(cal: CalibrationState, reading, chain: DHChain):
    """Channels 0..n-1 -> joint angles within limits; last channel -> gripper."""
    reading = _check_reading(reading)
    n = len(chain)
    q = np.empty(n)
    for i in range(n):
        s = _unit(cal, i, reading[i])
        q[i] = chain.q_min[i] + s * (chain.q_max[i] - chain.q_min[i])
    gripper = _unit(cal, N_CHANNELS - 1, reading[N_CHANNELS - 1])
    return q, gripper


@dataclass(frozen=True)
class Workspace:
    """Task-space mapping ranges: translation box (m) and rpy spans (rad)."""

    t_min: np.ndarray = field(default=None)  # type: ignore[assignment]
    t_max: np.ndarray = field(default=None)  # type: ignore[assignment]
    rpy_span: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        t_min = np.asarray(self.t_min if self.t_min is not None
                           else [-0.10, -0.10, 0.05], dtype=float)
        t_max = np.asarray(self.t_max if self.t_max is not None
                           else [0.10, 0.10, 0.25], dtype=float)
        rpy = np.asarray(self.rpy_span if self.rpy_span is not None
                         else [math.pi / 2] * 3, dtype=float)
        if not np.all(t_min < t_max):
            raise ValueError("workspace box must have t_min < t_max")
        object.__setattr__(self, "t_min", t_min)
        object.__setattr__(self, "t_max", t_max)
        object.__setattr__(self, "rpy_span", rpy)

    def center(self) -> np.ndarray:
        return 0.5 * (self.t_min + self.t_max)


def rpy_to_rotation(roll: float, pitch: float, yaw: float) -> UnitQuaternion:
    """Compose z-y-x: yaw about z, then pitch about y, then roll about x."""
    rz = mc.from_axis_angle(mc.K_, yaw)
    ry = mc.from_axis_angle(mc.J_, pitch)
    rx = mc.from_axis_angle(mc.I_, roll)
    return mc.normalize(mc.mul(mc.mul(rz, ry), rx))


def map_to_pose(cal: CalibrationState, reading, ws: Workspace) -> Pose:
    """Channels 0-2 -> translation over the box, 3-5 -> roll/pitch/yaw."""
    reading = _check_reading(reading)
    t = np.empty(3)
    for i in range(3):
        s = _unit(cal, i, reading[i])
        t[i] = ws.t_min[i] + s * (ws.t_max[i] - ws.t_min[i])
    rpy = np.empty(3)
    for i in range(3):
        s = _unit(cal, 3 + i, reading[3 + i])
        rpy[i] = (s - 0.5) * ws.rpy_span[i]
    r = rpy_to_rotation(rpy[0], rpy[1], rpy[2])
    return Pose(r, Quaternion(0.0, t[0], t[1], t[2]))


def save_calibration(cal: CalibrationState, path) -> None:
    """Per-channel `min max` lines so a master survives restarts."""
    with open(path, "w") as f:
        for lo, hi in zip(cal.min_seen, cal.max_seen):
            if lo is None:
                f.write("- -\n")
            else:
                f.write(f"{lo} {hi}\n")


def load_calibration(path) -> CalibrationState:
    lo, hi = [], []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "-":
                lo.append(None)
                hi.append(None)
            else:
                lo.append(int(parts[0]))
                hi.append(int(parts[1]))
    if len(lo) != N_CHANNELS:
        raise ValueError(f"{path}: expected {N_CHANNELS} channel lines")
    return CalibrationState(tuple(lo), tuple(hi))
