"""Bit-exact framing between the control host and the servo controller.

Frame layout (normative):

    [0xAA, 0x55, type:u8, len:u8, payload..., crc:u8]

Multi-byte payload fields are little-endian. The CRC is CRC-8 with
polynomial 0x07, init 0x00, computed over type + len + payload. Servo
targets travel as u16 centidegrees (0 = -pi/2 rad, 18000 = +pi/2 rad);
pot counts as u16 in [0, 1023].
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

MAGIC = b"\xaa\x55"
CENTIDEG_MAX = 18000
N_SERVOS = 6
N_POTS = 6


class FrameType(IntEnum):
    SET_TARGETS = 0x01
    GET_STATE = 0x02
    STATE = 0x81
    POTS = 0x82


class FrameError(Exception):
    pass


class BadMagicError(FrameError):
    pass


class BadLengthError(FrameError):
    pass


class BadCrcError(FrameError):
    pass


class UnknownTypeError(FrameError):
    pass


class IncompleteFrameError(FrameError):
    """Not an error in a stream: just means more bytes are needed."""


_PAYLOAD_LEN = {
    FrameType.SET_TARGETS: 2 * N_SERVOS,
    FrameType.GET_STATE: 0,
    FrameType.STATE: 2 * N_SERVOS,
    FrameType.POTS: 2 * N_POTS,
}


def crc8(data: bytes, init: int = 0x00) -> int:
    """CRC-8, polynomial 0x07, MSB-first, no reflection, no final xor."""
    crc = init
    for b in data:
        crc ^= b
        for _ in range(8):
            if crc & 0x80:
                crc = ((crc << 1) ^ 0x07) & 0xFF
            else:
                crc = (crc << 1) & 0xFF
    return crc


@dataclass(frozen=True)
class SerialFrame:
    type: FrameType
    values: tuple[int, ...] = ()

    def __post_init__(self):
        t = FrameType(self.type)
        object.__setattr__(self, "type", t)
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        expect = _PAYLOAD_LEN[t] // 2
        if len(self.values) != expect:
            raise ValueError(f"{t.name} carries {expect} u16 values")
        hi = CENTIDEG_MAX if t in (FrameType.SET_TARGETS, FrameType.STATE) else 1023
        for v in self.values:
            if not 0 <= v <= hi:
                raise ValueError(f"value {v} outside [0, {hi}] for {t.name}")


def rad_to_centideg(angle: float) -> int:
    """-pi/2..+pi/2 rad -> 0..18000 centidegrees, clamped."""
    cd = round((angle + math.pi / 2) * (180.0 / math.pi) * 100.0)
    return int(min(CENTIDEG_MAX, max(0, cd)))


def centideg_to_rad(cd: int) -> float:
    return cd / 100.0 * (math.pi / 180.0) - math.pi / 2


def targets_frame(q, gripper: float) -> SerialFrame:
    """SET_TARGETS from 5 joint angles (rad) and a gripper ratio."""
    vals = [rad_to_centideg(a) for a in np.asarray(q, dtype=float)]
    vals.append(int(round(float(np.clip(gripper, 0.0, 1.0)) * CENTIDEG_MAX)))
    return SerialFrame(FrameType.SET_TARGETS, tuple(vals))


def frame_to_targets(frame: SerialFrame):
    q = np.array([centideg_to_rad(v) for v in frame.values[:5]])
    gripper = frame.values[5] / CENTIDEG_MAX
    return q, gripper


def encode(frame: SerialFrame) -> bytes:
    payload = struct.pack(f"<{len(frame.values)}H", *frame.values)
    body = bytes([frame.type, len(payload)]) + payload
    return MAGIC + body + bytes([crc8(body)])


def decode(data: bytes) -> SerialFrame:
    """Decode exactly one frame; raises a distinct error per failure mode."""
    frame, consumed = decode_prefix(data)
    if consumed != len(data):
        raise BadLengthError(f"{len(data) - consumed} trailing bytes")
    return frame


def decode_prefix(data: bytes):
    """Decode one frame at the start of `data`; returns (frame, consumed)."""
    if len(data) < 2:
        raise IncompleteFrameError("need magic")
    if data[:2] != MAGIC:
        raise BadMagicError(f"bad magic {data[:2]!r}")
    if len(data) < 4:
        raise IncompleteFrameError("need header")
    ftype_raw, plen = data[2], data[3]
    try:
        ftype = FrameType(ftype_raw)
    except ValueError:
        raise UnknownTypeError(f"unknown frame type 0x{ftype_raw:02x}") from None
    if plen != _PAYLOAD_LEN[ftype]:
        raise BadLengthError(f"{ftype.name} payload must be "
                             f"{_PAYLOAD_LEN[ftype]} bytes, got {plen}")
    total = 4 + plen + 1
    if len(data) < total:
        raise IncompleteFrameError("need payload")
    body = data[2:4 + plen]
    if crc8(body) != data[4 + plen]:
        raise BadCrcError("crc mismatch")
    values = struct.unpack(f"<{plen // 2}H", data[4:4 + plen])
    try:
        return SerialFrame(ftype, values), total
    except ValueError as exc:
        raise BadLengthError(str(exc)) from None


class StreamDecoder:
    """Incremental decoder with resynchronization on the magic prefix.

    Never consumes bytes past the last complete frame; garbage between
    frames is skipped one byte at a time while hunting for magic.
    """

    def __init__(self):
        self._buf = bytearray()
        self.errors = 0

    def feed(self, data: bytes) -> list[SerialFrame]:
        self._buf.extend(data)
        frames = []
        while True:
            # resync: discard until a magic prefix is plausible
            idx = self._buf.find(MAGIC)
            if idx < 0:
                if self._buf:
                    self.errors += len(self._buf) > 1
                    # keep a possible first magic byte at the tail
                    keep = self._buf[-1:] if self._buf[-1] == MAGIC[0] else b""
                    self._buf = bytearray(keep)
                break
            if idx > 0:
                self.errors += 1
                del self._buf[:idx]
            try:
                frame, consumed = decode_prefix(bytes(self._buf))
            except IncompleteFrameError:
                break
            except FrameError:
                self.errors += 1
                del self._buf[:1]  # drop the magic byte, rehunt
                continue
            frames.append(frame)
            del self._buf[:consumed]
        return frames
