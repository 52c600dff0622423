"""Leader-follower network layer: framing, relay gateway, fault injection.

Wire format per frame (normative):

    [len: u16 LE] [frame bytes] [crc8]

where the frame bytes are

    kind:u8  seq:u32 LE  t_send:u64 LE (us since session start)  payload

and crc8 uses the same polynomial/init discipline as the serial link.
Transport is any reliable ordered byte stream (TCP). The follower only
ever makes outbound connections; the relay gateway pairs one leader with
one follower and forwards frames byte-identically, FIFO per direction.
"""

from __future__ import annotations

import random
import socket
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import mathcore as mc
from .kinematics import Pose
from .mathcore import Quaternion, UnitQuaternion
from .serialio import crc8

PROTO_VERSION = 1
MAX_FRAME = 4096
STATE_RATE_HZ = 50.0
SESSION_TIMEOUT = 2.0


class Kind(IntEnum):
    HELLO = 0x01
    PING = 0x02
    PONG = 0x03
    JOINT_TARGET = 0x10
    POSE_TARGET = 0x11
    STATE_REPORT = 0x20


class Role(IntEnum):
    LEADER = 0
    FOLLOWER = 1


class LinkError(Exception):
    pass


class BadFrameError(LinkError):
    pass


@dataclass(frozen=True)
class TeleopFrame:
    kind: Kind
    seq: int
    t_send: int  # us since session start
    # payload per kind; unused fields are None
    q: np.ndarray | None = None
    gripper: float | None = None
    r: np.ndarray | None = None       # [w, x, y, z]
    t: np.ndarray | None = None       # [x, y, z] m
    role: Role | None = None
    proto_version: int | None = None
    nonce: int | None = None


def hello(seq: int, t_send: int, role: Role,
          version: int = PROTO_VERSION) -> TeleopFrame:
    return TeleopFrame(Kind.HELLO, seq, t_send, role=role, proto_version=version)


def joint_target(seq: int, t_send: int, q, gripper: float) -> TeleopFrame:
    return TeleopFrame(Kind.JOINT_TARGET, seq, t_send,
                       q=np.asarray(q, dtype=float), gripper=float(gripper))


def pose_target(seq: int, t_send: int, pose: Pose, gripper: float) -> TeleopFrame:
    return TeleopFrame(Kind.POSE_TARGET, seq, t_send,
                       r=mc.vec4(pose.r), t=mc.vec3(pose.t),
                       gripper=float(gripper))


def state_report(seq: int, t_send: int, q, gripper: float) -> TeleopFrame:
    return TeleopFrame(Kind.STATE_REPORT, seq, t_send,
                       q=np.asarray(q, dtype=float), gripper=float(gripper))


def ping(seq: int, t_send: int, nonce: int) -> TeleopFrame:
    return TeleopFrame(Kind.PING, seq, t_send, nonce=nonce)


def pong(seq: int, t_send: int, nonce: int) -> TeleopFrame:
    return TeleopFrame(Kind.PONG, seq, t_send, nonce=nonce)


def frame_pose(frame: TeleopFrame) -> Pose:
    r = mc.normalize(mc.from_vec4(frame.r))
    return Pose(r, Quaternion(0.0, *frame.t))


_HEAD = struct.Struct("<BIQ")


def _payload(frame: TeleopFrame) -> bytes:
    k = frame.kind
    if k == Kind.HELLO:
        return struct.pack("<BB", int(frame.role), frame.proto_version)
    if k in (Kind.PING, Kind.PONG):
        return struct.pack("<I", frame.nonce)
    if k in (Kind.JOINT_TARGET, Kind.STATE_REPORT):
        return struct.pack("<6d", *frame.q, frame.gripper)
    if k == Kind.POSE_TARGET:
        return struct.pack("<8d", *frame.r, *frame.t, frame.gripper)
    raise BadFrameError(f"unencodable kind {k}")


def encode(frame: TeleopFrame) -> bytes:
    body = _HEAD.pack(int(frame.kind), frame.seq, frame.t_send) + _payload(frame)
    return struct.pack("<H", len(body)) + body + bytes([crc8(body)])


def decode_body(body: bytes) -> TeleopFrame:
    if len(body) < _HEAD.size:
        raise BadFrameError("frame body too short")
    kind_raw, seq, t_send = _HEAD.unpack_from(body)
    try:
        kind = Kind(kind_raw)
    except ValueError:
        raise BadFrameError(f"unknown kind 0x{kind_raw:02x}") from None
    p = body[_HEAD.size:]
    try:
        if kind == Kind.HELLO:
            role, version = struct.unpack("<BB", p)
            return TeleopFrame(kind, seq, t_send, role=Role(role),
                               proto_version=version)
        if kind in (Kind.PING, Kind.PONG):
            (nonce,) = struct.unpack("<I", p)
            return TeleopFrame(kind, seq, t_send, nonce=nonce)
        if kind in (Kind.JOINT_TARGET, Kind.STATE_REPORT):
            vals = struct.unpack("<6d", p)
            return TeleopFrame(kind, seq, t_send,
                               q=np.array(vals[:5]), gripper=vals[5])
        vals = struct.unpack("<8d", p)
        return TeleopFrame(kind, seq, t_send, r=np.array(vals[:4]),
                           t=np.array(vals[4:7]), gripper=vals[7])
    except struct.error as exc:
        raise BadFrameError(str(exc)) from None


def decode(data: bytes) -> TeleopFrame:
    """Decode one complete length-prefixed frame."""
    if len(data) < 3:
        raise BadFrameError("truncated frame")
    (length,) = struct.unpack_from("<H", data)
    if len(data) != 2 + length + 1:
        raise BadFrameError("length prefix does not match buffer")
    body = data[2:2 + length]
    if crc8(body) != data[-1]:
        raise BadFrameError("crc mismatch")
    return decode_body(body)


class StreamDecoder:
    """Splits a byte stream into frames; yields raw bytes and decoded frames."""

    def __init__(self):
        self._buf = bytearray()
        self.errors = 0

    def feed(self, data: bytes):
        self._buf.extend(data)
        out = []
        while len(self._buf) >= 3:
            (length,) = struct.unpack_from("<H", self._buf)
            if length > MAX_FRAME:
                raise BadFrameError(f"frame length {length} exceeds cap")
            total = 2 + length + 1
            if len(self._buf) < total:
                break
            raw = bytes(self._buf[:total])
            del self._buf[:total]
            body = raw[2:-1]
            if crc8(body) != raw[-1]:
                self.errors += 1
                continue
            try:
                out.append((raw, decode_body(body)))
            except BadFrameError:
                self.errors += 1
        return out


# ---------------------------------------------------------------------------
# fault injection


@dataclass(frozen=True)
class LinkFaults:
    fixed_delay: float = 0.0  # s
    jitter: float = 0.0       # s, uniform extra delay
    drop_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.drop_rate < 1.0:
            raise ValueError("drop_rate must be in [0, 1)")
        if self.fixed_delay < 0 or self.jitter < 0:
            raise ValueError("delays must be nonnegative")


class FaultyLink:
    """Delay/drop queue with an explicit clock, usable in simulated time.

    Delivery order always equals send order: a frame is never delivered
    before an earlier one even if its drawn delay is smaller.
    """

    def __init__(self, faults: LinkFaults, seed: int = 0):
        self.faults = faults
        self._rng = random.Random(seed)
        self._queue: deque[tuple[float, object]] = deque()
        self._last_delivery = -float("inf")
        self.dropped = 0

    def send(self, item, now: float):
        if self._rng.random() < self.faults.drop_rate:
            self.dropped += 1
            return
        delay = self.faults.fixed_delay
        if self.faults.jitter > 0:
            delay += self._rng.uniform(0.0, self.faults.jitter)
        when = max(self._last_delivery, now + delay)
        self._last_delivery = when
        self._queue.append((when, item))

    def poll(self, now: float) -> list:
        out = []
        while self._queue and self._queue[0][0] <= now:
            out.append(self._queue.popleft()[1])
        return out

    def pending(self) -> int:
        return len(self._queue)


# ---------------------------------------------------------------------------
# relay gateway


class Relay:
    """Pairs one leader with one follower and forwards frames verbatim.

    Frames arriving while the peer is absent are buffered (up to 256,
    oldest dropped with a counter). Optional fault injection applies per
    direction on forward.
    """

    BUFFER_CAP = 256

    def __init__(self, leader_port: int, follower_port: int,
                 host: str = "127.0.0.1",
                 faults: LinkFaults | None = None, seed: int = 0):
        self.host = host
        self.faults = faults or LinkFaults()
        self._rng = random.Random(seed)
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._conns: dict[str, socket.socket | None] = {
            "leader": None, "follower": None}
        self._buffers = {"to_follower": deque(), "to_leader": deque()}
        self.dropped_overflow = 0
        self.dropped_faults = 0

        self._srv = {}
        for name, port in (("leader", leader_port), ("follower", follower_port)):
            srv = socket.create_server((host, port))
            srv.settimeout(0.2)
            self._srv[name] = srv
        self.leader_port = self._srv["leader"].getsockname()[1]
        self.follower_port = self._srv["follower"].getsockname()[1]
        self._threads = []

    def start(self):
        for name in ("leader", "follower"):
            t = threading.Thread(target=self._accept_loop, args=(name,),
                                 daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self):
        self._stop.set()
        for srv in self._srv.values():
            srv.close()
        with self._lock:
            for conn in self._conns.values():
                if conn is not None:
                    try:
                        conn.close()
                    except OSError:
                        pass
        for t in self._threads:
            t.join(timeout=2.0)

    def _accept_loop(self, name: str):
        srv = self._srv[name]
        while not self._stop.is_set():
            try:
                conn, _ = srv.accept()
            except (socket.timeout, OSError):
                continue
            with self._lock:
                old = self._conns[name]
                self._conns[name] = conn
            if old is not None:
                try:
                    old.close()
                except OSError:
                    pass
            self._flush(name)
            t = threading.Thread(target=self._pump, args=(name, conn),
                                 daemon=True)
            t.start()

    def _peer(self, name: str) -> str:
        return "follower" if name == "leader" else "leader"

    def _bufname(self, src: str) -> str:
        return "to_follower" if src == "leader" else "to_leader"

    def _pump(self, src: str, conn: socket.socket):
        dec = StreamDecoder()
        try:
            conn.settimeout(0.2)
        except OSError:
            return
        while not self._stop.is_set():
            try:
                data = conn.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not data:
                break
            for raw, _frame in dec.feed(data):
                self._forward(src, raw)
        with self._lock:
            if self._conns[src] is conn:
                self._conns[src] = None

    def _forward(self, src: str, raw: bytes):
        if self.faults.drop_rate > 0 and self._rng.random() < self.faults.drop_rate:
            self.dropped_faults += 1
            return
        delay = self.faults.fixed_delay
        if self.faults.jitter > 0:
            delay += self._rng.uniform(0.0, self.faults.jitter)
        if delay > 0:
            time.sleep(delay)
        with self._lock:
            peer = self._conns[self._peer(src)]
            if peer is None:
                buf = self._buffers[self._bufname(src)]
                if len(buf) >= self.BUFFER_CAP:
                    buf.popleft()
                    self.dropped_overflow += 1
                buf.append(raw)
                return
        try:
            peer.sendall(raw)
        except OSError:
            pass

    def _flush(self, arrived: str):
        src = self._peer(arrived)
        with self._lock:
            conn = self._conns[arrived]
            buf = self._buffers[self._bufname(src)]
            pending = list(buf)
            buf.clear()
        for raw in pending:
            try:
                conn.sendall(raw)
            except OSError:
                return


# ---------------------------------------------------------------------------
# follower session


class FollowerSession:
    """Serves one leader at a time and drives the attached control pipeline.

    `apply_target(frame)` is called for each accepted target frame;
    `get_state()` must return (q, gripper) for the periodic StateReport.
    Either connects out to a relay (follower is always the outbound side)
    or accepts directly on a listen port.
    """

    def __init__(self, apply_target, get_state,
                 state_rate_hz: float = STATE_RATE_HZ,
                 session_timeout: float = SESSION_TIMEOUT):
        self.apply_target = apply_target
        self.get_state = get_state
        self.state_period = 1.0 / state_rate_hz
        self.session_timeout = session_timeout
        self.rejected_stale_seq = 0
        self.rejected_version = 0
        self.refused_busy = 0
        self._stop = threading.Event()
        self._threads = []
        self._sock: socket.socket | None = None
        self._last_frame = 0.0

    def connect(self, host: str, port: int):
        sock = socket.create_connection((host, port), timeout=5.0)
        self._run_session(sock)
        return self

    def serve(self, host: str, port: int):
        srv = socket.create_server((host, port))
        srv.settimeout(0.2)
        self.listen_port = srv.getsockname()[1]
        self._srv = srv
        t = threading.Thread(target=self._accept_loop, args=(srv,), daemon=True)
        t.start()
        self._threads.append(t)
        return self

    def stop(self):
        self._stop.set()
        if getattr(self, "_srv", None) is not None:
            self._srv.close()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)

    def _accept_loop(self, srv: socket.socket):
        while not self._stop.is_set():
            try:
                conn, _ = srv.accept()
            except (socket.timeout, OSError):
                continue
            # one leader at a time; a live session is only replaced after
            # it has gone quiet for session_timeout
            if (self._sock is not None
                    and time.monotonic() - self._last_frame < self.session_timeout):
                self.refused_busy += 1
                try:
                    conn.close()
                except OSError:
                    pass
                continue
            if self._sock is not None:
                try:
                    self._sock.close()
                except OSError:
                    pass
            self._run_session(conn)

    def _run_session(self, sock: socket.socket):
        self._sock = sock
        t = threading.Thread(target=self._reader, args=(sock,), daemon=True)
        t.start()
        self._threads.append(t)
        w = threading.Thread(target=self._state_writer, args=(sock,),
                             daemon=True)
        w.start()
        self._threads.append(w)

    def _reader(self, sock: socket.socket):
        dec = StreamDecoder()
        sock.settimeout(0.2)
        last_seq = -1
        t0 = time.monotonic()
        while not self._stop.is_set():
            try:
                data = sock.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not data:
                break
            for _raw, frame in dec.feed(data):
                self._last_frame = time.monotonic()
                if frame.kind == Kind.HELLO:
                    if frame.proto_version != PROTO_VERSION:
                        self.rejected_version += 1
                        try:
                            sock.close()
                        except OSError:
                            pass
                        if self._sock is sock:
                            self._sock = None
                        return
                    continue
                if frame.seq <= last_seq:
                    self.rejected_stale_seq += 1
                    continue
                last_seq = frame.seq
                if frame.kind == Kind.PING:
                    now_us = int((time.monotonic() - t0) * 1e6)
                    reply = pong(frame.seq, now_us, frame.nonce)
                    try:
                        sock.sendall(encode(reply))
                    except OSError:
                        return
                elif frame.kind in (Kind.JOINT_TARGET, Kind.POSE_TARGET):
                    self.apply_target(frame)
        if self._sock is sock:
            self._sock = None

    def _state_writer(self, sock: socket.socket):
        seq = 0
        t0 = time.monotonic()
        next_due = t0
        while not self._stop.is_set():
            now = time.monotonic()
            if now < next_due:
                time.sleep(min(self.state_period, next_due - now))
                continue
            next_due += self.state_period
            q, gripper = self.get_state()
            frame = state_report(seq, int((now - t0) * 1e6), q, gripper)
            seq += 1
            try:
                sock.sendall(encode(frame))
            except OSError:
                return


class LeaderClient:
    """Outbound leader connection streaming target frames."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port), timeout=5.0)
        self.sock.settimeout(0.2)
        self._dec = StreamDecoder()
        self._seq = 0
        self._t0 = time.monotonic()
        self.send(hello(self._next_seq(), self._now_us(), Role.LEADER))

    def _now_us(self) -> int:
        return int((time.monotonic() - self._t0) * 1e6)

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def send(self, frame: TeleopFrame):
        self.sock.sendall(encode(frame))

    def send_joint_target(self, q, gripper: float = 0.0):
        self.send(joint_target(self._next_seq(), self._now_us(), q, gripper))

    def send_pose_target(self, pose: Pose, gripper: float = 0.0):
        self.send(pose_target(self._next_seq(), self._now_us(), pose, gripper))

    def recv_states(self) -> list[TeleopFrame]:
        try:
            data = self.sock.recv(4096)
        except socket.timeout:
            return []
        except OSError:
            return []
        if not data:
            return []
        return [f for _raw, f in self._dec.feed(data)
                if f.kind == Kind.STATE_REPORT]

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass
