import hashlib
import socket
import time

import numpy as np
import pytest

from telearm import telelink as tl
from telearm.kinematics import fkm, umirobot_chain
from telearm.simdevice import ServoModel, SimRobot

rng = np.random.default_rng(5)
CHAIN = umirobot_chain()


def random_frame(seq):
    kind = rng.choice(list(tl.Kind))
    t = int(rng.integers(0, 10 ** 9))
    if kind == tl.Kind.HELLO:
        return tl.hello(seq, t, tl.Role(int(rng.integers(0, 2))))
    if kind == tl.Kind.PING:
        return tl.ping(seq, t, int(rng.integers(0, 2 ** 32)))
    if kind == tl.Kind.PONG:
        return tl.pong(seq, t, int(rng.integers(0, 2 ** 32)))
    if kind == tl.Kind.POSE_TARGET:
        pose = fkm(CHAIN, rng.uniform(CHAIN.q_min, CHAIN.q_max))
        return tl.pose_target(seq, t, pose, float(rng.uniform()))
    q = rng.uniform(CHAIN.q_min, CHAIN.q_max)
    g = float(rng.uniform())
    if kind == tl.Kind.JOINT_TARGET:
        return tl.joint_target(seq, t, q, g)
    return tl.state_report(seq, t, q, g)


def frames_equal(a, b):
    if (a.kind, a.seq, a.t_send, a.role, a.proto_version, a.nonce) != \
            (b.kind, b.seq, b.t_send, b.role, b.proto_version, b.nonce):
        return False
    for fa, fb in ((a.q, b.q), (a.r, b.r), (a.t, b.t)):
        if (fa is None) != (fb is None):
            return False
        if fa is not None and not np.array_equal(fa, fb):
            return False
    return a.gripper == b.gripper


def test_roundtrip_randomized():
    for seq in range(2000):
        f = random_frame(seq)
        assert frames_equal(tl.decode(tl.encode(f)), f)


def test_single_bit_corruption_rejected():
    for i in range(20):
        f = random_frame(i)
        raw = bytearray(tl.encode(f))
        for bit in range(len(raw) * 8):
            corrupted = bytearray(raw)
            corrupted[bit // 8] ^= 1 << (bit % 8)
            with pytest.raises(tl.BadFrameError):
                tl.decode(bytes(corrupted))


def test_stream_decoder_chunked():
    frames = [random_frame(i) for i in range(50)]
    blob = b"".join(tl.encode(f) for f in frames)
    dec = tl.StreamDecoder()
    got = []
    for i in range(0, len(blob), 13):
        got.extend(dec.feed(blob[i:i + 13]))
    assert len(got) == len(frames)
    for (raw, f), orig in zip(got, frames):
        assert raw == tl.encode(orig)
        assert frames_equal(f, orig)


def test_faulty_link_zero_faults_passthrough():
    link = tl.FaultyLink(tl.LinkFaults())
    for i in range(100):
        link.send(i, now=float(i))
    assert link.poll(now=1000.0) == list(range(100))
    assert link.dropped == 0


def test_faulty_link_fixed_delay():
    link = tl.FaultyLink(tl.LinkFaults(fixed_delay=0.150))
    link.send("a", now=0.0)
    assert link.poll(0.149) == []
    assert link.poll(0.150) == ["a"]


def test_faulty_link_deterministic_drops():
    def pattern():
        link = tl.FaultyLink(tl.LinkFaults(drop_rate=0.5), seed=77)
        for i in range(200):
            link.send(i, now=0.0)
        return link.poll(10.0)
    a, b = pattern(), pattern()
    assert a == b
    assert 0 < len(a) < 200


def test_faulty_link_jitter_never_reorders():
    link = tl.FaultyLink(tl.LinkFaults(fixed_delay=0.01, jitter=0.05), seed=3)
    for i in range(500):
        link.send(i, now=i * 0.001)
    got = link.poll(1e9)
    assert got == sorted(got)
    assert got == list(range(500))


def test_link_faults_validation():
    with pytest.raises(ValueError):
        tl.LinkFaults(drop_rate=1.0)
    with pytest.raises(ValueError):
        tl.LinkFaults(fixed_delay=-1.0)


# ---------------------------------------------------------------------------
# relay over real sockets


def _drain(sock, n_bytes, timeout=5.0):
    sock.settimeout(timeout)
    buf = b""
    while len(buf) < n_bytes:
        chunk = sock.recv(4096)
        if not chunk:
            break
        buf += chunk
    return buf


def test_relay_transparency_and_order():
    relay = tl.Relay(0, 0).start()
    try:
        follower = socket.create_connection(("127.0.0.1", relay.follower_port))
        leader = socket.create_connection(("127.0.0.1", relay.leader_port))
        frames = [random_frame(i) for i in range(100)]
        blob = b"".join(tl.encode(f) for f in frames)
        leader.sendall(blob)
        got = _drain(follower, len(blob))
        assert hashlib.sha256(got).hexdigest() == \
            hashlib.sha256(blob).hexdigest()
        # and the reverse direction
        leader2_blob = b"".join(tl.encode(random_frame(i)) for i in range(40))
        follower.sendall(leader2_blob)
        got2 = _drain(leader, len(leader2_blob))
        assert got2 == leader2_blob
        follower.close()
        leader.close()
    finally:
        relay.stop()


def test_relay_buffers_until_pairing():
    relay = tl.Relay(0, 0).start()
    try:
        leader = socket.create_connection(("127.0.0.1", relay.leader_port))
        frames = [random_frame(i) for i in range(10)]
        blob = b"".join(tl.encode(f) for f in frames)
        leader.sendall(blob)
        time.sleep(0.3)  # let the relay ingest and buffer
        follower = socket.create_connection(("127.0.0.1", relay.follower_port))
        got = _drain(follower, len(blob))
        assert got == blob
        leader.close()
        follower.close()
    finally:
        relay.stop()


def test_relay_measured_delay():
    relay = tl.Relay(0, 0, faults=tl.LinkFaults(fixed_delay=0.120)).start()
    try:
        follower = socket.create_connection(("127.0.0.1", relay.follower_port))
        leader = socket.create_connection(("127.0.0.1", relay.leader_port))
        time.sleep(0.1)
        frame = tl.encode(tl.ping(1, 0, 42))
        t0 = time.monotonic()
        leader.sendall(frame)
        got = _drain(follower, len(frame))
        dt = time.monotonic() - t0
        assert got == frame
        assert 0.120 <= dt <= 0.140  # 20 ms scheduler slack budget
    finally:
        relay.stop()


# ---------------------------------------------------------------------------
# follower session


class _Harness:
    def __init__(self):
        self.robot = SimRobot(CHAIN, ServoModel())
        self.targets = []

    def apply_target(self, frame):
        self.targets.append(frame)
        self.robot.command(frame.q, frame.gripper)
        self.robot.advance(0.02)

    def get_state(self):
        s = self.robot.state
        return s.q, s.gripper


def test_follower_session_end_to_end():
    h = _Harness()
    session = tl.FollowerSession(h.apply_target, h.get_state)
    session.serve("127.0.0.1", 0)
    try:
        client = tl.LeaderClient("127.0.0.1", session.listen_port)
        target = np.array([0.3, -0.2, 0.1, 0.4, -0.5])
        for _ in range(60):
            client.send_joint_target(target, 0.7)
            time.sleep(0.01)
        deadline = time.monotonic() + 5.0
        states = []
        while time.monotonic() < deadline:
            states.extend(client.recv_states())
            if states and np.allclose(states[-1].q, target, atol=1e-9):
                break
        assert states, "no state reports received"
        assert np.allclose(states[-1].q, target, atol=1e-9)
        assert states[-1].gripper == pytest.approx(0.7)
        # state reports keep strictly increasing seq
        seqs = [s.seq for s in states]
        assert seqs == sorted(set(seqs))
        client.close()
    finally:
        session.stop()


def test_follower_rejects_duplicate_seq_and_answers_ping():
    h = _Harness()
    session = tl.FollowerSession(h.apply_target, h.get_state)
    session.serve("127.0.0.1", 0)
    try:
        sock = socket.create_connection(("127.0.0.1", session.listen_port))
        sock.sendall(tl.encode(tl.hello(1, 0, tl.Role.LEADER)))
        q = np.zeros(5)
        sock.sendall(tl.encode(tl.joint_target(5, 0, q, 0.0)))
        sock.sendall(tl.encode(tl.joint_target(5, 0, q, 0.0)))  # duplicate
        sock.sendall(tl.encode(tl.joint_target(4, 0, q, 0.0)))  # stale
        sock.sendall(tl.encode(tl.ping(6, 0, nonce=12345)))
        dec = tl.StreamDecoder()
        deadline = time.monotonic() + 5.0
        pong_frame = None
        sock.settimeout(0.2)
        while time.monotonic() < deadline and pong_frame is None:
            try:
                data = sock.recv(4096)
            except socket.timeout:
                continue
            for _raw, f in dec.feed(data):
                if f.kind == tl.Kind.PONG:
                    pong_frame = f
        assert pong_frame is not None
        assert pong_frame.nonce == 12345
        assert session.rejected_stale_seq == 2
        assert len(h.targets) == 1
        sock.close()
    finally:
        session.stop()


def test_follower_refuses_version_mismatch():
    h = _Harness()
    session = tl.FollowerSession(h.apply_target, h.get_state)
    session.serve("127.0.0.1", 0)
    try:
        sock = socket.create_connection(("127.0.0.1", session.listen_port))
        sock.sendall(tl.encode(tl.hello(1, 0, tl.Role.LEADER, version=9)))
        deadline = time.monotonic() + 5.0
        while time.monotonic() < deadline and session.rejected_version == 0:
            time.sleep(0.02)
        assert session.rejected_version == 1
        sock.close()
    finally:
        session.stop()


def test_follower_liveness_state_within_40ms():
    h = _Harness()
    session = tl.FollowerSession(h.apply_target, h.get_state)
    session.serve("127.0.0.1", 0)
    try:
        client = tl.LeaderClient("127.0.0.1", session.listen_port)
        time.sleep(0.1)
        client.recv_states()  # flush
        t0 = time.monotonic()
        client.send_joint_target(np.full(5, 0.1), 0.0)
        got = []
        while not got and time.monotonic() - t0 < 1.0:
            got = client.recv_states()
        assert got
        assert time.monotonic() - t0 < 0.04 + 0.2  # 50 Hz cadence + slack
        client.close()
    finally:
        session.stop()
