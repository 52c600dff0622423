import math

import numpy as np
import pytest

from telearm.kinematics import umirobot_chain
from telearm.simdevice import RobotState, ServoModel, SimRobot, tick

CHAIN = umirobot_chain()
MODEL = ServoModel(max_speed=6.0)


def test_target_equals_current_is_noop():
    s = RobotState(np.full(5, 0.3), 0.5)
    out = tick(s, s.q, 0.5, 0.01, MODEL, CHAIN)
    assert np.array_equal(out.q, s.q)
    assert out.gripper == 0.5
    assert out.t_sim == pytest.approx(0.01)


def test_rate_limit_arithmetic():
    s = RobotState(np.zeros(5))
    out = tick(s, np.full(5, 1.0), 0.0, 0.01, MODEL, CHAIN)
    assert np.allclose(out.q, np.full(5, 0.06))


def test_convergence_step_count():
    delta = 1.0
    dt = 0.01
    ticks_needed = math.ceil(delta / (MODEL.max_speed * dt))
    s = RobotState(np.zeros(5))
    target = np.full(5, delta)
    for i in range(ticks_needed):
        assert not np.allclose(s.q, target)
        s = tick(s, target, 0.0, dt, MODEL, CHAIN)
    assert np.allclose(s.q, target)


def test_limits_and_gripper_bounds():
    s = RobotState(np.zeros(5), 0.0)
    for _ in range(100):
        s = tick(s, np.full(5, 10.0), 5.0, 0.05, MODEL, CHAIN)
        assert np.all(s.q <= CHAIN.q_max)
        assert 0.0 <= s.gripper <= 1.0
    assert np.allclose(s.q, CHAIN.q_max)
    assert s.gripper == 1.0


def test_monotone_approach():
    rng = np.random.default_rng(3)
    s = RobotState(rng.uniform(-1, 1, 5))
    target = rng.uniform(-1, 1, 5)
    prev = np.abs(s.q - target)
    for _ in range(50):
        s = tick(s, target, 0.0, 0.013, MODEL, CHAIN)
        dist = np.abs(s.q - target)
        assert np.all(dist <= prev + 1e-15)
        prev = dist


def test_determinism():
    def run():
        s = RobotState(np.zeros(5))
        out = []
        for _ in range(30):
            s = tick(s, np.full(5, 0.7), 0.3, 0.011, MODEL, CHAIN)
            out.append(s.q.copy())
        return np.array(out)
    assert np.array_equal(run(), run())


def test_bad_dt():
    with pytest.raises(ValueError):
        tick(RobotState(np.zeros(5)), np.zeros(5), 0.0, 0.0, MODEL, CHAIN)


def test_simrobot_wrapper():
    r = SimRobot(CHAIN)
    r.command(np.full(5, 0.5), 0.8)
    for _ in range(200):
        r.advance(0.01)
    assert np.allclose(r.state.q, np.full(5, 0.5))
    assert r.state.gripper == pytest.approx(0.8)
    # commands beyond limits are clamped at entry
    r.command(np.full(5, 9.0), 2.0)
    assert np.array_equal(r.target_q, CHAIN.q_max)
    assert r.target_gripper == 1.0
