"""Rate-limited simulated servo robot: five joints plus a gripper channel.

First-order kinematic model only: each channel slews toward its target at
a bounded speed and clamps to its range. No inertia, no backlash.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kinematics import DHChain


@dataclass(frozen=True)
class ServoModel:
    max_speed: float = 6.0      # rad/s, hobby-servo class (~0.17 s / 60 deg)
    deadband: float = 0.0       # rad
    gripper_speed: float = 4.0  # full-range units/s

    def __post_init__(self):
        if self.max_speed <= 0 or self.gripper_speed <= 0:
            raise ValueError("servo speeds must be positive")


@dataclass(frozen=True)
class RobotState:
    q: np.ndarray
    gripper: float = 0.0
    t_sim: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))


def _slew(current: float, target: float, budget: float, deadband: float) -> float:
    delta = target - current
    if abs(delta) <= deadband:
        return current
    if abs(delta) <= budget:
        return target
    return current + np.sign(delta) * budget


def tick(state: RobotState, target_q, target_gripper: float, dt: float,
         model: ServoModel, chain: DHChain) -> RobotState:
    """Advance the servos by dt toward the commanded targets."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    target_q = chain.clamp(target_q)
    budget = model.max_speed * dt
    q = np.array([_slew(c, t, budget, model.deadband)
                  for c, t in zip(state.q, target_q)])
    q = chain.clamp(q)
    g_target = float(np.clip(target_gripper, 0.0, 1.0))
    g = _slew(state.gripper, g_target, model.gripper_speed * dt, 0.0)
    g = float(np.clip(g, 0.0, 1.0))
    return RobotState(q, g, state.t_sim + dt)


class SimRobot:
    """Stateful wrapper around `tick` holding the latest commanded targets."""

    def __init__(self, chain: DHChain, model: ServoModel | None = None,
                 q0=None, gripper0: float = 0.0):
        self.chain = chain
        self.model = model or ServoModel()
        q0 = np.zeros(len(chain)) if q0 is None else chain.clamp(q0)
        self.state = RobotState(q0, gripper0, 0.0)
        self.target_q = q0.copy()
        self.target_gripper = gripper0

    def command(self, target_q, target_gripper: float | None = None):
        self.target_q = self.chain.clamp(target_q)
        if target_gripper is not None:
            self.target_gripper = float(np.clip(target_gripper, 0.0, 1.0))

    def advance(self, dt: float) -> RobotState:
        self.state = tick(self.state, self.target_q, self.target_gripper,
                          dt, self.model, self.chain)
        return self.state
