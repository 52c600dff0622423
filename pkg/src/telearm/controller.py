"""Constrained task-space kinematic controller and configuration-space mode.

Each tick the controller assembles a strictly convex QP over joint
velocities: a weighted sum of translation-tracking, rotation-tracking, and
damping costs, subject to velocity-damper joint-limit constraints, then
integrates the optimal velocity into the next joint target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import mathcore as mc
from . import qp
from .kinematics import (DHChain, Pose, fkm, rotation_jacobian,
                         translation_jacobian)
from .mathcore import Quaternion, UnitQuaternion


@dataclass(frozen=True)
class ControllerConfig:
    alpha: float = 0.999     # translation vs rotation weight, in [0, 1]
    lam: float = 0.01        # velocity damping factor, > 0
    eta: float = 4.0         # task-error proportional gain, 1/s
    T: float = 0.01          # integration step, s
    limit_gain: float = 1.0  # velocity-damper gain, 1/s

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.lam <= 0 or self.eta <= 0 or self.T <= 0 or self.limit_gain <= 0:
            raise ValueError("lam, eta, T, limit_gain must be positive")


def rotation_error(r: UnitQuaternion, r_d: UnitQuaternion) -> Quaternion:
    """Switching error over the unit-quaternion double cover.

    Returns conj(r)*r_d - 1 when that branch is shorter, conj(r)*r_d + 1
    otherwise (ties, i.e. a 180 degree error, take the + branch).
    """
    e = mc.mul(r.conj(), r_d)
    minus = e - mc.ONE
    plus = e + mc.ONE
    if minus.norm() < plus.norm():
        return minus
    return plus


def joint_limit_constraints(q, chain: DHChain, limit_gain: float = 1.0):
    """Velocity-damper box constraints W qdot <= w around the joint limits."""
    q = np.asarray(q, dtype=float)
    n = len(chain)
    W = np.vstack([-np.eye(n), np.eye(n)])
    w = limit_gain * np.concatenate([q - chain.q_min, -(q - chain.q_max)])
    return W, w


def assemble_qp(chain: DHChain, q, target: Pose,
                cfg: ControllerConfig) -> qp.QPProblem:
    """Expand the tracking costs into 1/2 u'Hu + f'u with limit constraints."""
    q = np.asarray(q, dtype=float)
    pose = fkm(chain, q)
    Jt = translation_jacobian(chain, q)
    Jr = rotation_jacobian(chain, q)
    t_err = mc.vec4(pose.t - target.t)
    r_err = mc.vec4(rotation_error(pose.r, target.r))
    # rotation tracking acts on the error task conj(r)*r_d, whose Jacobian
    # chains the conjugate map and a right Hamilton operator onto J_r;
    # both factors are orthogonal, so Nr'Nr == Jr'Jr
    C4 = np.diag([1.0, -1.0, -1.0, -1.0])
    Nr = mc.hamilton_right(target.r) @ C4 @ Jr

    a = cfg.alpha
    H = 2.0 * (a * Jt.T @ Jt + (1.0 - a) * Nr.T @ Nr
               + cfg.lam ** 2 * np.eye(len(chain)))
    H = 0.5 * (H + H.T)
    f = 2.0 * cfg.eta * (a * Jt.T @ t_err + (1.0 - a) * Nr.T @ r_err)
    W, w = joint_limit_constraints(q, chain, cfg.limit_gain)
    return qp.QPProblem(H, f, W, w)


class KinematicController:
    """Task-space controller; owns the warm-started QP solver.

    Single control loop ownership: not thread-safe by itself.
    """

    def __init__(self, chain: DHChain, cfg: ControllerConfig | None = None):
        self.chain = chain
        self.cfg = cfg or ControllerConfig()
        self.solver = qp.Solver()
        self.last_solution: qp.QPSolution | None = None

    def compute_velocity(self, q, target: Pose) -> np.ndarray:
        """Optimal joint velocity u (rad/s) toward `target` from `q`."""
        q = self.chain.clamp(q)
        problem = assemble_qp(self.chain, q, target, self.cfg)
        # qdot = 0 is always feasible inside the limits, so infeasibility
        # here is a bug and must surface, not be swallowed
        sol = self.solver.solve(problem)
        self.last_solution = sol
        return sol.x

    def integrate(self, q_d, u) -> np.ndarray:
        return integrate(q_d, u, self.cfg.T, self.chain)

    def step(self, q_d, target: Pose) -> np.ndarray:
        """One control tick: QP solve then integration, returns next q_d."""
        u = self.compute_velocity(q_d, target)
        return self.integrate(q_d, u)


def integrate(q_d, u, T: float, chain: DHChain) -> np.ndarray:
    """q_d(t+T) = q_d(t) + u*T, clamped to the chain limits."""
    q_d = np.asarray(q_d, dtype=float)
    u = np.asarray(u, dtype=float)
    return chain.clamp(q_d + u * T)


def step_configuration_mode(target, chain: DHChain) -> np.ndarray:
    """Configuration-space mode: pass the target through, clamped to limits."""
    return chain.clamp(target)


def _restart_seed(chain: DHChain, target: Pose, rng,
                  candidates: int = 32) -> np.ndarray:
    """Random in-limit configuration, best of a batch by translation error.

    Seeding a restart near the target in task space usually lands the
    descent in the right basin, where a uniform draw often does not.
    """
    best_q, best_err = None, np.inf
    for _ in range(candidates):
        q = rng.uniform(chain.q_min, chain.q_max)
        err = (fkm(chain, q).t - target.t).norm()
        if err < best_err:
            best_q, best_err = q, err
    return best_q


def reach(chain: DHChain, target: Pose, cfg: ControllerConfig | None = None,
          max_steps: int = 2000, tol: float = 1e-3, rng=None,
          stall_window: int = 100, stall_frac: float = 0.1, on_step=None):
    """Point-to-point reach with random restarts.

    The tick controller is a local method: against a distant target it can
    stall in a joint-limit local minimum (translation gradient pointing
    into an active limit). Healthy descents shrink the error by orders of
    magnitude per hundred steps, so when a window of `stall_window` steps
    improves the error by less than the fraction `stall_frac`, the joint
    target is re-seeded at a random in-limit configuration and the descent
    continues; the step budget is shared across restarts. Returns
    (q_d, steps_used, err_t).
    """
    cfg = cfg or ControllerConfig()
    rng = rng or np.random.default_rng(0)
    c = KinematicController(chain, cfg)
    q_d = np.zeros(len(chain))
    best = (np.inf, q_d)
    run_window_err = np.inf
    since_window = 0
    steps = 0
    while steps < max_steps:
        q_d = c.step(q_d, target)
        steps += 1
        if on_step is not None:
            on_step(q_d)
        err_t, _ = task_errors(chain, q_d, target)
        if err_t < best[0]:
            best = (err_t, q_d.copy())
        if err_t < tol:
            return q_d, steps, err_t
        since_window += 1
        if since_window >= stall_window:
            if run_window_err - err_t < stall_frac * run_window_err:
                q_d = _restart_seed(chain, target, rng)  # stalled
                run_window_err = np.inf
            else:
                run_window_err = err_t
            since_window = 0
    return best[1], steps, best[0]


def task_errors(chain: DHChain, q, target: Pose) -> tuple[float, float]:
    """Norms of the translation and switching rotation errors at q."""
    pose = fkm(chain, q)
    t_err = (pose.t - target.t).norm()
    r_err = rotation_error(pose.r, target.r).norm()
    return t_err, r_err


def tick_record(timestamp: float, q, q_d, u, err_t: float, err_r: float,
                active_set_size: int) -> str:
    """One structured JSON log line per control tick."""
    return json.dumps({
        "v": 1,
        "ts": timestamp,
        "q": list(np.asarray(q, dtype=float)),
        "q_d": list(np.asarray(q_d, dtype=float)),
        "u": list(np.asarray(u, dtype=float)),
        "err_t": err_t,
        "err_r": err_r,
        "active": active_set_size,
    })
