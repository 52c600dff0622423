"""Dense strictly convex QP solver with linear inequality constraints.

Solves   min  1/2 x'Hx + f'x   s.t.  W x <= w

with a Goldfarb-Idnani style dual active-set method: start at the
unconstrained minimum, add the most violated constraint, and take mixed
primal/dual steps (dropping blocking constraints) until primal feasible.
Problems here are tiny (n <= 10), so each step re-solves a dense KKT
system instead of maintaining factorization updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-11
DUAL_TOL = 1e-12
MAX_ITER = 200


class QPError(Exception):
    pass


class QPInfeasibleError(QPError):
    """The constraint set admits no feasible point."""


class QPNotPositiveDefiniteError(QPError):
    pass


class QPIterationLimitError(QPError):
    """Iteration cap hit; signals numerical trouble, never a partial answer."""


@dataclass(frozen=True)
class QPProblem:
    H: np.ndarray
    f: np.ndarray
    W: np.ndarray = field(default=None)  # type: ignore[assignment]
    w: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        f = np.asarray(self.f, dtype=float).ravel()
        n = f.shape[0]
        if H.shape != (n, n):
            raise ValueError("H/f dimension mismatch")
        if np.max(np.abs(H - H.T)) > 1e-10:
            raise ValueError("H must be symmetric")
        W = self.W
        w = self.w
        if W is None:
            W = np.zeros((0, n))
            w = np.zeros(0)
        W = np.asarray(W, dtype=float).reshape(-1, n)
        w = np.asarray(w, dtype=float).ravel()
        if w.shape[0] != W.shape[0]:
            raise ValueError("W/w dimension mismatch")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @property
    def m(self) -> int:
        return self.w.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * x @ self.H @ x + self.f @ x


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    mu: np.ndarray          # multipliers, one per constraint row (0 if inactive)
    active_set: tuple[int, ...]
    iterations: int


def _chol_or_raise(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise QPNotPositiveDefiniteError("H is not positive definite") from exc


def _eqp(H, f, W, w, active):
    """Solve the problem with `active` treated as equalities; returns x, mu."""
    n = H.shape[0]
    k = len(active)
    if k == 0:
        return np.linalg.solve(H, -f), np.zeros(0)
    Wa = W[active]
    K = np.block([[H, Wa.T], [Wa, np.zeros((k, k))]])
    rhs = np.concatenate([-f, w[active]])
    sol = np.linalg.solve(K, rhs)
    return sol[:n], sol[n:]


class Solver:
    """Active-set QP solver with an optional warm-started active set.

    One instance per control loop (the warm-start cache is the only state);
    share across threads only with external locking.
    """

    def __init__(self):
        self._warm: tuple[int, ...] = ()

    def reset(self):
        self._warm = ()

    def solve(self, p: QPProblem) -> QPSolution:
        sol = None
        if self._warm:
            sol = self._try_warm(p)
        if sol is None:
            sol = solve(p)
        self._warm = sol.active_set
        return sol

    def _try_warm(self, p: QPProblem):
        active = [i for i in self._warm if i < p.m]
        if not active:
            return None
        try:
            x, mu_a = _eqp(p.H, p.f, p.W, p.w, active)
        except np.linalg.LinAlgError:
            return None
        if np.any(mu_a < -DUAL_TOL):
            return None
        if p.m and np.max(p.W @ x - p.w) > FEAS_TOL:
            return None
        mu = np.zeros(p.m)
        mu[active] = np.maximum(mu_a, 0.0)
        return QPSolution(x, mu, tuple(sorted(active)), 0)


def solve(p: QPProblem) -> QPSolution:
    """Cold-start dual active-set solve."""
    _chol_or_raise(p.H)
    n, m = p.n, p.m

    x = np.linalg.solve(p.H, -p.f)
    active: list[int] = []
    u: list[float] = []
    iterations = 0

    while True:
        if m == 0:
            break
        s = p.W @ x - p.w
        viol = np.array(s, copy=True)
        viol[active] = -np.inf  # already satisfied as equalities
        pidx = int(np.argmax(viol))
        if viol[pidx] <= FEAS_TOL:
            break

        # constraint p in c'x >= b form: c = -W[p], b = -w[p]
        c_p = -p.W[pidx]
        u_p = 0.0
        while True:
            iterations += 1
            if iterations > MAX_ITER:
                raise QPIterationLimitError(
                    f"no convergence within {MAX_ITER} active-set steps")
            if active:
                Wa = p.W[active]
                K = np.block([[p.H, -Wa.T],
                              [-Wa, np.zeros((len(active),) * 2)]])
                rhs = np.concatenate([c_p, np.zeros(len(active))])
                try:
                    zr = np.linalg.solve(K, rhs)
                except np.linalg.LinAlgError as exc:
                    raise QPError("singular KKT system") from exc
                z = zr[:n]
                r = zr[n:]
            else:
                z = np.linalg.solve(p.H, c_p)
                r = np.zeros(0)

            # dual blocking step
            t1 = np.inf
            kdrop = -1
            for j, rj in enumerate(r):
                if rj > DUAL_TOL and u[j] / rj < t1:
                    t1 = u[j] / rj
                    kdrop = j
            # primal full step
            zc = z @ c_p
            s_p = c_p @ x - (-p.w[pidx])
            t2 = -s_p / zc if zc > DUAL_TOL else np.inf

            t = min(t1, t2)
            if not np.isfinite(t):
                raise QPInfeasibleError(
                    f"constraint {pidx} cannot be satisfied")

            if np.isfinite(t2):
                x = x + t * z
            u = [uj - t * rj for uj, rj in zip(u, r)]
            u_p += t

            if t == t2:
                active.append(pidx)
                u.append(u_p)
                break
            # blocked dual step: drop constraint kdrop and retry
            active.pop(kdrop)
            u.pop(kdrop)

    mu = np.zeros(m)
    for idx, uj in zip(active, u):
        mu[idx] = uj
    return QPSolution(x, mu, tuple(sorted(active)), iterations)
