"""Dense two-phase simplex for small LPs with per-variable bounds.

maximize c^T x  subject to  L x (<=,=,>=) b,  lo <= x <= hi.

Inequalities get slack variables; phase 1 drives artificial variables to
zero from an all-at-lower-bound start. Pricing is Dantzig's rule until a
run of degenerate pivots, then Bland's rule (smallest index) until the
objective moves again, which rules out cycling. Problem sizes here are a
few hundred rows and ~1000 columns, so the basis inverse is kept explicitly
and refactorized periodically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InfeasibleLPError, UnboundedLPError

LE, EQ, GE = -1, 0, 1

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2


@dataclass
class LinearProgram:
    """Dense LP data; `sense` entries are -1 (<=), 0 (=), +1 (>=)."""

    objective: np.ndarray
    lhs: np.ndarray
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64)
        self.lhs = np.asarray(self.lhs, dtype=np.float64)
        self.sense = np.asarray(self.sense, dtype=np.int64)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        m, n = self.lhs.shape if self.lhs.size else (0, self.objective.size)
        if self.objective.shape != (n,):
            raise ValueError("objective length does not match constraint columns")
        if self.sense.shape != (m,) or self.rhs.shape != (m,):
            raise ValueError("sense/rhs length does not match constraint rows")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds length does not match variable count")
        if not np.all(np.isfinite(self.lhs)) or not np.all(np.isfinite(self.objective)):
            raise ValueError("coefficients must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")


@dataclass
class LPSolution:
    x: np.ndarray
    value: float
    iterations: int
    row_duals: np.ndarray = None  # simplex multipliers of the constraint rows


class _BoundedSimplex:
    def __init__(self, A, b, lo, hi, tol, max_pivots):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.tol = tol
        self.max_pivots = max_pivots
        self.m, self.n = A.shape
        self.pivots = 0

    def start(self, basis, status, x):
        # copies: pivots mutate the basis in place and must not alias caller arrays
        self.basis = np.array(basis, dtype=np.int64)
        self.status = np.array(status, dtype=np.int64)
        self.x = np.array(x, dtype=np.float64)
        self._refactor()

    def _refactor(self):
        self.binv = np.linalg.inv(self.A[:, self.basis])
        self._since_refactor = 0

    def _basic_values(self):
        nonbasic = self.status != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        return self.binv @ rhs

    def run(self, objective):
        tol = self.tol
        bland = False
        stall = 0
        while True:
            if self.pivots > self.max_pivots:
                raise ConvergenceError("simplex exceeded its pivot budget")
            y = objective[self.basis] @ self.binv
            reduced = objective - y @ self.A
            at_lo = (self.status == _AT_LOWER) & (reduced > tol) & (self.hi > self.lo)
            at_hi = (self.status == _AT_UPPER) & (reduced < -tol) & (self.hi > self.lo)
            candidates = np.nonzero(at_lo | at_hi)[0]
            if candidates.size == 0:
                return
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(reduced[candidates]))])
            sigma = 1.0 if self.status[j] == _AT_LOWER else -1.0
            w = self.binv @ self.A[:, j]

            xb = self.x[self.basis]
            step = np.inf
            leave_pos = -1
            leave_to = _AT_LOWER
            dirn = sigma * w
            with np.errstate(divide="ignore", invalid="ignore"):
                drop = np.where(dirn > tol, (xb - self.lo[self.basis]) / dirn, np.inf)
                rise = np.where(dirn < -tol, (xb - self.hi[self.basis]) / dirn, np.inf)
            ratios = np.minimum(drop, rise)
            ratios[~np.isfinite(ratios)] = np.inf
            ratios = np.maximum(ratios, 0.0)
            if ratios.size:
                if bland:
                    best = np.min(ratios)
                    tied = np.nonzero(ratios <= best + 1e-15)[0]
                    leave_pos = int(tied[np.argmin(self.basis[tied])])
                else:
                    leave_pos = int(np.argmin(ratios))
                step = float(ratios[leave_pos])
                leave_to = _AT_LOWER if drop[leave_pos] <= rise[leave_pos] else _AT_UPPER
            own_range = self.hi[j] - self.lo[j]
            bound_switch = own_range < step
            if bound_switch:
                step = own_range
            if not np.isfinite(step):
                raise UnboundedLPError("objective is unbounded along an improving ray")

            # apply the move
            self.x[j] += sigma * step
            self.x[self.basis] = xb - step * dirn
            if bound_switch:
                self.status[j] = _AT_UPPER if sigma > 0 else _AT_LOWER
            else:
                out = self.basis[leave_pos]
                self.status[out] = leave_to
                self.x[out] = self.lo[out] if leave_to == _AT_LOWER else self.hi[out]
                self.status[j] = _BASIC
                self.basis[leave_pos] = j
                piv = w[leave_pos]
                if abs(piv) < 1e-12:
                    self._refactor()
                else:
                    self.binv[leave_pos] /= piv
                    others = np.arange(self.m) != leave_pos
                    self.binv[others] -= np.outer(w[others], self.binv[leave_pos])
                    self._since_refactor += 1
                    if self._since_refactor >= 64:
                        self._refactor()
                self.x[self.basis] = self._basic_values()

            self.pivots += 1
            if step <= tol:
                stall += 1
                if stall >= 2 * (self.m + 1):
                    bland = True
            else:
                stall = 0
                bland = False


def solve_lp(lp: LinearProgram, tol: float = 1e-9, max_pivots: int | None = None) -> LPSolution:
    """Solve a bounded LP; raises InfeasibleLPError / UnboundedLPError."""
    m = lp.lhs.shape[0] if lp.lhs.size else 0
    n = lp.objective.size
    if np.any(~np.isfinite(lp.lower) & ~np.isfinite(lp.upper)):
        raise ValueError("free variables are not supported; give each a finite bound")

    n_slack = int(np.sum(lp.sense != EQ))
    total = n + n_slack + m  # structural + slacks + artificials
    A = np.zeros((m, total))
    if m:
        A[:, :n] = lp.lhs
    lo = np.concatenate([lp.lower, np.zeros(n_slack), np.zeros(m)])
    hi = np.concatenate([lp.upper, np.full(n_slack, np.inf), np.full(m, np.inf)])
    col = n
    for i in range(m):
        if lp.sense[i] == LE:
            A[i, col] = 1.0
            col += 1
        elif lp.sense[i] == GE:
            A[i, col] = -1.0
            col += 1

    # start: every structural/slack variable at its finite bound (lower first)
    x = np.zeros(total)
    for j in range(n + n_slack):
        if np.isfinite(lo[j]):
            x[j] = lo[j]
        elif np.isfinite(hi[j]):
            x[j] = hi[j]
        else:
            x[j] = 0.0
    status = np.full(total, _AT_LOWER, dtype=np.int64)
    status[: n + n_slack][~np.isfinite(lo[: n + n_slack])] = _AT_UPPER

    residual = lp.rhs - A[:, : n + n_slack] @ x[: n + n_slack] if m else np.zeros(0)
    art = n + n_slack + np.arange(m)
    for i in range(m):
        A[i, art[i]] = 1.0 if residual[i] >= 0 else -1.0
        x[art[i]] = abs(residual[i])
    status[art] = _BASIC

    if max_pivots is None:
        max_pivots = 200 * (m + 1) + 20 * total + 2000
    core = _BoundedSimplex(A, lp.rhs, lo, hi, tol, max_pivots)
    core.start(art, status, x)

    phase1 = np.zeros(total)
    phase1[art] = -1.0
    core.run(phase1)
    if m and float(phase1 @ core.x) < -max(tol, 1e-7) * max(1.0, np.abs(lp.rhs).max()):
        raise InfeasibleLPError(
            f"phase 1 left artificial mass {-float(phase1 @ core.x):.3e}"
        )
    # freeze artificials at zero for phase 2
    core.hi[art] = 0.0
    core.x[art] = np.minimum(core.x[art], 0.0)

    phase2 = np.zeros(total)
    phase2[:n] = lp.objective
    core.run(phase2)

    x_out = core.x[:n].copy()
    duals = phase2[core.basis] @ core.binv if m else np.zeros(0)
    return LPSolution(
        x=x_out,
        value=float(lp.objective @ x_out),
        iterations=core.pivots,
        row_duals=duals,
    )
