"""Exact dynamic-programming primitives on Markov games.

Values solve the linear Bellman system Q = R + gamma * P V, V = pi Q per
agent. Systems are solved by dense factorization at desk scale
(S <= EXACT_MAX_STATES and S*A <= EXACT_MAX_ENTRIES table entries) and by
value iteration above that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, StaleValuesError
from .games import JointPolicy, JointReward, MarkovGame

EXACT_MAX_STATES = 1000
EXACT_MAX_ENTRIES = 100_000


@dataclass(frozen=True)
class ValueBundle:
    """Per-agent V (n, S) and Q (n, S, A) with the achieved Bellman residual."""

    v: np.ndarray
    q: np.ndarray
    residual: float
    tol: float

    def require_fresh(self) -> None:
        if self.residual > self.tol:
            raise StaleValuesError(
                f"value bundle residual {self.residual:.3e} exceeds tolerance {self.tol:.3e}"
            )


@dataclass(frozen=True)
class Occupancy:
    """Discounted state/joint-action visitation mass; total sums to 1/(1-gamma)."""

    w: np.ndarray

    @property
    def total(self) -> float:
        return float(self.w.sum())


def _check_shapes(game: MarkovGame, reward: JointReward | None, policy: JointPolicy) -> None:
    if policy.n_states != game.n_states or policy.action_counts != game.action_counts:
        raise DimensionMismatchError(
            f"policy shape {policy.action_counts}x{policy.n_states} does not match game"
        )
    if reward is not None:
        if reward.tables.shape != (game.n_agents, game.n_states, game.n_joint_actions):
            raise DimensionMismatchError(
                f"reward shape {reward.tables.shape} does not match game"
            )


def transition_under(game: MarkovGame, policy: JointPolicy) -> np.ndarray:
    """State-to-state kernel P_pi(s'|s) = sum_a pi(a|s) P(s'|s,a)."""
    joint = policy.joint_table(game.agent_actions)
    return np.einsum("sa,sat->st", joint, game.transitions)


def policy_evaluation(
    game: MarkovGame, reward: JointReward, policy: JointPolicy, tol: float = 1e-10
) -> ValueBundle:
    """Solve (I - gamma P_pi) V^i = R^i_pi per agent; Q from one Bellman backup."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_shapes(game, reward, policy)
    S, A, n = game.n_states, game.n_joint_actions, game.n_agents
    joint = policy.joint_table(game.agent_actions)
    p_pi = np.einsum("sa,sat->st", joint, game.transitions)
    r_pi = np.einsum("sa,isa->is", joint, reward.tables)

    if S <= EXACT_MAX_STATES and S * A <= EXACT_MAX_ENTRIES:
        v = np.linalg.solve(np.eye(S) - game.gamma * p_pi, r_pi.T).T
    else:
        v = np.zeros((n, S))
        # contraction: sup-norm error <= gamma/(1-gamma) * last step size
        shrink = game.gamma / max(1.0 - game.gamma, 1e-300)
        while True:
            v_next = r_pi + game.gamma * v @ p_pi.T
            step = float(np.max(np.abs(v_next - v)))
            v = v_next
            if step * shrink <= 0.5 * tol:
                break

    q = reward.tables + game.gamma * np.einsum("sat,it->isa", game.transitions, v)
    residual = float(np.max(np.abs(v - np.einsum("sa,isa->is", joint, q))))
    return ValueBundle(v=v, q=q, residual=residual, tol=tol)


def expected_advantage_table(
    game: MarkovGame, policy: JointPolicy, values: ValueBundle, agent: int
) -> np.ndarray:
    """(S, |A_i|) table of sum_{a^{-i}} pi^{-i}(a^{-i}|s) Q^i(s, a^i a^{-i}) - V^i(s)."""
    opp = policy.opponent_table(agent, game.agent_actions)
    own = game.agent_actions[agent]
    onehot = np.equal.outer(own, np.arange(game.action_counts[agent])).astype(np.float64)
    exp_q = (opp * values.q[agent]) @ onehot
    return exp_q - values.v[agent][:, None]


def expected_advantage(
    game: MarkovGame,
    reward: JointReward,
    policy: JointPolicy,
    values: ValueBundle,
    agent: int,
    state: int,
    action: int,
) -> float:
    """Opponent-expected advantage of agent playing `action` at `state`."""
    _check_shapes(game, reward, policy)
    values.require_fresh()
    opp = policy.opponent_table(agent, game.agent_actions)[state]
    mask = game.agent_actions[agent] == action
    exp_q = float(np.dot(opp[mask], values.q[agent, state, mask]))
    return exp_q - float(values.v[agent, state])


def occupancy(game: MarkovGame, policy: JointPolicy, start=None) -> Occupancy:
    """Discounted visitation w(s,a) = sum_t gamma^t Pr_t(s) pi(a|s).

    `start` is the initial distribution: None uses game.mu, an integer is a
    deterministic start state, and an array is used as given.
    """
    _check_shapes(game, None, policy)
    S = game.n_states
    if start is None:
        mu = game.mu
    elif np.isscalar(start):
        mu = np.zeros(S)
        mu[int(start)] = 1.0
    else:
        mu = np.asarray(start, dtype=np.float64)
    p_pi = transition_under(game, policy)
    d = np.linalg.solve(np.eye(S) - game.gamma * p_pi.T, mu)
    return Occupancy(w=d[:, None] * policy.joint_table(game.agent_actions))


def simulation_decomposition(
    game_p: MarkovGame,
    game_phat: MarkovGame,
    reward: JointReward,
    reward_hat: JointReward,
    policy: JointPolicy,
    agent: int,
    tol: float = 1e-12,
):
    """Per-state value gap between two models and its occupancy expansion.

    lhs(s) = Vhat^{i,pi}(s) - V^{i,pi}(s). rhs(s) accumulates, over the
    visitation of pi in the hat model started at s, the per-pair defect
    (Rhat - R)(s,a) + gamma * sum_{s'} (Phat - P)(s'|s,a) V^{i,pi}(s')
    with V the true-model value. The two sides agree identically.
    """
    if (
        game_p.n_states != game_phat.n_states
        or game_p.action_counts != game_phat.action_counts
        or game_p.gamma != game_phat.gamma
    ):
        raise DimensionMismatchError("models must share states, actions and discount")
    v_true = policy_evaluation(game_p, reward, policy, tol=tol).v[agent]
    v_hat = policy_evaluation(game_phat, reward_hat, policy, tol=tol).v[agent]
    lhs = v_hat - v_true

    defect = (reward_hat.tables[agent] - reward.tables[agent]) + game_p.gamma * (
        (game_phat.transitions - game_p.transitions) @ v_true
    )
    joint = policy.joint_table(game_p.agent_actions)
    defect_pi = (joint * defect).sum(axis=1)
    # rhs(s0) = e_{s0}^T (I - gamma Phat_pi)^{-1} defect_pi: one solve covers all starts
    p_pi_hat = transition_under(game_phat, policy)
    rhs = np.linalg.solve(np.eye(game_p.n_states) - game_p.gamma * p_pi_hat, defect_pi)
    return lhs, rhs
