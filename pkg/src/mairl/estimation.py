"""Generative-model estimation of a Markov game and its Nash expert.

One sampling round queries the generative model once per (state, joint
action) for a next state and once per state for a joint expert action, so
after k rounds every pair count equals k. Empirical estimates fall back to
uniform on unvisited entries. Hoeffding-style radii and the expert-support
indicator combine into a per-pair reward uncertainty whose maximum drives
the stopping rule; closed-form sample bounds mirror the same quantities.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dp import policy_evaluation
from .errors import DimensionMismatchError
from .feasible import decompose_reward, event_mask
from .games import JointPolicy, JointReward, MarkovGame
from .joint import joint_action_count

LOG_COLUMNS = (
    "k",
    "epsilon_k",
    "max_C",
    "max_transition_radius",
    "indicator_active_states",
    "wall_time_ms",
)


@dataclass(frozen=True)
class ConfidenceParams:
    """Confidence level, expert support floor, reward scale, and discount."""

    delta: float
    pi_min: float
    rmax: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.pi_min <= 1.0:
            raise ValueError("pi_min must lie in (0, 1]")
        if self.rmax < 0:
            raise ValueError("rmax must be nonnegative")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")


class CountBook:
    """Cumulative visit counts for transitions and per-agent expert actions."""

    def __init__(self, n_states: int, action_counts):
        self.n_states = int(n_states)
        self.action_counts = tuple(int(c) for c in action_counts)
        A = joint_action_count(self.action_counts)
        self.n_sas = np.zeros((n_states, A, n_states), dtype=np.int64)
        self.n_sa = np.zeros((n_states, A), dtype=np.int64)
        self.n_i_sa = [np.zeros((n_states, c), dtype=np.int64) for c in self.action_counts]
        self.n_s = np.zeros(n_states, dtype=np.int64)
        self.iteration = 0

    @property
    def n_agents(self) -> int:
        return len(self.action_counts)


@dataclass(frozen=True)
class EstimatedProblem:
    """Empirical transition and expert-policy estimates with their counts."""

    p_hat: np.ndarray
    pi_hat: JointPolicy
    counts: CountBook

    def as_game(self, gamma: float, mu) -> MarkovGame:
        return MarkovGame(self.p_hat, gamma, mu, self.counts.action_counts)


@dataclass(frozen=True)
class UncertaintyTable:
    """Per-pair reward uncertainty and the accuracy epsilon_k it induces."""

    c: np.ndarray  # (S, A)
    epsilon_k: float
    indicator: np.ndarray  # (S,) 0/1 expert-support indicator per state
    max_transition_radius: float


class GenerativeOracle:
    """Generative model backed by a known game and expert policy.

    Draws are deterministic functions of (seed, round, state, query index):
    each (state, round) pair owns one counter-based stream, which first
    answers the state's transition queries in flat joint-action order and
    then the per-agent expert-action queries.
    """

    def __init__(self, game: MarkovGame, expert: JointPolicy, seed: int = 0):
        if expert.n_states != game.n_states or expert.action_counts != game.action_counts:
            raise DimensionMismatchError("expert policy does not match the game")
        self.game = game
        self.expert = expert
        self.seed = int(seed)

    def _stream(self, k: int, state: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(k, state)))
        )

    def round_samples(self, k: int):
        """All queries of round k: (S, A) next states and (S, n) expert actions."""
        game = self.game
        S, A = game.n_states, game.n_joint_actions
        next_states = np.empty((S, A), dtype=np.int64)
        expert_actions = np.empty((S, game.n_agents), dtype=np.int64)
        for s in range(S):
            rng = self._stream(k, s)
            u = rng.random(A)
            cum = np.cumsum(game.transitions[s], axis=1)
            next_states[s] = np.argmax(u[:, None] < cum, axis=1)
            for i in range(game.n_agents):
                expert_actions[s, i] = rng.choice(
                    game.action_counts[i], p=self.expert.per_agent[i][s]
                )
        return next_states, expert_actions


def sample_round(oracle: GenerativeOracle, counts: CountBook) -> CountBook:
    """One uniform round: every (s,a) sampled once, every agent observed once per state."""
    k = counts.iteration + 1
    next_states, expert_actions = oracle.round_samples(k)
    S, A = counts.n_states, next_states.shape[1]
    flat = np.ravel_multi_index(
        (np.repeat(np.arange(S), A), np.tile(np.arange(A), S), next_states.ravel()),
        counts.n_sas.shape,
    )
    np.add.at(counts.n_sas.reshape(-1), flat, 1)
    counts.n_sa += 1
    for i in range(counts.n_agents):
        np.add.at(counts.n_i_sa[i], (np.arange(S), expert_actions[:, i]), 1)
    counts.n_s += 1
    counts.iteration = k
    return counts


def estimate(counts: CountBook) -> EstimatedProblem:
    """Maximum-likelihood estimates with uniform fallback on unvisited entries."""
    S = counts.n_states
    denom = counts.n_sa[:, :, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        p_hat = np.where(denom > 0, counts.n_sas / np.maximum(denom, 1), 1.0 / S)
    tables = []
    n_s = counts.n_s[:, None]
    for i, c in enumerate(counts.action_counts):
        tables.append(np.where(n_s > 0, counts.n_i_sa[i] / np.maximum(n_s, 1), 1.0 / c))
    return EstimatedProblem(p_hat=p_hat, pi_hat=JointPolicy(tables), counts=counts)


def xi_threshold(n_s, params: ConfidenceParams, n_states: int, action_counts, n_agents: int):
    """Support-detection threshold log(2 S prodA (n-1) N^2 / (delta/2)) / log(1/(1-pi_min)).

    Returns 0 for pure experts (pi_min = 1) and at N = 0. Accepts a scalar or
    an array of counts.
    """
    scalar = np.ndim(n_s) == 0
    N = np.atleast_1d(np.asarray(n_s, dtype=np.float64))
    if params.pi_min >= 1.0:
        out = np.zeros_like(N)
    else:
        A = joint_action_count(action_counts)
        denom = math.log(1.0 / (1.0 - params.pi_min))
        arg = 2.0 * n_states * A * max(n_agents - 1, 1) * np.square(N) / (params.delta / 2.0)
        out = np.where(N > 0, np.log(np.maximum(arg, 1e-300)) / denom, 0.0)
    return float(out[0]) if scalar else out


def transition_radius(n_sa, params: ConfidenceParams, n_states: int, action_counts):
    """(rmax/(1-gamma)) sqrt(2 l_k / N+) with l_k = log(12 S prodA (N+)^2 / delta)."""
    scalar = np.ndim(n_sa) == 0
    A = joint_action_count(action_counts)
    n_plus = np.maximum(np.atleast_1d(np.asarray(n_sa, dtype=np.float64)), 1.0)
    l_k = np.log(12.0 * n_states * A * np.square(n_plus) / params.delta)
    out = (params.rmax / (1.0 - params.gamma)) * np.sqrt(2.0 * l_k / n_plus)
    return float(out[0]) if scalar else out


def _indicator(n_s, params: ConfidenceParams, n_states: int, action_counts, n_agents: int):
    """1 where the expert-support estimate is still uncertain.

    Uncertain iff N(s) <= max(1, xi(N(s))); a pure expert clears after a
    single observation (N >= 1), since one sample reveals each deterministic
    action exactly.
    """
    N = np.asarray(n_s, dtype=np.float64)
    if params.pi_min >= 1.0:
        return (N < 1.0).astype(np.float64)
    xi = xi_threshold(N, params, n_states, action_counts, n_agents)
    return (N <= np.maximum(1.0, xi)).astype(np.float64)


def uncertainty(counts: CountBook, params: ConfidenceParams) -> UncertaintyTable:
    """Per-pair reward uncertainty C_k and the accuracy epsilon_k = max C_k / (1-gamma)."""
    S, A = counts.n_states, joint_action_count(counts.action_counts)
    ind = _indicator(counts.n_s, params, S, counts.action_counts, counts.n_agents)
    radius = transition_radius(counts.n_sa, params, S, counts.action_counts)
    scale = params.rmax / (1.0 - params.gamma)
    c = scale * ind[:, None] + params.gamma * radius
    eps = float(c.max() / (1.0 - params.gamma)) if c.size else 0.0
    return UncertaintyTable(
        c=c,
        epsilon_k=eps,
        indicator=ind,
        max_transition_radius=float(radius.max()) if radius.size else 0.0,
    )


@dataclass
class UniformSamplingResult:
    problem: EstimatedProblem
    uncertainty: UncertaintyTable
    tau: int
    converged: bool
    history: list = field(default_factory=list)  # rows matching LOG_COLUMNS


def uniform_sampling(
    oracle: GenerativeOracle,
    params: ConfidenceParams,
    epsilon_target: float,
    k_max: int,
    log_path=None,
) -> UniformSamplingResult:
    """Sample one round per (s,a) until epsilon_k <= epsilon_target / 2.

    Returns the first k meeting the rule as tau; if the budget k_max runs out
    first, converged is False and the partial estimates are returned.
    """
    if not epsilon_target > 0:
        raise ValueError("epsilon_target must be positive")
    game = oracle.game
    counts = CountBook(game.n_states, game.action_counts)
    history = []
    problem = estimate(counts)
    unc = uncertainty(counts, params)
    converged = False
    start = time.perf_counter()
    for k in range(1, int(k_max) + 1):
        sample_round(oracle, counts)
        problem = estimate(counts)
        unc = uncertainty(counts, params)
        history.append(
            (
                k,
                unc.epsilon_k,
                float(unc.c.max()),
                unc.max_transition_radius,
                int(unc.indicator.sum()),
                (time.perf_counter() - start) * 1000.0,
            )
        )
        if unc.epsilon_k <= epsilon_target / 2.0:
            converged = True
            break
    if log_path is not None:
        _write_log(log_path, history)
    return UniformSamplingResult(
        problem=problem,
        uncertainty=unc,
        tau=counts.iteration,
        converged=converged,
        history=history,
    )


def _write_log(path, history) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(LOG_COLUMNS) + "\n")
        for row in history:
            fh.write(
                f"{row[0]},{row[1]:.17g},{row[2]:.17g},{row[3]:.17g},{row[4]},{row[5]:.17g}\n"
            )


def stopping_time(
    params: ConfidenceParams,
    n_states: int,
    action_counts,
    n_agents: int,
    epsilon: float,
    k_max: int = 100_000_000,
):
    """Deterministic stopping round of the uniform schedule.

    One round gives every pair one sample, so N_k(s,a) = N_k(s) = k everywhere
    and C_k is a function of k alone; the stopping round needs no simulation.
    Returns None if the rule is not met within k_max.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    target = epsilon / 2.0
    chunk = 65536
    lo = 1
    while lo <= k_max:
        hi = min(lo + chunk - 1, k_max)
        ks = np.arange(lo, hi + 1, dtype=np.float64)
        ind = _indicator(ks, params, n_states, action_counts, n_agents)
        radius = transition_radius(ks, params, n_states, action_counts)
        scale = params.rmax / (1.0 - params.gamma)
        eps_k = (scale * ind + params.gamma * radius) / (1.0 - params.gamma)
        hit = np.nonzero(eps_k <= target)[0]
        if hit.size:
            return int(ks[hit[0]])
        lo = hi + 1
        chunk = min(chunk * 4, 1 << 24)
    return None


@dataclass(frozen=True)
class SampleBound:
    total: float
    transition_term: float
    policy_term: float


def theoretical_sample_bound(
    params: ConfidenceParams,
    n_states: int,
    action_counts,
    n_agents: int,
    epsilon: float,
) -> SampleBound:
    """Closed-form proof-constant sample bound for the uniform schedule.

    transition term: 128 S prodA gamma^2 rmax^2 / ((1-gamma)^4 eps^2) times its
    logarithmic factor; policy term: nS plus the support-detection surcharge.
    The total takes the max of the two, matching the bound's max structure.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    S, A, n = n_states, joint_action_count(action_counts), n_agents
    g, R, d = params.gamma, params.rmax, params.delta
    lead = 128.0 * S * A * g * g * R * R / ((1.0 - g) ** 4 * epsilon * epsilon)
    if lead > 0:
        log_arg = (64.0 * g * g * R * R / ((1.0 - g) ** 4 * epsilon * epsilon)) * math.sqrt(
            12.0 * S * A / d
        )
        transition = max(0.0, lead * math.log(log_arg))
    else:
        transition = 0.0
    if params.pi_min >= 1.0:
        policy = float(n * S)
    else:
        L = math.log(1.0 / (1.0 - params.pi_min))
        c = math.log(2.0 * S * A * max(n - 1, 1) / d)
        policy = n * S + (n * S / L) * (c + 2.0 * (c + 2.0) / L)
    return SampleBound(
        total=float(max(transition, policy)),
        transition_term=float(transition),
        policy_term=float(policy),
    )


def policy_estimation_threshold(n_agents: int, delta: float, pi_min: float) -> int:
    """Smallest integer N with (n-1)(1-pi_min)^N <= delta.

    Callers that need at least one observation should clamp the result to 1;
    the raw threshold is 0 when delta >= n-1 or pi_min = 1.
    """
    if n_agents < 2:
        raise ValueError("need at least two agents")
    if not 0.0 < delta:
        raise ValueError("delta must be positive")
    if pi_min >= 1.0:
        return 0
    value = (math.log(1.0 / delta) + math.log(n_agents - 1)) / math.log(1.0 / (1.0 - pi_min))
    return max(0, math.ceil(value - 1e-12))


def good_event_inequalities(
    game: MarkovGame,
    reward: JointReward,
    expert: JointPolicy,
    problem: EstimatedProblem,
    params: ConfidenceParams,
):
    """Evaluate the four concentration inequalities for the current estimates.

    Returns four booleans: the support-mask bound with the true penalties, the
    same with the estimated problem's penalties, and the transition bound with
    the true and with the estimated values. The true reward must be feasible
    for (game, expert).
    """
    scale = params.rmax / (1.0 - params.gamma)
    counts = problem.counts
    ind = _indicator(counts.n_s, params, game.n_states, game.action_counts, game.n_agents)
    radius = transition_radius(counts.n_sa, params, game.n_states, game.action_counts)

    e_true = event_mask(expert, game.agent_actions).mask.astype(np.float64)
    e_hat = event_mask(problem.pi_hat, game.agent_actions).mask.astype(np.float64)
    mask_diff = np.abs(e_true - e_hat)

    params_true = decompose_reward(game, expert, reward)
    game_hat = problem.as_game(game.gamma, game.mu)
    values_hat = policy_evaluation(game_hat, reward, problem.pi_hat)
    a_hat = np.maximum(values_hat.v[:, :, None] - values_hat.q, 0.0)

    ok1 = bool(np.all(mask_diff * params_true.a_fn <= scale * ind[None, :, None] + 1e-12))
    ok2 = bool(np.all(mask_diff * a_hat <= scale * ind[None, :, None] + 1e-12))

    dp_abs = np.abs(game.transitions - problem.p_hat)  # (S, A, S)
    lhs_true = np.einsum("sat,it->isa", dp_abs, np.abs(params_true.v_fn))
    lhs_hat = np.einsum("sat,it->isa", dp_abs, np.abs(values_hat.v))
    ok3 = bool(np.all(lhs_true <= radius[None, :, :] + 1e-12))
    ok4 = bool(np.all(lhs_hat <= radius[None, :, :] + 1e-12))
    return ok1, ok2, ok3, ok4
