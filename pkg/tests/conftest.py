import numpy as np
import pytest

from mairl.games import JointPolicy, deterministic_policy
from mairl.synthetic import (
    matching_pennies,
    prisoners_dilemma,
    random_joint_policy,
    random_markov_game,
)


@pytest.fixture
def pd():
    """Prisoner's dilemma at gamma = 0.5 with the (D, D) and (C, C) profiles."""
    game, reward = prisoners_dilemma(0.5)
    dd = deterministic_policy((2, 2), 1, [1, 1])
    cc = deterministic_policy((2, 2), 1, [0, 0])
    return game, reward, dd, cc


@pytest.fixture
def pennies():
    game, reward = matching_pennies(0.9)
    uniform = JointPolicy([np.full((1, 2), 0.5), np.full((1, 2), 0.5)])
    return game, reward, uniform


def make_instance(seed, n_states=3, action_counts=(2, 2), gamma=0.6, zeros=True):
    """Random game plus a policy with some exactly-zero entries (if asked)."""
    rng = np.random.default_rng(seed)
    game = random_markov_game(rng, n_states, action_counts, gamma)
    policy = random_joint_policy(rng, game)
    if zeros:
        tables = []
        for t in policy.per_agent:
            t = t.copy()
            for s in range(t.shape[0]):
                if t.shape[1] > 1 and rng.random() < 0.5:
                    drop = rng.integers(t.shape[1])
                    t[s, drop] = 0.0
                    t[s] /= t[s].sum()
            tables.append(t)
        policy = JointPolicy(tables)
    return game, policy
