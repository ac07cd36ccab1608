import numpy as np
import pytest

from mairl.errors import ConfigError
from mairl.experiment import (
    ExperimentConfig,
    optimality_check,
    run_experiment,
    sample_reward_family,
)
from mairl.feasible import check_implicit
from mairl.synthetic import random_reward

from conftest import make_instance


def test_sample_reward_family_members_feasible():
    game, policy = make_instance(1, n_states=3, gamma=0.6)
    fam = sample_reward_family(game, policy, 1.0, 5, seed=4)
    assert len(fam) == 5
    for member in fam:
        assert member.tables.min() >= 0.0
        assert member.tables.max() <= 1.0
        assert check_implicit(game, member, policy, tol=1e-8).passed
    again = sample_reward_family(game, policy, 1.0, 5, seed=4)
    for a, b in zip(fam, again):
        assert np.array_equal(a.tables, b.tables)


def test_optimality_check_identical_families():
    game, policy = make_instance(2, n_states=2, action_counts=(2, 2), gamma=0.5)
    fam = sample_reward_family(game, policy, 1.0, 4, seed=0)
    rep = optimality_check((game, policy), (game, policy), fam, fam, epsilon=0.1)
    assert rep.passed
    assert rep.supinf_1 <= 1e-9 and rep.supinf_2 <= 1e-9
    assert rep.gap_matrix.shape == (4, 4)
    assert np.all(rep.gap_matrix >= 0.0)


def test_optimality_check_validates_inputs():
    game, policy = make_instance(3, n_states=2, action_counts=(2, 2), gamma=0.5)
    fam = sample_reward_family(game, policy, 1.0, 2, seed=0)
    with pytest.raises(ValueError):
        optimality_check((game, policy), (game, policy), [], fam, epsilon=0.5)
    bad = [random_reward(np.random.default_rng(0), game)]
    with pytest.raises(ValueError):
        optimality_check((game, policy), (game, policy), bad, fam, epsilon=0.5)


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(seeds=())
    with pytest.raises(ConfigError):
        ExperimentConfig(variants=("bogus",))
    with pytest.raises(ConfigError):
        ExperimentConfig(eval_points=(700,), k_max=500)
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="other")
    with pytest.raises(ConfigError):
        ExperimentConfig(reward_class="other")


def test_run_experiment_smoke_and_determinism(tmp_path):
    config = ExperimentConfig(
        seeds=(0, 1),
        k_max=2,
        eval_points=(1,),
        variants=("deterministic",),
        out_dir=str(tmp_path / "a"),
    )
    result = run_experiment(config)
    assert not result.errors
    assert len(result.curve_rows) == 2  # 2 seeds x 1 eval point x 1 variant
    for row in result.curve_rows:
        assert row[5] <= 1e-9  # behavior cloning is exact on the same variant
    curve_a = open(result.paths["curve"]).read()
    bound_a = open(result.paths["bound"]).read()
    assert curve_a.splitlines()[0] == (
        "seed,variant,k,samples_total,nash_gap_mairl,nash_gap_bc,epsilon_k"
    )

    config_b = ExperimentConfig(
        seeds=(0, 1),
        k_max=2,
        eval_points=(1,),
        variants=("deterministic",),
        out_dir=str(tmp_path / "b"),
    )
    result_b = run_experiment(config_b)
    assert open(result_b.paths["curve"]).read() == curve_a
    assert open(result_b.paths["bound"]).read() == bound_a

    summary = open(result.paths["summary"]).read().splitlines()
    assert summary[0].startswith("variant,k,")
    lows = [float(line.split(",")[3]) for line in summary[1:]]
    assert all(v >= 0.0 for v in lows)
