from mairl.cli import EXIT_CONFIG, EXIT_OK, main
from mairl.textio import read_sections


def test_bound_command(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "bound"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "theoretical bound" in out
    lines = (tmp_path / "bound.csv").read_text().splitlines()
    assert lines[0].startswith("S,n_agents,joint_actions,")
    values = lines[1].split(",")
    assert values[0] == "72"


def test_missing_config_is_exit_2(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "nope.cfg"), "bound"])
    assert code == EXIT_CONFIG


def test_bad_config_is_exit_2(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("[experiment]\nvariants = bogus\n")
    assert main(["--config", str(cfg), "bound"]) == EXIT_CONFIG


def test_evaluate_without_reward_is_exit_2(tmp_path):
    assert main(["--out-dir", str(tmp_path), "evaluate"]) == EXIT_CONFIG


def test_gen_expert_writes_bundle(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "gen-expert"])
    assert code == EXIT_OK
    bundle = read_sections(tmp_path / "expert.txt")
    assert bundle["game"].n_states == 72
    assert bundle["policy"].n_agents == 2
    assert "equilibrium gap" in capsys.readouterr().out


def test_recover_then_evaluate(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "[experiment]\n"
        "seeds = 0\n"
        "k_max = 3\n"
        "eval_points = 1\n"
        "variants = deterministic\n"
        f"out_dir = {tmp_path}\n"
    )
    assert main(["--config", str(cfg), "recover"]) == EXIT_OK
    bundle = read_sections(tmp_path / "recovered_reward.txt")
    assert "reward" in bundle and "provenance" in bundle
    assert bundle["provenance"]["mode"] == "distance-to-random"
    assert main(["--config", str(cfg), "evaluate"]) == EXIT_OK
    lines = (tmp_path / "evaluate.csv").read_text().splitlines()
    assert lines[0] == "variant,nash_gap_mairl,nash_gap_bc"
    variant, gap_mairl, gap_bc = lines[1].split(",")
    assert variant == "deterministic"
    assert float(gap_bc) <= 1e-9
