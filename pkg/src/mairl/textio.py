"""Human-readable text format for games, rewards, policies, and configs.

Sections are headed by [game], [transitions], [reward], [policy], and
[provenance]; experiment configs use a single [experiment] section of
key = value lines. Floats are written with 17 significant digits, which
round-trips IEEE doubles bit-exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ConfigError
from .experiment import ExperimentConfig
from .games import JointPolicy, JointReward, MarkovGame


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_sections(text: str):
    sections = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ConfigError(f"content before any [section] header: {raw!r}")
        sections[current].append(line)
    return sections


def _kv(lines, what: str):
    out = {}
    for line in lines:
        if "=" not in line:
            raise ConfigError(f"expected key = value in [{what}], got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# Games, rewards, policies
# ---------------------------------------------------------------------------


def write_sections(path, game: MarkovGame | None = None, reward: JointReward | None = None,
                   policy: JointPolicy | None = None, provenance: dict | None = None) -> None:
    lines = []
    if game is not None:
        lines.append("[game]")
        lines.append(f"n = {game.n_agents}")
        lines.append(f"S = {game.n_states}")
        lines.append(f"gamma = {fmt(game.gamma)}")
        lines.append("action_counts = " + " ".join(str(c) for c in game.action_counts))
        lines.append("mu = " + " ".join(fmt(v) for v in game.mu))
        lines.append("[transitions]")
        for s in range(game.n_states):
            for a in range(game.n_joint_actions):
                probs = " ".join(fmt(p) for p in game.transitions[s, a])
                lines.append(f"{s} {a} {probs}")
    if reward is not None:
        lines.append("[reward]")
        lines.append("rmax = " + " ".join(fmt(v) for v in reward.rmax))
        n, S, A = reward.tables.shape
        for i in range(n):
            for s in range(S):
                for a in range(A):
                    lines.append(f"{i} {s} {a} {fmt(reward.tables[i, s, a])}")
    if policy is not None:
        lines.append("[policy]")
        for i, table in enumerate(policy.per_agent):
            for s in range(table.shape[0]):
                probs = " ".join(fmt(p) for p in table[s])
                lines.append(f"{i} {s} {probs}")
    if provenance is not None:
        lines.append("[provenance]")
        for key, value in provenance.items():
            lines.append(f"{key} = {fmt(value) if isinstance(value, float) else value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sections(path):
    """Dict with any of the keys game/reward/policy/provenance found in the file."""
    with open(path) as fh:
        sections = _parse_sections(fh.read())
    out = {}
    if "game" in sections:
        head = _kv(sections["game"], "game")
        n = int(head["n"])
        S = int(head["S"])
        gamma = float(head["gamma"])
        action_counts = tuple(int(c) for c in head["action_counts"].split())
        if len(action_counts) != n:
            raise ConfigError("action_counts length does not match n")
        mu = np.array([float(v) for v in head["mu"].split()])
        A = int(np.prod(action_counts))
        P = np.zeros((S, A, S))
        for line in sections.get("transitions", []):
            parts = line.split()
            s, a = int(parts[0]), int(parts[1])
            P[s, a] = [float(v) for v in parts[2:]]
        out["game"] = MarkovGame(P, gamma, mu, action_counts)
    if "reward" in sections:
        lines = sections["reward"]
        rmax = np.array([float(v) for v in _kv(lines[:1], "reward")["rmax"].split()])
        entries = []
        for line in lines[1:]:
            i, s, a, v = line.split()
            entries.append((int(i), int(s), int(a), float(v)))
        n = max(e[0] for e in entries) + 1
        S = max(e[1] for e in entries) + 1
        A = max(e[2] for e in entries) + 1
        tables = np.zeros((n, S, A))
        for i, s, a, v in entries:
            tables[i, s, a] = v
        out["reward"] = JointReward(tables, rmax)
    if "policy" in sections:
        rows = {}
        for line in sections["policy"]:
            parts = line.split()
            rows.setdefault(int(parts[0]), {})[int(parts[1])] = [float(v) for v in parts[2:]]
        tables = []
        for i in sorted(rows):
            S = max(rows[i]) + 1
            tables.append(np.array([rows[i][s] for s in range(S)]))
        out["policy"] = JointPolicy(tables)
    if "provenance" in sections:
        out["provenance"] = _kv(sections["provenance"], "provenance")
    return out


# ---------------------------------------------------------------------------
# Experiment configs
# ---------------------------------------------------------------------------

_INT_KEYS = {"k_max", "family_size"}
_FLOAT_KEYS = {"epsilon", "delta", "pi_min", "gamma", "rmax"}
_TUPLE_INT_KEYS = {"seeds", "eval_points"}
_TUPLE_STR_KEYS = {"variants"}


def parse_config(path) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        sections = _parse_sections(fh.read())
    if "experiment" not in sections:
        raise ConfigError("config file must contain an [experiment] section")
    kv = _kv(sections["experiment"], "experiment")
    kwargs = {}
    try:
        for key, value in kv.items():
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _TUPLE_INT_KEYS:
                kwargs[key] = tuple(int(v) for v in value.split())
            elif key in _TUPLE_STR_KEYS:
                kwargs[key] = tuple(value.split())
            elif key in ("mode", "reward_class", "out_dir"):
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def write_config(path, config: ExperimentConfig) -> None:
    lines = ["[experiment]"]
    lines.append("seeds = " + " ".join(str(s) for s in config.seeds))
    lines.append(f"epsilon = {fmt(config.epsilon)}")
    lines.append(f"delta = {fmt(config.delta)}")
    lines.append(f"pi_min = {fmt(config.pi_min)}")
    lines.append(f"k_max = {config.k_max}")
    lines.append("variants = " + " ".join(config.variants))
    lines.append("eval_points = " + " ".join(str(k) for k in config.eval_points))
    lines.append(f"gamma = {fmt(config.gamma)}")
    lines.append(f"rmax = {fmt(config.rmax)}")
    lines.append(f"family_size = {config.family_size}")
    lines.append(f"mode = {config.mode}")
    lines.append(f"reward_class = {config.reward_class}")
    lines.append(f"out_dir = {config.out_dir}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
