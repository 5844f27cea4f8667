"""Match playout, training campaigns, player comparison and report files."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import levels as lv
from .agents import AgentConfig, DQNAgent, Player, RandomPlayer, SmartPlayer, compute_reward
from .errors import Match3Error
from .levels import LevelSpec, Status
from .nn import read_checkpoint, save_checkpoint

ATTEMPT_CAP_FACTOR = 50
REPORT_COLUMNS = ("level", "agent", "matches", "wins", "success_rate", "mean_moves", "seed")
CURVE_COLUMNS = ("episode", "won", "cumulative_success_rate", "episode_reward")


class FileError(Match3Error, OSError):
    pass


@dataclass(frozen=True)
class MatchResult:
    level_name: str
    agent_name: str
    won: bool
    valid_moves_used: int
    invalid_attempts: int
    total_reward: float
    seed: int


@dataclass(frozen=True)
class ReportRow:
    level: str
    agent: str
    matches: int
    wins: int
    mean_moves: float
    seed: int

    @property
    def success_rate(self) -> float:
        return self.wins / self.matches


@dataclass
class EvaluationReport:
    rows: list[ReportRow] = field(default_factory=list)

    def rate(self, level: str, agent: str) -> float:
        for row in self.rows:
            if row.level == level and row.agent == agent:
                return row.success_rate
        raise KeyError((level, agent))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in self.rows:
            writer.writerow([r.level, r.agent, r.matches, r.wins, f"{r.success_rate:.6f}", f"{r.mean_moves:.4f}", r.seed])
        return buf.getvalue()


@dataclass
class TrainingCurve:
    won: list[bool] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.won)

    @property
    def cumulative_success_rate(self) -> list[float]:
        wins = np.cumsum(self.won)
        return (wins / np.arange(1, len(self.won) + 1)).tolist()

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for k, rate in enumerate(self.cumulative_success_rate):
            writer.writerow((k, int(self.won[k]), f"{rate:.6f}", f"{self.rewards[k]:.6f}"))
        return buf.getvalue()


def match_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (board, player) streams; the board stream depends on the seed alone."""
    board_seq, player_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(board_seq), np.random.default_rng(player_seq)


def play_match(agent: Player, level: LevelSpec, seed: int, mode: str = "eval") -> MatchResult:
    """Play one match to a win, a loss, or the attempt cap (50x the move budget)."""
    board_rng, player_rng = match_rngs(seed)
    state = lv.init_match(level, board_rng)
    attempts = invalid = 0
    total_reward = 0.0
    cap = ATTEMPT_CAP_FACTOR * level.move_budget
    while state.status is Status.IN_PLAY and attempts < cap:
        move = agent.select_move(state, mode, player_rng)
        attempts += 1
        after, outcome, valid = lv.step(state, move, board_rng)
        if mode == "train":
            reward = agent.learn(state, move, after, outcome, valid)
        else:
            reward = compute_reward(state, after, outcome, valid, agent.reward_config)
        total_reward += reward
        invalid += not valid
        state = after
    if mode == "train":
        agent.end_episode()
    return MatchResult(
        level_name=level.name,
        agent_name=agent.name,
        won=state.status is Status.WON,
        valid_moves_used=state.moves_used,
        invalid_attempts=invalid,
        total_reward=total_reward,
        seed=seed,
    )


def evaluate(agent: Player, level: LevelSpec, matches: int, base_seed: int) -> EvaluationReport:
    if matches < 1:
        raise ValueError("matches must be >= 1")
    results = [play_match(agent, level, base_seed + i, "eval") for i in range(matches)]
    wins = sum(r.won for r in results)
    mean_moves = float(np.mean([r.valid_moves_used for r in results]))
    return EvaluationReport([ReportRow(level.name, agent.name, matches, wins, mean_moves, base_seed)])


def _write(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc}") from exc


def train(
    agent: DQNAgent,
    level: LevelSpec,
    episodes: int,
    base_seed: int,
    curve_path: str | Path | None = None,
    checkpoint_path: str | Path | None = None,
) -> TrainingCurve:
    """Sequential training episodes with seeds ``base_seed + k``; the curve file is rewritten after each."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    curve = TrainingCurve()
    for k in range(episodes):
        result = play_match(agent, level, base_seed + k, "train")
        curve.won.append(result.won)
        curve.rewards.append(result.total_reward)
        if curve_path is not None:
            _write(curve_path, curve.to_csv())
    if checkpoint_path is not None:
        meta = {"seed": agent.config.seed, "episodes_trained": agent.episodes_trained, "level": level.name}
        try:
            save_checkpoint(agent.main, checkpoint_path, agent.opt, meta)
        except OSError as exc:
            raise FileError(f"cannot write checkpoint {checkpoint_path}: {exc}") from exc
    return curve


def compare(
    levels: Sequence[LevelSpec],
    agents: Sequence[Player],
    matches: int,
    base_seed: int,
    report_path: str | Path | None = None,
) -> EvaluationReport:
    """Every agent on every level at the same seeds."""
    if not levels or not agents:
        raise ValueError("need at least one level and one agent")
    report = EvaluationReport()
    for level in levels:
        for agent in agents:
            report.rows.extend(evaluate(agent, level, matches, base_seed).rows)
    if report_path is not None:
        _write(report_path, report.to_csv())
    return report


def make_agent(name: str, model: str | Path | None = None, seed: int = 0) -> Player:
    if name == "random":
        return RandomPlayer()
    if name == "smart":
        return SmartPlayer()
    if name == "jellygym":
        if model is None:
            return DQNAgent(config=AgentConfig(seed=seed))
        net, opt, _ = read_checkpoint(model)
        return DQNAgent(net, AgentConfig(seed=seed), opt)
    raise ValueError(f"unknown agent {name!r}; choose random, smart or jellygym")
