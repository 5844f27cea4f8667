"""Synthetic players: random, joker-seeking "smart", and the DQN-trained agent.

The learning agent sees the board as an 82-vector (81 zero-padded tile codes
plus the remaining-objective fraction) and scores all 324 (cell, direction)
actions of the 9x9 frame. Moves are drawn from the softmax restricted to the
valid actions, so it never wastes an attempt on an illegal swap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import engine
from .engine import JOKER_RANK, MAX_SIDE, Board, CascadeOutcome, Direction, Move
from .errors import BatchError, NoMoveError, ParameterError
from .levels import MatchState, Status, objective_scalar
from .nn import AdamState, Network, fit_step, forward

STATE_SIZE = MAX_SIDE * MAX_SIDE + 1
N_DIRECTIONS = len(Direction)
N_ACTIONS = MAX_SIDE * MAX_SIDE * N_DIRECTIONS


# ---------------------------------------------------------------------------
# Encoding


def encode_board(board: Board, objective: float = 1.0) -> np.ndarray:
    padded = engine.zero_pad(board)
    # Tile code / 6: colors land in (0, 1], blockers at -1/6, jokers at 7/6..10/6.
    codes = padded.cells.astype(np.float64).ravel() / engine.NUM_COLORS
    return np.append(codes, objective)


def encode_state(state: MatchState) -> np.ndarray:
    return encode_board(state.board, objective_scalar(state))


def action_to_move(index: int) -> Move:
    if not 0 <= index < N_ACTIONS:
        raise IndexError(f"action index {index} outside 0..{N_ACTIONS - 1}")
    cell, direction = divmod(int(index), N_DIRECTIONS)
    row, col = divmod(cell, MAX_SIDE)
    return Move(row, col, Direction(direction))


def move_to_action(move: Move) -> int:
    row, col, direction = move
    if not (0 <= row < MAX_SIDE and 0 <= col < MAX_SIDE):
        raise IndexError(f"cell {(row, col)} outside the {MAX_SIDE}x{MAX_SIDE} frame")
    return (row * MAX_SIDE + col) * N_DIRECTIONS + int(direction)


def positional_mask(board: Board) -> np.ndarray:
    """Actions whose swap stays on playable cells of ``board`` (after zero padding)."""
    mask = np.zeros(N_ACTIONS, dtype=bool)
    for move in engine.enumerate_positional_swaps(board):
        mask[move_to_action(move)] = True
    return mask


def valid_action_mask(board: Board) -> np.ndarray:
    mask = np.zeros(N_ACTIONS, dtype=bool)
    for move in engine.valid_moves(board):
        mask[move_to_action(move)] = True
    return mask


def masked_distribution(probabilities: np.ndarray, valid: Iterable[int] | np.ndarray) -> np.ndarray:
    """Zero the invalid actions and renormalize; uniform over ``valid`` if its mass underflows."""
    probs = np.asarray(probabilities, dtype=np.float64)
    valid = np.asarray(valid)
    if valid.dtype == bool:
        mask = valid
    else:
        mask = np.zeros(probs.shape[0], dtype=bool)
        mask[valid.astype(int)] = True
    if not mask.any():
        raise NoMoveError("no valid action to choose from")
    out = np.where(mask, probs, 0.0)
    total = out.sum()
    if not total > 0 or not np.isfinite(total):
        out = mask.astype(np.float64)
        total = out.sum()
    return out / total


def _sample(dist: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(dist)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    idx = min(idx, len(dist) - 1)
    while dist[idx] == 0:  # guard against landing on a zero-width bin at the top edge
        idx -= 1
    return idx


# ---------------------------------------------------------------------------
# Rewards and the Bellman update


@dataclass(frozen=True)
class RewardConfig:
    invalid_penalty: float = -1.0
    progress_required: bool = True
    gamma_min: float = 0.50
    gamma_max: float = 0.99

    def __post_init__(self) -> None:
        if not 0 <= self.gamma_min <= self.gamma_max < 1:
            raise ParameterError("need 0 <= gamma_min <= gamma_max < 1")


def compute_reward(before: MatchState, after: MatchState, outcome: CascadeOutcome, valid: bool, cfg: RewardConfig = RewardConfig()) -> float:
    """Hamming distance between boards for a move that advanced the objective, else the penalty."""
    advanced = after.progress > before.progress or not cfg.progress_required
    if valid and advanced:
        return float(engine.hamming_distance(before.board, after.board))
    return cfg.invalid_penalty


def discount_at(moves_used: int, budget: int, cfg: RewardConfig = RewardConfig()) -> float:
    """Discount factor growing linearly from gamma_min to gamma_max as the budget is spent."""
    if budget < 1 or not 0 <= moves_used <= budget:
        raise ParameterError(f"need 0 <= moves_used <= budget, got {moves_used}/{budget}")
    return cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * (moves_used / budget)


def bellman_update(q_old: float, reward: float, max_next_q: float, alpha: float, gamma: float) -> float:
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must be in (0, 1], got {alpha}")
    if not 0 <= gamma < 1:
        raise ParameterError(f"gamma must be in [0, 1), got {gamma}")
    return (1 - alpha) * q_old + alpha * (reward + gamma * max_next_q)


# ---------------------------------------------------------------------------
# Replay memory


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    gamma: float = 0.99
    done: bool = False
    next_valid: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.action < N_ACTIONS:
            raise IndexError(f"action {self.action} out of range")
        if self.state.shape != (STATE_SIZE,) or self.next_state.shape != (STATE_SIZE,):
            raise ValueError("transition states must be 82-vectors")


class ReplayMemory:
    """Bounded FIFO of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity: int = 10_000, sample_size: int = 32):
        if capacity < 1 or sample_size < 1:
            raise ParameterError("capacity and sample_size must be positive")
        self.capacity = capacity
        self.sample_size = sample_size
        self.buffer: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.buffer)

    def push(self, transition: Transition) -> None:
        self.buffer.append(transition)

    def sample(self, rng: np.random.Generator) -> list[Transition]:
        if len(self.buffer) <= self.sample_size:
            return list(self.buffer)
        picks = rng.choice(len(self.buffer), size=self.sample_size, replace=False)
        return [self.buffer[i] for i in sorted(picks)]


# ---------------------------------------------------------------------------
# Players


class Player:
    """Common interface used by the harness. Baselines ignore the learning hooks."""

    name = "player"
    reward_config = RewardConfig()

    def select_move(self, state: MatchState, mode: str, rng: np.random.Generator) -> Move:
        raise NotImplementedError

    def learn(self, before: MatchState, move: Move, after: MatchState, outcome: CascadeOutcome, valid: bool) -> float:
        return compute_reward(before, after, outcome, valid, self.reward_config)

    def end_episode(self) -> None:
        pass


def _require_moves(state: MatchState) -> list[Move]:
    moves = engine.valid_moves(state.board)
    if not moves:
        raise NoMoveError("no valid move on the board")
    return moves


def random_player_select(state: MatchState, rng: np.random.Generator) -> Move:
    moves = _require_moves(state)
    return moves[int(rng.integers(len(moves)))]


def move_joker_rank(board: Board, move: Move) -> int:
    """Rank of the best joker the swap's immediate matches would create (0 = none)."""
    return max((JOKER_RANK[g.joker_kind()] for g in engine.preview_groups(board, move)), default=0)


def smart_player_select(state: MatchState, rng: np.random.Generator) -> Move:
    moves = _require_moves(state)
    ranks = [move_joker_rank(state.board, m) for m in moves]
    best = max(ranks)
    candidates = [m for m, r in zip(moves, ranks) if r == best]
    return candidates[int(rng.integers(len(candidates)))]


class RandomPlayer(Player):
    name = "random"

    def select_move(self, state, mode, rng):
        return random_player_select(state, rng)


class SmartPlayer(Player):
    name = "smart"

    def select_move(self, state, mode, rng):
        return smart_player_select(state, rng)


@dataclass
class AgentConfig:
    k1: int = 20  # supervised-feedback optimizer steps
    k2: int = 5  # replay optimizer steps
    replay_capacity: int = 10_000
    batch_size: int = 32
    alpha_rl: float = 0.1
    lr: float = 0.001
    reward: RewardConfig = field(default_factory=RewardConfig)
    seed: int = 0


class DQNAgent(Player):
    """Main network trained online plus an oracle copy refreshed once per episode."""

    name = "jellygym"

    def __init__(self, net: Network | None = None, config: AgentConfig | None = None, opt: AdamState | None = None):
        self.config = config or AgentConfig()
        self.rng = np.random.default_rng(self.config.seed)
        self.main = net if net is not None else Network.create(rng=self.rng)
        self.oracle = self.main.copy()
        self.opt = opt if opt is not None else AdamState.for_network(self.main, lr=self.config.lr)
        self.memory = ReplayMemory(self.config.replay_capacity, self.config.batch_size)
        self.episodes_trained = 0

    @property
    def reward_config(self) -> RewardConfig:
        return self.config.reward

    def q_values(self, x: np.ndarray, oracle: bool = False) -> np.ndarray:
        return forward(self.oracle if oracle else self.main, x, "infer")[0]

    def invalid_penalty_step(self, state: MatchState) -> np.ndarray:
        """Push Q of every invalid action toward -1 and return the valid action indices."""
        mask = valid_action_mask(state.board)
        if not mask.any():
            raise NoMoveError("no valid move on the board")
        x = encode_state(state)
        target = self.q_values(x).copy()
        target[~mask] = -1.0
        fit_step(self.main, self.opt, x, target, "mse")
        return np.flatnonzero(mask)

    def supervised_feedback_step(self, x: np.ndarray, action: int, utility: float) -> None:
        if utility <= 0:
            return
        target = np.full(N_ACTIONS, -1.0)
        target[action] = utility
        for _ in range(self.config.k1):
            fit_step(self.main, self.opt, x, target, "mse")

    def ddqn_replay_step(self, batch: Sequence[Transition], losses: list | None = None) -> float:
        """Bellman targets from the oracle's best valid next action, then K2 MSE steps.

        ``losses`` (if given) collects the loss measured before each optimizer step.
        """
        if not batch:
            raise BatchError("replay batch is empty")
        states = np.stack([t.state for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        q_now = np.atleast_2d(self.q_values(states))
        q_next = np.atleast_2d(self.q_values(next_states, oracle=True))
        targets = q_now.copy()
        for i, t in enumerate(batch):
            if t.done:
                best = 0.0
            elif t.next_valid is not None and t.next_valid.any():
                best = float(q_next[i][t.next_valid].max())
            else:
                best = float(q_next[i].max())
            targets[i, t.action] = bellman_update(q_now[i, t.action], t.reward, best, self.config.alpha_rl, t.gamma)
        loss = 0.0
        for _ in range(self.config.k2):
            loss = fit_step(self.main, self.opt, states, targets, "mse")
            if losses is not None:
                losses.append(loss)
        return loss

    def select_move(self, state: MatchState, mode: str, rng: np.random.Generator) -> Move:
        if mode == "train":
            valid = self.invalid_penalty_step(state)
        else:
            valid = np.flatnonzero(valid_action_mask(state.board))
        probs = forward(self.main, encode_state(state), "infer")[1]
        dist = masked_distribution(probs, valid)
        index = _sample(dist, rng) if mode == "train" else int(np.argmax(dist))
        return action_to_move(index)

    def learn(self, before, move, after, outcome, valid) -> float:
        cfg = self.config.reward
        reward = compute_reward(before, after, outcome, valid, cfg)
        x = encode_state(before)
        action = move_to_action(move)
        self.supervised_feedback_step(x, action, reward)
        done = after.status is not Status.IN_PLAY
        self.memory.push(
            Transition(
                state=x,
                action=action,
                reward=reward,
                next_state=encode_state(after),
                gamma=discount_at(before.moves_used, before.level.move_budget, cfg),
                done=done,
                next_valid=None if done else valid_action_mask(after.board),
            )
        )
        self.ddqn_replay_step(self.memory.sample(self.rng))
        return reward

    def sync_oracle(self) -> None:
        self.oracle = self.main.copy()

    def end_episode(self) -> None:
        self.sync_oracle()
        self.episodes_trained += 1


# ---------------------------------------------------------------------------
# Supervised warm start


def build_pretraining_dataset(boards: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(encoded board, valid action) pairs from random settled 9x9 boards."""
    xs, ys = [], []
    for _ in range(boards):
        board = engine.random_board(MAX_SIDE, MAX_SIDE, rng)
        x = encode_board(board, 1.0)
        for move in engine.valid_moves(board):
            xs.append(x)
            ys.append(move_to_action(move))
    return np.array(xs).reshape(-1, STATE_SIZE), np.array(ys, dtype=int)


def valid_mass(net: Network, boards: Sequence[Board]) -> float:
    """Mean probability the network puts on valid actions."""
    masses = []
    for board in boards:
        probs = forward(net, encode_board(board, 1.0), "infer")[1]
        masses.append(float(probs[valid_action_mask(board)].sum()))
    return float(np.mean(masses))


def pretrain_supervised(
    net: Network,
    boards: int,
    rng: np.random.Generator,
    passes: int = 10,
    batch_size: int = 64,
    lr: float = 0.001,
    losses: list | None = None,
) -> Network:
    """Cross-entropy warm start on valid moves of random boards; ``losses`` collects per-pass means."""
    if boards < 1:
        raise ParameterError("boards must be >= 1")
    xs, ys = build_pretraining_dataset(boards, rng)
    opt = AdamState.for_network(net, lr=lr)
    for _ in range(passes):
        order = rng.permutation(len(ys))
        pass_losses = []
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            if len(idx) < 2:
                continue
            pass_losses.append(fit_step(net, opt, xs[idx], ys[idx], "cross_entropy"))
        if losses is not None:
            losses.append(float(np.mean(pass_losses)))
    return net
