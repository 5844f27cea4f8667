"""Match-3 engine and reinforcement-learning playtesting harness."""

from .engine import Board, Direction, Joker, Move
from .levels import LevelSpec, MatchState, Objective, Status

__version__ = "0.1.0"

__all__ = ["Board", "Direction", "Joker", "LevelSpec", "MatchState", "Move", "Objective", "Status"]
