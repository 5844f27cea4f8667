"""Level definitions, live match state and win/loss bookkeeping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import engine
from .engine import Board, CascadeOutcome, Move
from .errors import DimensionError, LevelParseError, LevelValidationError, LifecycleError

OBJECTIVE_TYPES = ("collect_matches", "collect_color", "clear_blockers")
LAYOUT_GLYPHS = {".": "playable", "#": "hole", "B": "blocker"}
MIN_PLAYABLE_CELLS = 9
BUILTIN_LEVELS = ("tier1", "tier2", "tier3", "tier4", "tier5")


@dataclass(frozen=True)
class Objective:
    kind: str
    target: int
    color: int | None = None

    def progress_from(self, outcome: CascadeOutcome) -> int:
        if self.kind == "collect_matches":
            return outcome.matches_resolved
        if self.kind == "collect_color":
            return outcome.cleared_by_color[self.color]
        return outcome.blockers_cleared


@dataclass(frozen=True)
class LevelSpec:
    name: str
    rows: int
    cols: int
    palette: int
    move_budget: int
    objective: Objective
    layout: tuple[str, ...]
    seed: int | None = None

    @property
    def playable_mask(self) -> np.ndarray:
        return np.array([[ch != "#" for ch in row] for row in self.layout], dtype=bool)

    @property
    def blocker_mask(self) -> np.ndarray:
        return np.array([[ch == "B" for ch in row] for row in self.layout], dtype=bool)

    def to_document(self) -> dict:
        objective: dict[str, Any] = {"type": self.objective.kind, "target": self.objective.target}
        if self.objective.color is not None:
            objective["color"] = self.objective.color
        doc: dict[str, Any] = {
            "name": self.name,
            "rows": self.rows,
            "cols": self.cols,
            "palette": self.palette,
            "move_budget": self.move_budget,
            "objective": objective,
            "layout": list(self.layout),
        }
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc


class Status(str, Enum):
    IN_PLAY = "in_play"
    WON = "won"
    LOST = "lost"


@dataclass
class MatchState:
    board: Board
    moves_left: int
    progress: int
    status: Status
    level: LevelSpec = field(repr=False)

    @property
    def moves_used(self) -> int:
        return self.level.move_budget - self.moves_left

    @property
    def target(self) -> int:
        return self.level.objective.target

    def copy(self) -> MatchState:
        return replace(self, board=self.board.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatchState):
            return NotImplemented
        return (
            self.board == other.board
            and self.moves_left == other.moves_left
            and self.progress == other.progress
            and self.status == other.status
            and self.level == other.level
        )


def _require(doc: Mapping, key: str, kind: type | tuple, where: str = "") -> Any:
    name = f"{where}{key}"
    if key not in doc:
        raise LevelParseError(f"missing field '{name}'")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise LevelParseError(f"field '{name}' has wrong type {type(value).__name__}")
    return value


def parse_level(document: Mapping | str) -> LevelSpec:
    """Validate a level document (a mapping or JSON text) into a :class:`LevelSpec`."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise LevelParseError(f"level document is not valid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise LevelParseError("level document must be an object")

    rows = _require(document, "rows", int)
    cols = _require(document, "cols", int)
    palette = _require(document, "palette", int)
    budget = _require(document, "move_budget", int)
    obj = _require(document, "objective", Mapping)
    name = document.get("name", "unnamed")
    if not isinstance(name, str):
        raise LevelParseError("field 'name' has wrong type")
    seed = document.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise LevelParseError("field 'seed' has wrong type")

    kind = _require(obj, "type", str, "objective.")
    if kind not in OBJECTIVE_TYPES:
        raise LevelParseError(f"field 'objective.type' must be one of {OBJECTIVE_TYPES}, got {kind!r}")
    target = _require(obj, "target", int, "objective.")
    color = None
    if kind == "collect_color":
        color = _require(obj, "color", int, "objective.")

    try:
        engine.check_dimensions(rows, cols)
    except DimensionError as exc:
        raise LevelValidationError(str(exc)) from exc
    if not 2 <= palette <= engine.NUM_COLORS:
        raise LevelValidationError(f"palette must be in 2..{engine.NUM_COLORS}, got {palette}")
    if budget < 1:
        raise LevelValidationError(f"move_budget must be >= 1, got {budget}")
    if target < 1:
        raise LevelValidationError(f"objective.target must be >= 1, got {target}")
    if color is not None and not 1 <= color <= palette:
        raise LevelValidationError(f"objective.color {color} outside palette 1..{palette}")

    if "layout" in document and document["layout"] is not None:
        layout = document["layout"]
        if not isinstance(layout, list) or not all(isinstance(r, str) for r in layout):
            raise LevelParseError("field 'layout' must be a list of strings")
        if len(layout) != rows or any(len(r) != cols for r in layout):
            raise LevelValidationError(f"layout must be {rows} rows of {cols} characters")
        bad = {ch for r in layout for ch in r if ch not in LAYOUT_GLYPHS}
        if bad:
            raise LevelParseError(f"field 'layout' has unknown glyphs {sorted(bad)}")
        layout = tuple(layout)
    else:
        layout = tuple("." * cols for _ in range(rows))

    playable = sum(ch != "#" for r in layout for ch in r)
    if playable < MIN_PLAYABLE_CELLS:
        raise LevelValidationError(f"level needs at least {MIN_PLAYABLE_CELLS} playable cells, got {playable}")

    return LevelSpec(
        name=name,
        rows=rows,
        cols=cols,
        palette=palette,
        move_budget=budget,
        objective=Objective(kind, target, color),
        layout=layout,
        seed=seed,
    )


def load_level(path_or_name: str | Path) -> LevelSpec:
    """Load a level from a JSON file, or one of the bundled ``tier1..tier5`` by name."""
    path = Path(path_or_name)
    if not path.exists() and str(path_or_name) in BUILTIN_LEVELS:
        text = resources.files("match3gym").joinpath("data").joinpath(f"{path_or_name}.json").read_text()
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise LevelParseError(f"cannot read level file {path}: {exc}") from exc
    return parse_level(text)


def builtin_levels() -> list[LevelSpec]:
    return [load_level(name) for name in BUILTIN_LEVELS]


def init_match(level: LevelSpec, rng: np.random.Generator) -> MatchState:
    board = engine.random_board(
        level.rows,
        level.cols,
        rng,
        palette=level.palette,
        playable=level.playable_mask,
        blockers=level.blocker_mask,
    )
    return MatchState(board=board, moves_left=level.move_budget, progress=0, status=Status.IN_PLAY, level=level)


def step(state: MatchState, move: Move, rng: np.random.Generator) -> tuple[MatchState, CascadeOutcome, bool]:
    """Apply one move. Invalid moves leave the state untouched and cost nothing."""
    if state.status is not Status.IN_PLAY:
        raise LifecycleError(f"cannot step a finished match (status {state.status.value})")
    board, outcome, valid = engine.apply_move(state.board, move, rng)
    if not valid:
        return state, outcome, False

    progress = state.progress + state.level.objective.progress_from(outcome)
    moves_left = state.moves_left - 1
    if progress >= state.target:
        status = Status.WON
    elif moves_left == 0:
        status = Status.LOST
    else:
        status = Status.IN_PLAY
        board = engine.ensure_playable(board, rng)
    new_state = MatchState(board=board, moves_left=moves_left, progress=progress, status=status, level=state.level)
    return new_state, outcome, True


def objective_scalar(state: MatchState) -> float:
    """Remaining fraction of the objective, in [0, 1]."""
    target = state.target
    return max(0, target - state.progress) / target
