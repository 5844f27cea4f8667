"""Deterministic match-3 board mechanics.

Tiles are small integers stored in a numpy ``int8`` grid:

* ``0`` is an empty cell (padding, holes, or a transient gap mid-cascade),
* ``1..6`` are the six colors,
* ``-1`` is a blocker,
* ``7..10`` are the joker kinds in :class:`Joker`.

Every function here is pure given its inputs and the ``numpy.random.Generator``
it receives, so two calls with equally seeded generators give identical boards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, Match3Error, MoveError, UnplayableBoardError

MIN_SIDE = 3
MAX_SIDE = 9
NUM_COLORS = 6
EMPTY = 0
BLOCKER = -1
MAX_RESHUFFLES = 1000


class Joker(IntEnum):
    STRIPED_ROW = 7
    STRIPED_COL = 8
    WRAPPED = 9
    COLOR_BOMB = 10


# Smart player preference order; higher is better.
JOKER_RANK = {
    None: 0,
    Joker.STRIPED_ROW: 1,
    Joker.STRIPED_COL: 1,
    Joker.WRAPPED: 2,
    Joker.COLOR_BOMB: 3,
}


def is_color(tile: int) -> bool:
    return 1 <= tile <= NUM_COLORS


def is_joker(tile: int) -> bool:
    return tile >= Joker.STRIPED_ROW


class Direction(IntEnum):
    UP = 0
    RIGHT = 1
    DOWN = 2
    LEFT = 3

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]


_DELTAS = {
    Direction.UP: (-1, 0),
    Direction.RIGHT: (0, 1),
    Direction.DOWN: (1, 0),
    Direction.LEFT: (0, -1),
}


class Move(NamedTuple):
    row: int
    col: int
    direction: Direction

    @property
    def cell(self) -> tuple[int, int]:
        return (self.row, self.col)

    @property
    def target(self) -> tuple[int, int]:
        dr, dc = Direction(self.direction).delta
        return (self.row + dr, self.col + dc)


@dataclass(eq=False)
class Board:
    """An ``m x n`` grid of tiles plus a mask of playable cells.

    ``palette`` is the number of colors used when refilling (colors ``1..palette``).
    Boards compare equal when cells, mask and palette all match.
    """

    cells: np.ndarray
    playable: np.ndarray | None = None
    palette: int = NUM_COLORS

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=np.int8)
        if cells.ndim != 2:
            raise DimensionError(f"board must be 2-D, got shape {cells.shape}")
        m, n = cells.shape
        check_dimensions(m, n)
        if self.playable is None:
            playable = np.ones((m, n), dtype=bool)
        else:
            playable = np.array(self.playable, dtype=bool)
            if playable.shape != cells.shape:
                raise DimensionError("playable mask shape differs from cells")
        if not 1 <= self.palette <= NUM_COLORS:
            raise ValueError(f"palette must be in 1..{NUM_COLORS}, got {self.palette}")
        if cells.min() < BLOCKER or cells.max() > Joker.COLOR_BOMB:
            raise ValueError("tile code out of range")
        if np.any(cells[~playable] != EMPTY):
            raise ValueError("non-playable cells must be empty")
        self.cells = cells
        self.playable = playable

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def copy(self) -> Board:
        return Board(self.cells.copy(), self.playable.copy(), self.palette)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Board):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.palette == other.palette
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.playable, other.playable)
        )

    def __repr__(self) -> str:
        return f"Board({self.rows}x{self.cols}, palette={self.palette})\n{self.to_text()}"

    def to_text(self) -> str:
        glyph = {EMPTY: ".", BLOCKER: "B", 7: "-", 8: "|", 9: "W", 10: "*"}
        lines = []
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                t = int(self.cells[r, c])
                row.append("#" if not self.playable[r, c] else glyph.get(t, str(t)))
            lines.append("".join(row))
        return "\n".join(lines)


@dataclass(frozen=True)
class MatchGroup:
    """Cells cleared together by one alignment (or crossing alignments) of a color."""

    cells: frozenset
    orientation: str  # "horizontal", "vertical" or "cross"
    color: int
    runs: tuple = field(default=(), compare=False)  # ((orientation, cells), ...)

    @property
    def length(self) -> int:
        return len(self.cells)

    @property
    def longest_run(self) -> int:
        return max(len(cells) for _, cells in self.runs)

    def joker_kind(self) -> Joker | None:
        """Joker this group leaves behind when cleared, if any."""
        if self.longest_run >= 5:
            return Joker.COLOR_BOMB
        if self.orientation == "cross":
            return Joker.WRAPPED
        if self.longest_run == 4:
            return Joker.STRIPED_ROW if self.orientation == "horizontal" else Joker.STRIPED_COL
        return None

    def pivot(self, preferred: Sequence[tuple[int, int]] = ()) -> tuple[int, int]:
        for cell in preferred:
            if cell in self.cells:
                return cell
        if self.orientation == "cross":
            horizontal = set().union(*(set(c) for o, c in self.runs if o == "horizontal"))
            vertical = set().union(*(set(c) for o, c in self.runs if o == "vertical"))
            return min(horizontal & vertical)
        ordered = sorted(self.cells)
        return ordered[len(ordered) // 2]


@dataclass
class CascadeOutcome:
    final_board: Board
    cleared_count: int = 0
    matches_resolved: int = 0
    jokers_created: int = 0
    blockers_cleared: int = 0
    jokers_activated: int = 0
    cleared_by_color: dict = field(default_factory=lambda: {c: 0 for c in range(1, NUM_COLORS + 1)})


def check_dimensions(m: int, n: int) -> None:
    if not (MIN_SIDE <= m <= MAX_SIDE and MIN_SIDE <= n <= MAX_SIDE):
        raise DimensionError(f"board dimensions must be within {MIN_SIDE}..{MAX_SIDE}, got {m}x{n}")


def theoretical_move_count(m: int, n: int) -> int:
    """Number of directed neighbor swaps on a full ``m x n`` rectangle."""
    check_dimensions(m, n)
    return 2 * (2 * m * n - m - n)


# ---------------------------------------------------------------------------
# Moves


def is_positional(board: Board, move: Move) -> bool:
    r, c = move.cell
    tr, tc = move.target
    m, n = board.shape
    return (
        0 <= r < m
        and 0 <= c < n
        and 0 <= tr < m
        and 0 <= tc < n
        and bool(board.playable[r, c])
        and bool(board.playable[tr, tc])
    )


def _check_positional(board: Board, move: Move) -> None:
    if not is_positional(board, move):
        raise MoveError(f"move {tuple(move)} is positionally forbidden on a {board.rows}x{board.cols} board")


def enumerate_positional_swaps(board: Board) -> list[Move]:
    moves = []
    for r in range(board.rows):
        for c in range(board.cols):
            for d in Direction:
                move = Move(r, c, d)
                if is_positional(board, move):
                    moves.append(move)
    return moves


def _line_through(grid: list, m: int, n: int, r: int, c: int) -> bool:
    t = grid[r][c]
    if not 1 <= t <= NUM_COLORS:
        return False
    k = 1
    cc = c - 1
    while cc >= 0 and grid[r][cc] == t:
        k += 1
        cc -= 1
    cc = c + 1
    while cc < n and grid[r][cc] == t:
        k += 1
        cc += 1
    if k >= 3:
        return True
    k = 1
    rr = r - 1
    while rr >= 0 and grid[rr][c] == t:
        k += 1
        rr -= 1
    rr = r + 1
    while rr < m and grid[rr][c] == t:
        k += 1
        rr += 1
    return k >= 3


def _swap_is_valid(grid: list, m: int, n: int, r1: int, c1: int, r2: int, c2: int) -> bool:
    a, b = grid[r1][c1], grid[r2][c2]
    if a <= EMPTY or b <= EMPTY:  # empty or blocker
        return False
    if a >= Joker.STRIPED_ROW or b >= Joker.STRIPED_ROW:
        return True
    if a == b:
        return False
    grid[r1][c1], grid[r2][c2] = b, a
    try:
        return _line_through(grid, m, n, r1, c1) or _line_through(grid, m, n, r2, c2)
    finally:
        grid[r1][c1], grid[r2][c2] = a, b


def is_valid_move(board: Board, move: Move) -> bool:
    """True when the swap creates a match-3 or involves a joker.

    The check only inspects lines through the two swapped cells, which is
    exact for settled boards (no pre-existing matches).
    """
    _check_positional(board, move)
    grid = board.cells.tolist()
    (r1, c1), (r2, c2) = move.cell, move.target
    return _swap_is_valid(grid, board.rows, board.cols, r1, c1, r2, c2)


def valid_moves(board: Board) -> list[Move]:
    grid = board.cells.tolist()
    m, n = board.shape
    out = []
    for move in enumerate_positional_swaps(board):
        (r1, c1), (r2, c2) = move.cell, move.target
        if _swap_is_valid(grid, m, n, r1, c1, r2, c2):
            out.append(move)
    return out


def has_valid_move(board: Board) -> bool:
    grid = board.cells.tolist()
    m, n = board.shape
    for r in range(m):
        for c in range(n):
            # Right and Down cover every unordered pair once.
            if c + 1 < n and _swap_is_valid(grid, m, n, r, c, r, c + 1):
                return True
            if r + 1 < m and _swap_is_valid(grid, m, n, r, c, r + 1, c):
                return True
    return False


# ---------------------------------------------------------------------------
# Matches


def _groups_from_grid(grid: list, m: int, n: int) -> list[MatchGroup]:
    runs = []
    for r in range(m):
        c = 0
        while c < n:
            t = grid[r][c]
            e = c + 1
            while e < n and grid[r][e] == t:
                e += 1
            if 1 <= t <= NUM_COLORS and e - c >= 3:
                runs.append(("horizontal", t, tuple((r, k) for k in range(c, e))))
            c = e
    for c in range(n):
        r = 0
        while r < m:
            t = grid[r][c]
            e = r + 1
            while e < m and grid[e][c] == t:
                e += 1
            if 1 <= t <= NUM_COLORS and e - r >= 3:
                runs.append(("vertical", t, tuple((k, c) for k in range(r, e))))
            r = e
    if not runs:
        return []

    parent = list(range(len(runs)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict = {}
    for i, (_, _, cells) in enumerate(runs):
        for cell in cells:
            if cell in owner:
                parent[find(i)] = find(owner[cell])
            else:
                owner[cell] = i

    merged: dict = {}
    for i in range(len(runs)):
        merged.setdefault(find(i), []).append(runs[i])
    groups = []
    for members in merged.values():
        cells = frozenset(cell for _, _, run in members for cell in run)
        orientation = members[0][0] if len(members) == 1 else "cross"
        groups.append(
            MatchGroup(
                cells=cells,
                orientation=orientation,
                color=members[0][1],
                runs=tuple((o, run) for o, _, run in members),
            )
        )
    groups.sort(key=lambda g: min(g.cells))
    return groups


def find_matches(board: Board) -> list[MatchGroup]:
    """All maximal runs of three or more equal colors, crossing runs merged."""
    return _groups_from_grid(board.cells.tolist(), board.rows, board.cols)


# ---------------------------------------------------------------------------
# Cascades


def _most_frequent_color(cells: np.ndarray) -> int | None:
    counts = np.bincount(cells[(cells >= 1) & (cells <= NUM_COLORS)].ravel(), minlength=NUM_COLORS + 1)
    if counts[1:].sum() == 0:
        return None
    return int(np.argmax(counts[1:]) + 1)


def _joker_effect(cells: np.ndarray, playable: np.ndarray, pos: tuple[int, int], kind: int, color: int | None = None) -> set:
    m, n = cells.shape
    r, c = pos
    if kind == Joker.STRIPED_ROW:
        hit = {(r, k) for k in range(n) if playable[r, k]}
    elif kind == Joker.STRIPED_COL:
        hit = {(k, c) for k in range(m) if playable[k, c]}
    elif kind == Joker.WRAPPED:
        hit = {
            (rr, cc)
            for rr in range(max(0, r - 1), min(m, r + 2))
            for cc in range(max(0, c - 1), min(n, c + 2))
            if playable[rr, cc]
        }
    elif kind == Joker.COLOR_BOMB:
        if color is None or not is_color(color):
            color = _most_frequent_color(cells)
        hit = set() if color is None else set(map(tuple, np.argwhere(cells == color).tolist()))
    else:
        raise ValueError(f"not a joker: {kind}")
    hit.add(pos)
    return hit


def _apply_gravity(cells: np.ndarray, playable: np.ndarray, palette: int, rng: np.random.Generator) -> None:
    """Drop tiles down each column past blockers and holes, then refill from the top."""
    m, n = cells.shape
    for c in range(n):
        slots = [r for r in range(m) if playable[r, c] and cells[r, c] != BLOCKER]
        tiles = [cells[r, c] for r in slots if cells[r, c] != EMPTY]
        missing = len(slots) - len(tiles)
        if missing == 0:
            continue
        refill = rng.integers(1, palette + 1, size=missing).tolist()
        for r, t in zip(slots, refill + tiles):
            cells[r, c] = t


def _resolve(
    cells: np.ndarray,
    playable: np.ndarray,
    palette: int,
    rng: np.random.Generator,
    outcome: CascadeOutcome,
    preferred: Sequence[tuple[int, int]] = (),
    blast: set | None = None,
    activated: Iterable[tuple[int, int]] = (),
) -> None:
    m, n = cells.shape
    blast = set(blast or ())
    activated = set(activated)
    while True:
        groups = _groups_from_grid(cells.tolist(), m, n)
        if not groups and not blast:
            return
        clear = set(blast)
        creations: dict = {}
        for group in groups:
            clear |= group.cells
            kind = group.joker_kind()
            if kind is not None:
                creations[group.pivot(preferred)] = kind
        outcome.matches_resolved += len(groups)

        pending = [p for p in sorted(clear) if is_joker(cells[p]) and p not in activated]
        while pending:
            p = pending.pop(0)
            if p in activated:
                continue
            activated.add(p)
            outcome.jokers_activated += 1
            for q in sorted(_joker_effect(cells, playable, p, int(cells[p]))):
                if q not in clear:
                    clear.add(q)
                    if is_joker(cells[q]):
                        pending.append(q)

        doomed_blockers = {p for p in clear if cells[p] == BLOCKER}
        for r, c in clear:
            t = int(cells[r, c])
            if is_color(t):
                outcome.cleared_by_color[t] += 1
                outcome.cleared_count += 1
            elif is_joker(t):
                outcome.cleared_count += 1
            if t != BLOCKER:
                for dr, dc in _DELTAS.values():
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < m and 0 <= cc < n and cells[rr, cc] == BLOCKER:
                        doomed_blockers.add((rr, cc))
        outcome.blockers_cleared += len(doomed_blockers)
        for p in clear | doomed_blockers:
            cells[p] = EMPTY
        for p, kind in creations.items():
            cells[p] = kind
        outcome.jokers_created += len(creations)

        _apply_gravity(cells, playable, palette, rng)
        blast = set()
        preferred = ()
        activated = set()


def apply_move(board: Board, move: Move, rng: np.random.Generator) -> tuple[Board, CascadeOutcome, bool]:
    """Swap, then resolve clears, jokers, blockers, gravity and refills to a fixpoint.

    Invalid swaps return the input board unchanged with ``valid=False``.
    """
    _check_positional(board, move)
    if not is_valid_move(board, move):
        return board, CascadeOutcome(final_board=board), False

    cells = board.cells.copy()
    playable = board.playable
    p, q = move.cell, move.target
    a, b = int(cells[p]), int(cells[q])
    cells[p], cells[q] = b, a

    outcome = CascadeOutcome(final_board=board)
    blast: set = set()
    activated = []
    if is_joker(a) and is_joker(b):
        if a == Joker.COLOR_BOMB and b == Joker.COLOR_BOMB:
            blast = set(map(tuple, np.argwhere(playable).tolist()))
        else:
            blast = _joker_effect(cells, playable, q, a) | _joker_effect(cells, playable, p, b)
        activated = [p, q]
    elif is_joker(a):
        blast = _joker_effect(cells, playable, q, a, color=b)
        activated = [q]
    elif is_joker(b):
        blast = _joker_effect(cells, playable, p, b, color=a)
        activated = [p]
    if blast:
        # A joker activation counts as one resolved match.
        outcome.matches_resolved += 1
        outcome.jokers_activated += len(activated)

    _resolve(cells, playable, board.palette, rng, outcome, preferred=(q, p), blast=blast, activated=activated)
    outcome.final_board = Board(cells, playable.copy(), board.palette)
    return outcome.final_board, outcome, True


def preview_groups(board: Board, move: Move) -> list[MatchGroup]:
    """Match groups formed immediately by a swap, before any clearing."""
    _check_positional(board, move)
    cells = board.cells.copy()
    p, q = move.cell, move.target
    cells[p], cells[q] = cells[q], cells[p]
    return _groups_from_grid(cells.tolist(), board.rows, board.cols)


def hamming_distance(a: Board, b: Board) -> int:
    """Number of cells whose tiles differ."""
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a.cells != b.cells))


# ---------------------------------------------------------------------------
# Board construction


def ensure_playable(board: Board, rng: np.random.Generator) -> Board:
    """Return the board if it has a valid move, else a reshuffle of its colors that does.

    Only color tiles are permuted; blockers, jokers and holes stay in place.
    """
    if has_valid_move(board):
        return board
    positions = np.argwhere((board.cells >= 1) & (board.cells <= NUM_COLORS))
    if len(positions) > 0:
        colors = board.cells[positions[:, 0], positions[:, 1]].copy()
        for _ in range(MAX_RESHUFFLES):
            cells = board.cells.copy()
            cells[positions[:, 0], positions[:, 1]] = rng.permutation(colors)
            candidate = Board(cells, board.playable.copy(), board.palette)
            if not find_matches(candidate) and has_valid_move(candidate):
                return candidate
    raise UnplayableBoardError(f"no playable configuration found within {MAX_RESHUFFLES} reshuffles")


def random_board(
    rows: int,
    cols: int,
    rng: np.random.Generator,
    palette: int = NUM_COLORS,
    playable: np.ndarray | None = None,
    blockers: np.ndarray | None = None,
) -> Board:
    """A settled board: no pre-existing matches and at least one valid move.

    Colors are drawn cell by cell, re-rolling any draw that would complete a
    triple; boards without a valid move are redrawn from scratch.
    """
    check_dimensions(rows, cols)
    playable = np.ones((rows, cols), dtype=bool) if playable is None else np.asarray(playable, dtype=bool)
    blockers = np.zeros((rows, cols), dtype=bool) if blockers is None else np.asarray(blockers, dtype=bool)
    for _ in range(MAX_RESHUFFLES):
        board = Board(_draw_cells(rows, cols, rng, palette, playable, blockers), playable, palette)
        if not find_matches(board) and has_valid_move(board):
            return board
    raise UnplayableBoardError(f"no playable board found within {MAX_RESHUFFLES} draws")


def _draw_cells(rows: int, cols: int, rng: np.random.Generator, palette: int, playable: np.ndarray, blockers: np.ndarray) -> np.ndarray:
    cells = np.zeros((rows, cols), dtype=np.int8)
    cells[blockers & playable] = BLOCKER
    for r in range(rows):
        for c in range(cols):
            if not playable[r, c] or blockers[r, c]:
                continue
            banned = set()
            if c >= 2 and cells[r, c - 1] == cells[r, c - 2]:
                banned.add(int(cells[r, c - 1]))
            if r >= 2 and cells[r - 1, c] == cells[r - 2, c]:
                banned.add(int(cells[r - 1, c]))
            options = [k for k in range(1, palette + 1) if k not in banned] or list(range(1, palette + 1))
            cells[r, c] = options[int(rng.integers(len(options)))]
    return cells


def zero_pad(board: Board, size: int = MAX_SIDE) -> Board:
    """Embed the board top-left in a ``size x size`` grid of empty, non-playable cells."""
    if board.rows > size or board.cols > size:
        raise DimensionError(f"cannot pad {board.shape} into {size}x{size}")
    cells = np.zeros((size, size), dtype=np.int8)
    playable = np.zeros((size, size), dtype=bool)
    cells[: board.rows, : board.cols] = board.cells
    playable[: board.rows, : board.cols] = board.playable
    return Board(cells, playable, board.palette)


def board_from_rows(rows: Sequence[Sequence[int]], palette: int = NUM_COLORS, holes: Iterable[tuple[int, int]] = ()) -> Board:
    """Convenience constructor from nested integer rows; ``holes`` marks non-playable cells."""
    cells = np.array(rows, dtype=np.int8)
    playable = np.ones(cells.shape, dtype=bool)
    for r, c in holes:
        playable[r, c] = False
    return Board(cells, playable, palette)


__all__ = [
    "BLOCKER",
    "EMPTY",
    "JOKER_RANK",
    "MAX_SIDE",
    "NUM_COLORS",
    "Board",
    "CascadeOutcome",
    "Direction",
    "Joker",
    "Match3Error",
    "MatchGroup",
    "Move",
    "apply_move",
    "board_from_rows",
    "enumerate_positional_swaps",
    "ensure_playable",
    "find_matches",
    "hamming_distance",
    "has_valid_move",
    "is_positional",
    "is_valid_move",
    "preview_groups",
    "random_board",
    "theoretical_move_count",
    "valid_moves",
    "zero_pad",
]
