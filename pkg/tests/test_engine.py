import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from match3gym import engine
from match3gym.engine import BLOCKER, EMPTY, Board, Direction, Joker, Move, board_from_rows
from match3gym.errors import DimensionError, MoveError, UnplayableBoardError

import oracles

sides = st.integers(min_value=3, max_value=9)


def full(m, n):
    return Board(np.ones((m, n), dtype=np.int8))


def settled(seed, m=9, n=9):
    return engine.random_board(m, n, np.random.default_rng(seed))


# --- move counting -----------------------------------------------------------


@pytest.mark.parametrize(
    "m, n, expected",
    [
        (9, 9, 288),  # 4n(n-1) for n = 9
        (3, 3, 24),
        (3, 9, 84),
    ],
)
def test_theoretical_move_count(m, n, expected):
    assert len(oracles.directed_swaps(m, n)) == expected
    assert engine.theoretical_move_count(m, n) == expected


@pytest.mark.parametrize("m, n", [(2, 5), (10, 3), (3, 0)])
def test_theoretical_move_count_rejects_dimensions(m, n):
    with pytest.raises(DimensionError):
        engine.theoretical_move_count(m, n)


@given(sides, sides)
def test_positional_swaps_match_theorem(m, n):
    count = len(engine.enumerate_positional_swaps(full(m, n)))
    assert count == engine.theoretical_move_count(m, n) == 2 * (2 * m * n - m - n)
    assert count % 2 == 0
    n_corner, n_edge, n_inner = 4, 2 * (n - 2) + 2 * (m - 2), (n - 2) * (m - 2)
    assert count == 4 * n_inner + 3 * n_edge + 2 * n_corner


def test_corner_cell_has_two_swaps():
    moves = [mv for mv in engine.enumerate_positional_swaps(full(9, 9)) if mv.cell == (0, 0)]
    assert sorted(mv.direction for mv in moves) == [Direction.RIGHT, Direction.DOWN]


def test_three_by_three_breakdown():
    moves = engine.enumerate_positional_swaps(full(3, 3))
    assert len(moves) == 24
    per_cell = {}
    for mv in moves:
        per_cell[mv.cell] = per_cell.get(mv.cell, 0) + 1
    corners = sum(per_cell[c] for c in [(0, 0), (0, 2), (2, 0), (2, 2)])
    edges = sum(per_cell[c] for c in [(0, 1), (1, 0), (1, 2), (2, 1)])
    assert (corners, edges, per_cell[(1, 1)]) == (8, 12, 4)


def test_holes_remove_swaps():
    board = board_from_rows([[1, 2, 3], [4, 0, 5], [6, 1, 2]], holes=[(1, 1)])
    moves = engine.enumerate_positional_swaps(board)
    assert all((1, 1) not in (mv.cell, mv.target) for mv in moves)
    assert len(moves) == 24 - 8


# --- matches -----------------------------------------------------------------


def test_find_matches_single_row_triple():
    board = board_from_rows([[1, 1, 1, 2], [2, 3, 4, 5], [3, 4, 5, 6]])
    groups = engine.find_matches(board)
    assert len(groups) == 1
    assert groups[0].orientation == "horizontal"
    assert groups[0].length == 3
    assert groups[0].color == 1


def test_find_matches_empty_when_no_alignment():
    board = board_from_rows([[1, 2, 1], [2, 1, 2], [1, 2, 1]])
    assert engine.find_matches(board) == []


def test_find_matches_l_shape_is_one_cross_group():
    grid = np.array([[2, 1, 3], [2, 3, 1], [2, 2, 2]])
    expected = oracles.match_cells(grid)
    assert len(expected) == 1 and len(expected[0]) == 5
    groups = engine.find_matches(Board(grid))
    assert len(groups) == 1
    assert groups[0].orientation == "cross"
    assert groups[0].cells == expected[0]
    assert groups[0].joker_kind() is Joker.WRAPPED


def test_blockers_jokers_and_empty_never_match():
    board = board_from_rows([[BLOCKER, BLOCKER, BLOCKER], [7, 7, 7], [1, 2, 3]])
    assert engine.find_matches(board) == []
    padded = engine.zero_pad(board_from_rows([[1, 2, 3], [2, 3, 1], [3, 1, 2]]))
    assert engine.find_matches(padded) == []


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_find_matches_agrees_with_brute_force(seed):
    grid = np.random.default_rng(seed).integers(1, 4, size=(6, 7))
    assert [g.cells for g in engine.find_matches(Board(grid))] == oracles.match_cells(grid)


@pytest.mark.parametrize(
    "row, kind",
    [
        ([1, 1, 1, 1, 2, 3], Joker.STRIPED_ROW),
        ([1, 1, 1, 1, 1, 3], Joker.COLOR_BOMB),
        ([1, 1, 1, 2, 3, 4], None),
    ],
)
def test_joker_kind_for_straight_lines(row, kind):
    board = board_from_rows([row, [2, 3, 4, 5, 6, 2], [3, 4, 5, 6, 2, 4]])
    (group,) = engine.find_matches(board)
    assert group.joker_kind() == kind


def test_vertical_four_makes_column_striped():
    board = board_from_rows([[1, 2, 3], [1, 3, 2], [1, 2, 3], [1, 3, 2]])
    (group,) = engine.find_matches(board)
    assert group.joker_kind() is Joker.STRIPED_COL


def test_cross_beats_four_line():
    # 4-long horizontal crossing a vertical triple: wrapped wins over striped.
    grid = [[5, 1, 4, 6], [1, 1, 1, 1], [2, 1, 3, 4]]
    (group,) = engine.find_matches(board_from_rows(grid))
    assert group.orientation == "cross"
    assert group.joker_kind() is Joker.WRAPPED


# --- validity ----------------------------------------------------------------


def test_valid_move_creating_triple():
    board = board_from_rows([[1, 1, 2], [3, 4, 1], [2, 3, 4]])
    assert engine.is_valid_move(board, Move(0, 2, Direction.DOWN))


def test_swapping_identical_colors_is_invalid():
    board = board_from_rows([[1, 1, 2], [3, 4, 5], [2, 3, 4]])
    assert not engine.is_valid_move(board, Move(0, 0, Direction.RIGHT))


def test_blocker_and_empty_swaps_are_invalid():
    board = board_from_rows([[1, 1, BLOCKER], [3, 4, 1], [2, 3, 1]])
    assert not engine.is_valid_move(board, Move(0, 2, Direction.DOWN))
    assert not engine.is_valid_move(board, Move(0, 1, Direction.RIGHT))


def test_joker_swap_is_always_valid():
    board = board_from_rows([[Joker.WRAPPED, 2, 3], [4, 5, 6], [2, 3, 4]])
    assert engine.is_valid_move(board, Move(0, 0, Direction.RIGHT))
    assert engine.is_valid_move(board, Move(0, 0, Direction.DOWN))


def test_off_board_move_raises():
    with pytest.raises(MoveError):
        engine.is_valid_move(full(3, 3), Move(0, 0, Direction.UP))
    with pytest.raises(MoveError):
        engine.apply_move(full(3, 3), Move(2, 2, Direction.RIGHT), np.random.default_rng(0))


@pytest.mark.parametrize("seed", range(8))
def test_valid_moves_equal_brute_force_scan(seed):
    board = settled(seed)
    ours = {(*mv.cell, *mv.target) for mv in engine.enumerate_positional_swaps(board) if engine.is_valid_move(board, mv)}
    assert ours == oracles.valid_swaps(board.cells)
    assert {(*mv.cell, *mv.target) for mv in engine.valid_moves(board)} == ours


# --- apply_move --------------------------------------------------------------


def test_invalid_swap_restores_configuration():
    board = settled(3)
    invalid = next(mv for mv in engine.enumerate_positional_swaps(board) if not engine.is_valid_move(board, mv))
    after, outcome, valid = engine.apply_move(board, invalid, np.random.default_rng(0))
    assert not valid
    assert after == board
    assert outcome.cleared_count == 0


def test_single_triple_no_cascade():
    board = board_from_rows([[2, 3, 1, 4, 5], [1, 1, 4, 5, 6], [3, 4, 5, 6, 2]])
    rng = oracles.ScriptedRng([5, 6, 1])
    after, outcome, valid = engine.apply_move(board, Move(0, 2, Direction.DOWN), rng)
    assert valid
    assert (outcome.cleared_count, outcome.matches_resolved, outcome.jokers_created) == (3, 1, 0)
    assert outcome.cleared_by_color[1] == 3
    np.testing.assert_array_equal(after.cells, [[5, 6, 1, 4, 5], [2, 3, 4, 5, 6], [3, 4, 5, 6, 2]])


def test_refill_triggers_second_match():
    # Swap clears row 1's triple; the scripted refill 6,6,6 lands on row 0 next
    # to nothing else equal, forming a second triple; the next refill 1,2,3 settles.
    board = board_from_rows([[2, 3, 1, 4, 5], [1, 1, 4, 5, 6], [3, 4, 5, 6, 2]])
    rng = oracles.ScriptedRng([6, 6, 6, 1, 2, 3])
    after, outcome, valid = engine.apply_move(board, Move(0, 2, Direction.DOWN), rng)
    assert valid
    assert outcome.matches_resolved == 2
    assert outcome.cleared_count == 6
    np.testing.assert_array_equal(after.cells, [[1, 2, 3, 4, 5], [2, 3, 4, 5, 6], [3, 4, 5, 6, 2]])
    assert rng.values == []


def test_four_line_leaves_striped_at_swapped_cell():
    board = board_from_rows([[1, 1, 2, 1, 3], [4, 5, 1, 6, 4], [5, 6, 4, 5, 6]])
    move = Move(1, 2, Direction.UP)
    rng = oracles.ScriptedRng([2, 3, 4, 5])
    after, outcome, _ = engine.apply_move(board, move, rng)
    assert outcome.jokers_created == 1
    # Row 0 cleared except the joker, which stays at the swap target (0, 2).
    assert after.cells[0, 2] == Joker.STRIPED_ROW


def test_striped_joker_clears_its_row_and_hits_blockers():
    board = board_from_rows(
        [
            [1, 2, 3, 4],
            [Joker.STRIPED_ROW, BLOCKER, 6, 1],
            [2, 5, 4, 5],
        ]
    )
    rng = np.random.default_rng(0)
    after, outcome, valid = engine.apply_move(board, Move(1, 0, Direction.UP), rng)
    assert valid
    assert outcome.jokers_activated == 1
    assert outcome.blockers_cleared == 1
    assert not (after.cells == BLOCKER).any()
    assert engine.find_matches(after) == []


def test_color_bomb_clears_partner_color():
    grid = [[Joker.COLOR_BOMB, 3, 2, 3], [2, 4, 3, 5], [4, 3, 5, 2]]
    board = board_from_rows(grid)
    rng = np.random.default_rng(1)
    _, outcome, valid = engine.apply_move(board, Move(0, 0, Direction.RIGHT), rng)
    assert valid
    assert outcome.cleared_by_color[3] >= 4  # every 3 on the board plus cascades


def test_blocker_next_to_clear_is_destroyed():
    board = board_from_rows([[2, 3, 1, 4, 5], [1, 1, 4, 5, 6], [BLOCKER, 4, 5, 6, 2]])
    after, outcome, valid = engine.apply_move(board, Move(0, 2, Direction.DOWN), np.random.default_rng(5))
    assert valid
    assert outcome.blockers_cleared == 1
    assert not (after.cells == BLOCKER).any()


def test_blockers_stay_put_under_gravity():
    # Column 2 loses its top tile; the blocker at the bottom is nowhere near the clear.
    board = board_from_rows([[2, 3, 1, 4, 5], [1, 1, 4, 5, 6], [3, 4, 5, 6, 2], [4, 5, BLOCKER, 2, 3]])
    after, outcome, valid = engine.apply_move(board, Move(0, 2, Direction.DOWN), np.random.default_rng(0))
    assert valid
    assert outcome.blockers_cleared == 0
    assert after.cells[3, 2] == BLOCKER


def test_tiles_fall_past_blockers():
    cells = np.array([[1, 2], [BLOCKER, 3], [EMPTY, 4]], dtype=np.int8)
    engine._apply_gravity(cells, np.ones((3, 2), dtype=bool), 6, oracles.ScriptedRng([5]))
    np.testing.assert_array_equal(cells, [[5, 2], [BLOCKER, 3], [1, 4]])


def test_holes_never_receive_tiles():
    board = board_from_rows([[2, 3, 1, 4, 5], [1, 1, 4, 5, 6], [3, 4, 5, 6, 0]], holes=[(2, 4)])
    after, _, valid = engine.apply_move(board, Move(0, 2, Direction.DOWN), np.random.default_rng(2))
    assert valid
    assert after.cells[2, 4] == EMPTY and not after.playable[2, 4]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_valid_moves_leave_settled_boards(seed):
    rng = np.random.default_rng(seed)
    board = engine.random_board(9, 9, rng)
    for move in engine.valid_moves(board)[:5]:
        after, outcome, valid = engine.apply_move(board, move, rng)
        assert valid and outcome.matches_resolved >= 1
        assert engine.find_matches(after) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invalid_moves_are_identity(seed):
    rng = np.random.default_rng(seed)
    board = engine.random_board(7, 8, rng)
    for move in engine.enumerate_positional_swaps(board):
        if not engine.is_valid_move(board, move):
            after, _, valid = engine.apply_move(board, move, rng)
            assert not valid and after == board


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_gravity_conserves_surviving_tiles(seed):
    rng = np.random.default_rng(seed)
    cells = rng.integers(1, 7, size=(6, 5)).astype(np.int8)
    cells[rng.random((6, 5)) < 0.3] = EMPTY
    playable = np.ones_like(cells, dtype=bool)
    before = cells.copy()
    engine._apply_gravity(cells, playable, 6, np.random.default_rng(0))
    for c in range(5):
        survivors = [t for t in before[:, c] if t != EMPTY]
        k = len(survivors)
        # Survivors keep their order and sit at the bottom of the column.
        assert list(cells[6 - k :, c]) == survivors
    assert not (cells == EMPTY).any()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_apply_move_is_deterministic(seed):
    board = settled(seed % 1000)
    move = engine.valid_moves(board)[0]
    a = engine.apply_move(board, move, np.random.default_rng(seed))
    b = engine.apply_move(board, move, np.random.default_rng(seed))
    assert a[0] == b[0] and a[1].cleared_count == b[1].cleared_count


# --- hamming -----------------------------------------------------------------


def test_hamming_identity_and_bound():
    board = settled(0)
    assert engine.hamming_distance(board, board) == 0
    other = Board(np.where(board.cells == 6, 1, board.cells + 1))
    assert engine.hamming_distance(board, other) == 81


def test_hamming_after_single_triple():
    board = board_from_rows([[2, 3, 1, 4, 5], [1, 1, 4, 5, 6], [3, 4, 5, 6, 2]])
    after, _, _ = engine.apply_move(board, Move(0, 2, Direction.DOWN), oracles.ScriptedRng([5, 6, 1]))
    expected = oracles.hamming(board.cells, after.cells)
    assert engine.hamming_distance(board, after) == expected


def test_hamming_shape_mismatch():
    with pytest.raises(DimensionError):
        engine.hamming_distance(full(3, 3), full(3, 4))


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_hamming_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (Board(rng.integers(1, 4, size=(4, 5))) for _ in range(3))
    d = engine.hamming_distance
    assert d(a, a) == 0
    assert d(a, b) == d(b, a) == oracles.hamming(a.cells, b.cells)
    assert d(a, c) <= d(a, b) + d(b, c)


# --- ensure_playable / padding -----------------------------------------------


def test_ensure_playable_leaves_playable_board_alone():
    board = settled(4)
    assert engine.ensure_playable(board, np.random.default_rng(0)) is board


def test_ensure_playable_reshuffles_dead_board():
    # Alternating colors per row, four colors in total: no swap aligns three.
    grid = np.array([[1, 2, 1, 2], [3, 4, 3, 4], [1, 2, 1, 2], [3, 4, 3, 4]])
    board = Board(grid)
    assert not oracles.valid_swaps(grid)
    fixed = engine.ensure_playable(board, np.random.default_rng(0))
    assert oracles.valid_swaps(fixed.cells)
    assert oracles.match_cells(fixed.cells) == []
    assert sorted(fixed.cells.ravel()) == sorted(grid.ravel())


def test_ensure_playable_keeps_blockers_in_place():
    grid = np.array([[1, 2, 1, 2], [3, 4, 3, 4], [1, 2, BLOCKER, 2], [3, 4, 3, 4]])
    fixed = engine.ensure_playable(Board(grid), np.random.default_rng(0))
    assert fixed.cells[2, 2] == BLOCKER
    assert oracles.valid_swaps(np.where(fixed.cells == BLOCKER, 9, fixed.cells)) != set()


def test_all_blocker_board_is_unplayable():
    board = Board(np.full((4, 4), BLOCKER))
    with pytest.raises(UnplayableBoardError):
        engine.ensure_playable(board, np.random.default_rng(0))


def test_zero_pad_sizes():
    nine = settled(1)
    assert engine.zero_pad(nine) == nine
    small = settled(1, 3, 3)
    padded = engine.zero_pad(small)
    assert padded.shape == (9, 9)
    assert int((padded.cells == EMPTY).sum()) == 72
    assert int(engine.zero_pad(settled(2, 5, 7)).playable.sum()) == 35


def test_board_rejects_tiles_in_holes():
    with pytest.raises(ValueError):
        board_from_rows([[1, 2, 3], [2, 3, 1], [3, 1, 2]], holes=[(0, 0)])


@settings(max_examples=25, deadline=None)
@given(sides, sides, st.integers(0, 10_000))
def test_random_board_is_settled_and_playable(m, n, seed):
    board = engine.random_board(m, n, np.random.default_rng(seed))
    assert engine.find_matches(board) == []
    assert engine.has_valid_move(board)
