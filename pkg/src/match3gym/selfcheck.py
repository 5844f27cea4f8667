"""Fast invariant checks runnable without pytest (``match3gym selfcheck``)."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import agents, engine, levels, nn


def _move_counts() -> bool:
    for m in range(engine.MIN_SIDE, engine.MAX_SIDE + 1):
        for n in range(engine.MIN_SIDE, engine.MAX_SIDE + 1):
            board = engine.Board(np.ones((m, n), dtype=np.int8))
            count = len(engine.enumerate_positional_swaps(board))
            if count != engine.theoretical_move_count(m, n) or count % 2:
                return False
    return engine.theoretical_move_count(9, 9) == 288


def _action_space() -> bool:
    board = engine.Board(np.ones((9, 9), dtype=np.int8))
    legal = agents.positional_mask(board)
    roundtrip = all(agents.move_to_action(agents.action_to_move(i)) == i for i in range(agents.N_ACTIONS))
    return int((~legal).sum()) == 36 and int(legal.sum()) == 288 and roundtrip


def _cascade_invariants() -> bool:
    rng = np.random.default_rng(1)
    for _ in range(20):
        board = engine.random_board(9, 9, rng)
        for move in engine.enumerate_positional_swaps(board)[:40]:
            after, outcome, valid = engine.apply_move(board, move, rng)
            if not valid and after != board:
                return False
            if valid and (engine.find_matches(after) or outcome.matches_resolved < 1):
                return False
    return True


def _hamming_metric() -> bool:
    rng = np.random.default_rng(2)
    for _ in range(200):
        a, b, c = (engine.Board(rng.integers(1, 7, size=(5, 6))) for _ in range(3))
        d = engine.hamming_distance
        if d(a, a) != 0 or d(a, b) != d(b, a) or d(a, c) > d(a, b) + d(b, c):
            return False
    return True


def _bellman() -> bool:
    return (
        agents.bellman_update(2.0, 4.0, 7.0, 1.0, 0.5) == 4.0 + 0.5 * 7.0
        and agents.bellman_update(2.0, 4.0, 0.0, 0.5, 0.0) == 3.0
        and abs(agents.bellman_update(0.0, 5.0, 10.0, 0.001, 0.9) - 0.014) < 1e-15
    )


def _softmax_and_gradient() -> bool:
    rng = np.random.default_rng(3)
    net = nn.Network.create((6, 5, 4, 3), rng=rng)
    x = rng.normal(size=(4, 6))
    logits, probs, cache = nn.forward(net, x, "train")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-12):
        return False
    target = rng.normal(size=logits.shape)
    _, g = nn.mse_loss(logits, target)
    grads = nn.backward(net, cache, g)
    w = net.layers[0].w
    h = 1e-6
    w[0, 0] += h
    up = nn.mse_loss(nn.forward(net, x, "train")[0], target)[0]
    w[0, 0] -= 2 * h
    down = nn.mse_loss(nn.forward(net, x, "train")[0], target)[0]
    w[0, 0] += h
    numeric = (up - down) / (2 * h)
    return abs(numeric - grads[0]["w"][0, 0]) <= 1e-6 + 1e-4 * abs(numeric)


def _level_lifecycle() -> bool:
    rng = np.random.default_rng(4)
    for level in levels.builtin_levels():
        state = levels.init_match(level, rng)
        if engine.find_matches(state.board) or not engine.has_valid_move(state.board):
            return False
    return True


CHECKS: dict[str, Callable[[], bool]] = {
    "move-count theorem (49 board shapes)": _move_counts,
    "action space 324 = 288 legal + 36 off-board": _action_space,
    "cascades settle; invalid swaps are identity": _cascade_invariants,
    "hamming distance is a metric": _hamming_metric,
    "bellman update arithmetic": _bellman,
    "softmax normalization and backprop": _softmax_and_gradient,
    "bundled levels start settled and playable": _level_lifecycle,
}


def run_selfcheck(report: Callable[[str], None] = print) -> list[str]:
    failures = []
    for name, check in CHECKS.items():
        ok = check()
        report(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)
    return failures
