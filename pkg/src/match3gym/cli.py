"""Command-line entry point: ``match3gym <subcommand> ...``.

Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import engine, harness, levels
from .agents import AgentConfig, DQNAgent, RewardConfig, pretrain_supervised
from .errors import Match3Error
from .nn import Network, read_checkpoint, save_checkpoint
from .selfcheck import run_selfcheck


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits by default
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="match3gym", description="Match-3 engine, baseline players and a DQN playtesting agent.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", help="print the number of directed swaps on a full board")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)

    p = sub.add_parser("pretrain", help="supervised warm start on valid moves of random boards")
    p.add_argument("--boards", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--passes", type=int, default=10)

    p = sub.add_parser("train", help="train the DQN agent on one level")
    p.add_argument("--level", required=True, help="level JSON file or builtin name (tier1..tier5)")
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--curve", required=True, help="learning-curve CSV path")
    p.add_argument("--model", help="starting checkpoint, e.g. from pretrain")
    p.add_argument("--k1", type=int, default=20)
    p.add_argument("--k2", type=int, default=5)
    p.add_argument("--replay", type=int, default=10_000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--gamma-min", type=float, default=0.50)
    p.add_argument("--gamma-max", type=float, default=0.99)
    p.add_argument("--alpha-rl", type=float, default=0.1)

    p = sub.add_parser("eval", help="evaluate one agent on one level")
    p.add_argument("--level", required=True)
    p.add_argument("--agent", required=True, choices=("random", "smart", "jellygym"))
    p.add_argument("--model")
    p.add_argument("--matches", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report")

    p = sub.add_parser("compare", help="evaluate several agents on every level in a directory")
    p.add_argument("--levels", required=True, help="directory of level JSON files")
    p.add_argument("--agents", required=True, help="comma-separated, e.g. random,smart,jellygym")
    p.add_argument("--model", help="checkpoint for the jellygym agent")
    p.add_argument("--matches", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report", required=True)

    sub.add_parser("selfcheck", help="run the built-in invariant checks")
    return parser


def _emit(report: harness.EvaluationReport, path: str | None) -> None:
    text = report.to_csv()
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def run(args: argparse.Namespace) -> int:
    if args.command == "enumerate":
        print(engine.theoretical_move_count(args.rows, args.cols))
    elif args.command == "pretrain":
        rng = np.random.default_rng(args.seed)
        net = Network.create(rng=rng)
        losses: list = []
        pretrain_supervised(net, args.boards, rng, passes=args.passes, losses=losses)
        save_checkpoint(net, args.out, meta={"seed": args.seed, "pretrain_losses": losses})
        print(f"final pass loss {losses[-1]:.6f}" if losses else "no passes run")
    elif args.command == "train":
        level = levels.load_level(args.level)
        config = AgentConfig(
            k1=args.k1,
            k2=args.k2,
            replay_capacity=args.replay,
            batch_size=args.batch,
            alpha_rl=args.alpha_rl,
            reward=RewardConfig(gamma_min=args.gamma_min, gamma_max=args.gamma_max),
            seed=args.seed,
        )
        net = opt = None
        if args.model:
            net, _, _ = read_checkpoint(args.model)
        agent = DQNAgent(net, config, opt)
        curve = harness.train(agent, level, args.episodes, args.seed, args.curve, args.out)
        print(f"episodes {len(curve)} final cumulative success {curve.cumulative_success_rate[-1]:.4f}")
    elif args.command == "eval":
        level = levels.load_level(args.level)
        agent = harness.make_agent(args.agent, args.model, args.seed)
        _emit(harness.evaluate(agent, level, args.matches, args.seed), args.report)
    elif args.command == "compare":
        directory = Path(args.levels)
        if not directory.is_dir():
            raise UsageError(f"--levels {directory} is not a directory")
        level_list = [levels.load_level(p) for p in sorted(directory.glob("*.json"))]
        if not level_list:
            raise UsageError(f"no *.json levels in {directory}")
        names = [n.strip() for n in args.agents.split(",") if n.strip()]
        agent_list = [harness.make_agent(n, args.model, args.seed) for n in names]
        harness.compare(level_list, agent_list, args.matches, args.seed, args.report)
    elif args.command == "selfcheck":
        failures = run_selfcheck(print)
        return 1 if failures else 0
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        return run(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (Match3Error, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
