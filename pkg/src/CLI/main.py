# src/CLI/main.py
# argparse front end. Exit codes: 0 ok, 1 validation/format errors, 2 numeric failures.

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from src.CLI.Commands.ablate import DEFAULT_SEEDS, DIM_VARIANTS, cmd_ablate
from src.CLI.Commands.dump_attn import cmd_dump_attn
from src.CLI.Commands.evaluate import cmd_eval
from src.CLI.Commands.gradcheck import SELECTORS, cmd_gradcheck
from src.CLI.Commands.train import cmd_train
from src.CLI.Config.parser import parse_config
from src.CLI.Services.checkpoint import load_checkpoint
from src.Core.Models.configs import RunConfig
from src.Core.Models.errors import NumericFailure, RelationNetError, UsageError, ValidationFailure
from Utils.Logger.logfire import configure_logfire, logfire

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _int_list(text: str) -> list[int]:
    return [_seed(part) for part in text.split(",") if part.strip()]


def _name_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


class _Parser(argparse.ArgumentParser):
    """Bad command lines are usage errors (exit 1), like any other invalid input."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pose-relation-sandbox", description="Dual-path relation network sandbox on synthetic pose scenes.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model and write a checkpoint")
    train.add_argument("--config", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--seed", type=_seed)

    evaluate = sub.add_parser("eval", help="PCK of a checkpoint on the eval seeds")
    evaluate.add_argument("--ckpt", required=True)
    evaluate.add_argument("--config", required=True)
    evaluate.add_argument("--seed", type=_seed)

    grad = sub.add_parser("gradcheck", help="finite-difference check of one module")
    grad.add_argument("selector", help=", ".join(SELECTORS))
    grad.add_argument("--seed", type=_seed, default=0)

    dump = sub.add_parser("dump-attn", help="write attention matrices of one scene")
    dump.add_argument("--ckpt", required=True)
    dump.add_argument("--scene-seed", type=_seed, required=True)
    dump.add_argument("--out", required=True)
    dump.add_argument("--gt-centers", action="store_true", help="use ground-truth centers instead of detection")
    dump.add_argument("--seed", type=_seed)

    ablate = sub.add_parser("ablate", help="train and evaluate every branch variant over several seeds")
    ablate.add_argument("--config", required=True)
    ablate.add_argument("--variants", type=_name_list, default=list(DIM_VARIANTS))
    ablate.add_argument("--seeds", type=_int_list, default=list(DEFAULT_SEEDS))
    ablate.add_argument("--seed", type=_seed, help="single seed, shorthand for --seeds S")
    return parser


def _with_seed(config: RunConfig, seed: int | None) -> RunConfig:
    return config if seed is None else config.model_copy(update={"seed": seed})


def run(args: argparse.Namespace) -> int:
    if args.command == "train":
        cmd_train(_with_seed(parse_config(args.config), args.seed), args.out)
    elif args.command == "eval":
        cmd_eval(args.ckpt, _with_seed(parse_config(args.config), args.seed))
    elif args.command == "gradcheck":
        cmd_gradcheck(args.selector, args.seed)
    elif args.command == "dump-attn":
        config = _with_seed(load_checkpoint(args.ckpt).config, args.seed)
        cmd_dump_attn(args.ckpt, args.scene_seed, args.out, config=config, gt_centers=args.gt_centers or None)
    elif args.command == "ablate":
        seeds = [args.seed] if args.seed is not None else args.seeds
        cmd_ablate(parse_config(args.config), args.variants, seeds)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    configure_logfire()
    try:
        args = build_parser().parse_args(argv)
        with logfire.span("command {command}", command=args.command):
            return run(args)
    except ValidationFailure as exc:
        logfire.error("{kind}: {message}", kind=type(exc).__name__, message=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericFailure as exc:
        logfire.error("{kind}: {message}", kind=type(exc).__name__, message=str(exc))
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RelationNetError as exc:  # pragma: no cover - every subclass belongs to one family
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
