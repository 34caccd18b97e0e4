"""Command-line interface for the training harness.

Exit codes: 0 success, 1 a completed run failed its check (trend
violated), 2 the invocation or configuration was invalid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .errors import HarnessError


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    d = ExperimentConfig()
    p.add_argument("--image-size", type=int, default=d.image_size)
    p.add_argument("--patch-size", type=int, default=d.patch_size)
    p.add_argument("--ms-list", type=_parse_int_list, default=d.sub_block_sizes,
                   help="comma-separated shuffle widths (default 8,4,2)")
    p.add_argument("--shape-classes", type=int, default=d.num_shape_classes,
                   help="number of shape classes besides background (default 4)")
    p.add_argument("--train-count", type=int, default=d.train_count)
    p.add_argument("--val-count", type=int, default=d.val_count)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--lr", type=float, default=d.lr)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--dim", type=int, default=d.embed_dim)
    p.add_argument("--depth", type=int, default=d.depth)
    p.add_argument("--heads", type=int, default=d.num_heads)
    p.add_argument("--data-seed", type=int, default=d.data_seed)
    p.add_argument("--seeds", type=_parse_int_list, default=d.train_seeds,
                   help="comma-separated training seeds (default 0,1,2)")
    p.add_argument("--reencrypt-per-epoch", action="store_true",
                   help="re-encrypt the training split with fresh keys every epoch")


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig(
        image_size=args.image_size,
        patch_size=args.patch_size,
        sub_block_sizes=tuple(args.ms_list),
        num_shape_classes=args.shape_classes,
        train_count=args.train_count,
        val_count=args.val_count,
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch_size,
        embed_dim=args.dim,
        depth=args.depth,
        num_heads=args.heads,
        data_seed=args.data_seed,
        train_seeds=tuple(args.seeds),
        reencrypt_per_epoch=args.reencrypt_per_epoch,
    )
    cfg.validate()
    return cfg


def cmd_gen(args) -> int:
    from .shapes import generate_shapes_dataset

    summary = generate_shapes_dataset(config_from_args(args), Path(args.out))
    if not args.quiet:
        print(f"wrote {summary['train']['count']} train / {summary['val']['count']} val samples to {args.out}")
    return 0


def cmd_validate(args) -> int:
    from .primary import validate_cipher_tool

    validate_cipher_tool(force=True)
    if not args.quiet:
        print("encryption tool reproduces all pinned reference vectors")
    return 0


def cmd_train(args) -> int:
    from .train import train_and_eval

    res = train_and_eval(
        config_from_args(args),
        args.variant,
        Path(args.data),
        Path(args.out),
        args.seed,
        quiet=args.quiet,
        pooled_eval=args.pooled_eval,
    )
    if not args.quiet:
        print(f"{res.variant} seed {res.seed}: aAcc {res.aacc:.2f}  mIoU {res.miou:.2f}  mAcc {res.macc:.2f}")
        if res.pooled is not None:
            print(
                f"  against pooled labels: aAcc {res.pooled.aacc:.2f}  "
                f"mIoU {res.pooled.miou:.2f}  mAcc {res.pooled.macc:.2f}"
            )
    return 0


def cmd_matrix(args) -> int:
    from .matrix import run_experiment_matrix

    result = run_experiment_matrix(config_from_args(args), Path(args.out), quiet=args.quiet)
    if result.trend.applicable and not result.trend.ok:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toytrainer",
        description="Train a tiny segmentation transformer on synthetic shapes, plain vs "
        "pixel-shuffled, and report how accuracy moves with the shuffle width.",
    )
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate the shapes dataset")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check the encryption tool against its reference vectors")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train and evaluate one variant")
    p.add_argument("--data", required=True, help="dataset directory from `toytrainer gen`")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--variant", required=True, help='"plain" or "ms<N>" (e.g. ms4)')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pooled-eval", action="store_true",
                   help="also score predictions against shuffle-width-majority-pooled labels")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("matrix", help="run every variant x seed and report the trend")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_matrix)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
