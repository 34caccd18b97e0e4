"""Train one model on one data variant and score its predictions.

A variant is either "plain" (train and evaluate on the generated images)
or "msN" (train and evaluate on copies encrypted with sub-block size N
via the external encryption tool). Labels are never encrypted: encrypted
splits carry the original label maps, and all scoring runs against them.

Before the first training step of a process, the encryption tool is
checked against its pinned reference vectors; a mismatched tool aborts
the run. After evaluation the predictions are written as PNGs and scored
twice — internally and by the tool — and the two must agree to 0.01.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import primary, pngs, scoring
from .config import ExperimentConfig, variant_sub_block_size
from .errors import HarnessError, TrainingDivergedError
from .model import TinySegViT
from .shapes import LABELS_SUBDIR

WARMUP_STEPS = 30
LR_FLOOR = 0.1  # cosine decays to this fraction of the peak rate


def load_split(split_dir: Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Read a split directory into (images, labels, names) arrays."""
    split_dir = Path(split_dir)
    names = sorted(p.name for p in split_dir.glob("*.png"))
    if not names:
        raise HarnessError(f"no images in {split_dir}")
    images, labels = [], []
    for name in names:
        images.append(pngs.load_rgb(split_dir / name))
        labels.append(pngs.load_label(split_dir / LABELS_SUBDIR / name))
    return np.stack(images), np.stack(labels), names


def prepare_variant_split(
    config: ExperimentConfig, variant: str, plain_split: Path, work_dir: Path, epoch: int = 0
) -> Path:
    """Return the directory holding this variant's copy of a split.

    Plain runs use the generated split as is. Encrypted variants are
    produced once via the tool and reused (the seed is derived from the
    experiment, variant, and epoch, so reruns are byte-identical).
    """
    ms = variant_sub_block_size(variant)
    if ms is None:
        return Path(plain_split)
    tag = f"{variant}-{Path(plain_split).name}" + (f"-ep{epoch}" if epoch else "")
    out = Path(work_dir) / tag
    if (out / "manifest.json").exists():
        return out
    primary.encrypt_split(
        plain_split,
        out,
        block_size=config.patch_size,
        sub_block_size=ms,
        seed=primary.derive_master_seed(config.data_seed, variant, epoch),
    )
    return out


@dataclass
class RunResult:
    variant: str
    seed: int
    aacc: float  # tool-reported, percent, 2 decimals
    miou: float
    macc: float
    internal: scoring.InternalScores
    pred_dir: Path
    train_seconds: float
    pooled: scoring.InternalScores | None = None

    def row(self) -> tuple[str, int, float, float, float]:
        return (self.variant, self.seed, self.aacc, self.miou, self.macc)


def _echo_abort(config: ExperimentConfig, variant: str, seed: int, epoch: int, step: int) -> str:
    return (
        f"loss became non-finite at epoch {epoch}, step {step} "
        f"(variant={variant} seed={seed}; {config.describe()})"
    )


def train_and_eval(
    config: ExperimentConfig,
    variant: str,
    data_dir: Path,
    out_dir: Path,
    seed: int,
    work_dir: Path | None = None,
    quiet: bool = False,
    pooled_eval: bool = False,
) -> RunResult:
    """Train on one variant, write prediction PNGs, and return the scores.

    out_dir receives preds/ (one PNG per val image) and result.json;
    encrypted copies of the splits go to work_dir (default: a subdirectory
    of out_dir) and are reused when they already exist, so several seeds
    can share one work_dir. The returned aAcc/mIoU/mAcc are the tool's
    numbers; the internal ones are kept alongside and must agree within
    0.01 or the run fails.
    """
    config.validate()
    primary.validate_cipher_tool()
    data_dir, out_dir = Path(data_dir), Path(out_dir)
    work_dir = Path(work_dir) if work_dir else out_dir / "variant-data"

    train_dir = prepare_variant_split(config, variant, data_dir / "train", work_dir)
    val_dir = prepare_variant_split(config, variant, data_dir / "val", work_dir)

    torch.manual_seed(seed)
    model = TinySegViT(config)
    opt = torch.optim.AdamW(model.parameters(), lr=config.lr, weight_decay=0.01)

    images, labels, _ = load_split(train_dir)
    x_all = torch.from_numpy(images).permute(0, 3, 1, 2).contiguous()  # uint8 (N,3,H,W)
    y_all = torch.from_numpy(labels.astype(np.int64))
    n = x_all.shape[0]

    # Background dominates the pixel count; weight classes by inverse
    # square-root frequency so the shape classes get traction early.
    freq = np.bincount(labels.ravel(), minlength=config.num_classes).astype(np.float64)
    freq = np.maximum(freq, 1.0) / freq.sum()
    inv = 1.0 / np.sqrt(freq)
    weights = torch.tensor(inv / inv.mean(), dtype=torch.float32)
    loss_fn = torch.nn.CrossEntropyLoss(weight=weights, ignore_index=scoring.IGNORE_LABEL)

    steps_per_epoch = (n + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    sched = torch.optim.lr_scheduler.LambdaLR(
        opt,
        lambda step: min(1.0, (step + 1) / WARMUP_STEPS)
        * (LR_FLOOR + (1.0 - LR_FLOOR) * 0.5 * (1.0 + np.cos(np.pi * min(step / max(1, total_steps), 1.0)))),
    )
    shuffler = torch.Generator().manual_seed(seed ^ 0x5EED)

    t0 = time.monotonic()
    model.train()
    for epoch in range(config.epochs):
        if config.reencrypt_per_epoch and variant != "plain" and epoch > 0:
            ep_dir = prepare_variant_split(config, variant, data_dir / "train", work_dir, epoch)
            images, labels, _ = load_split(ep_dir)
            x_all = torch.from_numpy(images).permute(0, 3, 1, 2).contiguous()
            y_all = torch.from_numpy(labels.astype(np.int64))
        order = torch.randperm(n, generator=shuffler)
        for step in range(steps_per_epoch):
            idx = order[step * config.batch_size : (step + 1) * config.batch_size]
            x = x_all[idx].float() / 255.0
            y = y_all[idx]
            logits = model(x)
            loss = loss_fn(logits, y)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(_echo_abort(config, variant, seed, epoch, step))
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            sched.step()
        if not quiet:
            print(f"[{variant} seed {seed}] epoch {epoch + 1}/{config.epochs} loss {loss.item():.4f}")
    train_seconds = time.monotonic() - t0

    # Evaluate on the variant's val images; score against the (unencrypted)
    # labels that ride along with them.
    val_images, val_labels, val_names = load_split(val_dir)
    pred_dir = out_dir / "preds"
    pred_dir.mkdir(parents=True, exist_ok=True)
    cm = scoring.new_confusion(config.num_classes)
    model.eval()
    with torch.no_grad():
        bs = max(config.batch_size, 64)
        for lo in range(0, val_images.shape[0], bs):
            batch = val_images[lo : lo + bs]
            x = torch.from_numpy(batch).permute(0, 3, 1, 2).float() / 255.0
            pred = model(x).argmax(dim=1).numpy().astype(np.uint8)
            for j in range(pred.shape[0]):
                name = val_names[lo + j]
                pngs.save_label(pred_dir / name, pred[j])
                scoring.add_pair(cm, val_labels[lo + j], pred[j])
    internal = scoring.scores_from_confusion(cm)

    tool = primary.score_predictions(val_dir / LABELS_SUBDIR, pred_dir, config.num_classes)
    for name, ours, theirs in (
        ("aAcc", internal.aacc, tool.aacc),
        ("mAcc", internal.macc, tool.macc),
        ("mIoU", internal.miou, tool.miou),
    ):
        if abs(ours - theirs) > 0.01:
            raise HarnessError(
                f"internal {name} {ours:.4f} disagrees with the scoring tool's {theirs:.2f} "
                f"(variant={variant} seed={seed})"
            )

    # Diagnostic: score the same predictions against labels pooled to the
    # variant's shuffle width. If the gap to the main score is small, the
    # accuracy loss is mostly sub-shuffle-width detail (supervision
    # misalignment); a large remaining deficit points at feature damage.
    pooled: scoring.InternalScores | None = None
    ms = variant_sub_block_size(variant)
    if pooled_eval and ms and ms > 1:
        pcm = scoring.new_confusion(config.num_classes)
        for j, name in enumerate(val_names):
            gt_pooled = scoring.pool_labels(val_labels[j], ms, config.num_classes)
            scoring.add_pair(pcm, gt_pooled, pngs.load_label(pred_dir / name))
        pooled = scoring.scores_from_confusion(pcm)

    result = RunResult(
        variant=variant,
        seed=seed,
        aacc=tool.aacc,
        miou=tool.miou,
        macc=tool.macc,
        internal=internal,
        pred_dir=pred_dir,
        train_seconds=train_seconds,
        pooled=pooled,
    )
    doc = {
        "variant": variant,
        "seed": seed,
        "aAcc": tool.aacc,
        "mIoU": tool.miou,
        "mAcc": tool.macc,
        "internal": {"aAcc": internal.aacc, "mAcc": internal.macc, "mIoU": internal.miou},
        "train_seconds": round(train_seconds, 2),
        "config": config.describe(),
    }
    if pooled is not None:
        doc["pooled_label_eval"] = {
            "pool_width": ms,
            "aAcc": pooled.aacc,
            "mAcc": pooled.macc,
            "mIoU": pooled.miou,
        }
    (out_dir / "result.json").write_text(json.dumps(doc, indent=2))
    return result
