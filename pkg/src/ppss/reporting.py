"""Report rendering: delimited text plus matplotlib figures on disk.

Every reporting command emits the same facts twice: tab-delimited lines on
stdout (one record per line, machine mode drops the human framing) and,
when asked, a PNG figure next to the other outputs. Figures are rendered
headless; no display is ever required.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import AttackReport, KeyspaceReport, SumLeakReport
from .metrics import SegScores, format_percent

_DIRECTIONS = ("horizontal", "vertical", "diagonal")
_CHANNELS = ("R", "G", "B")


def metrics_lines(scores: SegScores, machine: bool) -> list[str]:
    if machine:
        lines = [f"aAcc\t{format_percent(scores.aacc)}", f"mAcc\t{format_percent(scores.macc)}", f"mIoU\t{format_percent(scores.miou)}"]
        for c in scores.per_class:
            lines.append(f"class\t{c.class_id}\t{c.gt_pixels}\t{format_percent(c.recall)}\t{format_percent(c.iou)}")
        return lines
    lines = [
        f"pixels counted: {scores.counted_pixels}",
        f"aAcc: {format_percent(scores.aacc)}  mAcc: {format_percent(scores.macc)}  mIoU: {format_percent(scores.miou)}",
        "class\tgt_pixels\trecall\tIoU",
    ]
    for c in scores.per_class:
        lines.append(f"{c.class_id}\t{c.gt_pixels}\t{format_percent(c.recall)}\t{format_percent(c.iou)}")
    return lines


def render_metrics_figure(scores: SegScores, path: Path) -> None:
    ids = [c.class_id for c in scores.per_class]
    x = np.arange(len(ids))
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(ids) + 3), 4))
    ax.bar(x - 0.2, [c.recall for c in scores.per_class], width=0.4, label="recall")
    ax.bar(x + 0.2, [c.iou for c in scores.per_class], width=0.4, label="IoU")
    ax.axhline(scores.miou, color="gray", linestyle="--", linewidth=1, label=f"mIoU {format_percent(scores.miou)}")
    ax.set_xticks(x, [str(i) for i in ids])
    ax.set_xlabel("class")
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.set_title(f"per-class scores (aAcc {format_percent(scores.aacc)}, mAcc {format_percent(scores.macc)})")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def correlation_lines(corr: dict[str, list[float | None]], label: str, machine: bool) -> list[str]:
    lines = [] if machine else [f"adjacent-pixel correlation ({label}):"]
    for d in _DIRECTIONS:
        vals = ["nan" if v is None else f"{v:.4f}" for v in corr[d]]
        if machine:
            lines.append(f"correlation\t{label}\t{d}\t" + "\t".join(vals))
        else:
            lines.append(f"  {d}: " + "  ".join(f"{ch}={v}" for ch, v in zip(_CHANNELS, vals)))
    return lines


def sum_leak_lines(leak: SumLeakReport, machine: bool) -> list[str]:
    if machine:
        return [f"sum_leak\t{leak.matching_subblocks}\t{leak.total_subblocks}\t{leak.match_fraction:.6f}"]
    return [
        f"channel-sum leak: {leak.matching_subblocks}/{leak.total_subblocks} sub-blocks "
        f"share their channel-sum multiset ({100 * leak.match_fraction:.2f}%)"
    ]


def keyspace_lines(ks: KeyspaceReport, machine: bool) -> list[str]:
    kind = "independent" if ks.independent_channels else "shared-pixel-perm"
    if machine:
        return [
            f"keyspace\t{ks.sub_block_size}\t{kind}\t{ks.per_subblock_count}\t{ks.per_subblock_bits:.4f}\t{ks.n_subblocks}\t{ks.total_bits:.2f}"
        ]
    return [
        f"keyspace per sub-block (ms={ks.sub_block_size}, {kind} channels): "
        f"{ks.per_subblock_count} keys = {ks.per_subblock_bits:.2f} bits",
        f"whole image ({ks.n_subblocks} independently keyed sub-blocks): {ks.total_bits:.2f} bits",
    ]


def render_analysis_figure(
    corr_main: dict[str, list[float | None]],
    path: Path,
    corr_plain: dict[str, list[float | None]] | None = None,
) -> None:
    panels = [("encrypted", corr_main)]
    if corr_plain is not None:
        panels.insert(0, ("plain", corr_plain))
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), sharey=True, squeeze=False)
    for ax, (title, corr) in zip(axes[0], panels):
        x = np.arange(len(_DIRECTIONS))
        for ci, ch in enumerate(_CHANNELS):
            vals = [corr[d][ci] if corr[d][ci] is not None else 0.0 for d in _DIRECTIONS]
            ax.bar(x + (ci - 1) * 0.25, vals, width=0.25, label=ch)
        ax.axhline(0, color="black", linewidth=0.8)
        ax.set_xticks(x, _DIRECTIONS)
        ax.set_title(f"neighbor correlation, {title}")
        ax.set_ylim(-1.05, 1.05)
    axes[0][0].set_ylabel("Pearson r")
    axes[0][-1].legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def attack_lines(report: AttackReport, machine: bool) -> list[str]:
    n = len(report.per_subblock)
    if machine:
        lines = [
            f"attack\t{n}\t{report.exact_subblocks}\t{report.total_ambiguity_bits:.2f}",
        ]
        return lines
    return [
        f"recovered keys for {n} sub-blocks; {report.exact_subblocks} pinned down exactly",
        f"residual ambiguity across the image: {report.total_ambiguity_bits:.2f} bits",
    ]


def render_attack_figure(report: AttackReport, path: Path) -> None:
    import math

    bits = [math.log2(s.ambiguity) if s.ambiguity > 1 else 0.0 for s in report.per_subblock]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(bits, bins=min(40, max(5, len(set(bits)))), color="tab:orange", edgecolor="black")
    ax.set_xlabel("residual key ambiguity per sub-block (bits)")
    ax.set_ylabel("sub-blocks")
    ax.set_title("known-pair attack: what one pair leaves unknown")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
