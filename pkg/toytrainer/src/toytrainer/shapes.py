"""Synthetic shapes dataset: colored shapes on textured backgrounds.

Every sample is generated from a counter-based RNG stream keyed by
(dataset seed, sample index), so the same index always yields the same
pixels no matter how many samples are drawn or in what order. Labels are
exact: a pixel is labeled with a shape class iff that shape is the topmost
one covering it.

Shape colors are sampled independently of the class, so a model cannot
classify by color alone; class identity is carried by geometry (outline)
and by a class-keyed fine stripe texture in the fill. Class ids: 0
background, then 1..n for the shape kinds in SHAPE_KINDS order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pngs
from .config import ExperimentConfig

SHAPE_KINDS = ("rectangle", "circle", "triangle", "cross")

IMAGES_SUBDIR = "."  # images sit at the directory root
LABELS_SUBDIR = "labels"
SUMMARY_NAME = "summary.json"


def sample_name(index: int) -> str:
    return f"im{index:05d}.png"


def _background(rng: np.random.Generator, size: int) -> np.ndarray:
    """Textured background: base color + coarse blotches + fine grain."""
    base = rng.integers(40, 216, size=3)
    coarse_cells = max(2, size // 8)
    coarse = rng.integers(-14, 15, size=(coarse_cells, coarse_cells, 3))
    scale = size // coarse_cells
    coarse = np.kron(coarse, np.ones((scale, scale, 1), dtype=np.int64))
    fine = rng.integers(-4, 5, size=(size, size, 3))
    img = base[None, None, :] + coarse[:size, :size] + fine
    return np.clip(img, 0, 255).astype(np.uint8)


REFERENCE_SIZE = 64  # canvas the size spans below were tuned on


def _span(lo: int, hi: int, size: int) -> tuple[int, int]:
    """Scale a [lo, hi) size range from the reference canvas to this one."""
    lo = max(2, lo * size // REFERENCE_SIZE)
    return lo, max(lo + 1, hi * size // REFERENCE_SIZE)


def _shape_mask(rng: np.random.Generator, kind: str, size: int) -> np.ndarray:
    """Boolean HxW mask for one randomly placed, randomly sized shape."""
    yy, xx = np.ogrid[:size, :size]
    margin = 2
    if kind == "rectangle":
        w = int(rng.integers(*_span(20, 45, size)))
        h = int(rng.integers(*_span(20, 45, size)))
        x0 = int(rng.integers(margin, size - margin - w + 1))
        y0 = int(rng.integers(margin, size - margin - h + 1))
        return (xx >= x0) & (xx < x0 + w) & (yy >= y0) & (yy < y0 + h)
    if kind == "circle":
        r = int(rng.integers(*_span(11, 22, size)))
        cx = int(rng.integers(margin + r, size - margin - r))
        cy = int(rng.integers(margin + r, size - margin - r))
        return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    if kind == "triangle":
        # Isoceles: apex on one row, base w pixels wide h rows away.
        w = int(rng.integers(*_span(22, 45, size)))
        h = int(rng.integers(*_span(20, 41, size)))
        cx = int(rng.integers(margin + w // 2, size - margin - w // 2))
        y0 = int(rng.integers(margin, size - margin - h))
        up = bool(rng.integers(0, 2))
        rel = (yy - y0) if up else (y0 + h - yy)
        frac = np.clip(rel / h, 0.0, 1.0)
        inside_rows = (yy >= y0) & (yy <= y0 + h)
        return inside_rows & (np.abs(xx - cx) <= frac * (w / 2))
    if kind == "cross":
        s = int(rng.integers(*_span(26, 47, size)))
        t_lo = max(1, 7 * size // REFERENCE_SIZE)
        t = int(rng.integers(t_lo, max(t_lo + 1, s // 3)))
        cx = int(rng.integers(margin + s // 2, size - margin - s // 2))
        cy = int(rng.integers(margin + s // 2, size - margin - s // 2))
        horiz = (np.abs(xx - cx) <= s // 2) & (np.abs(yy - cy) <= t // 2)
        vert = (np.abs(xx - cx) <= t // 2) & (np.abs(yy - cy) <= s // 2)
        return horiz | vert
    raise ValueError(f"unknown shape kind {kind!r}")


def _shape_color(rng: np.random.Generator, bg_base: np.ndarray) -> np.ndarray:
    # Resample until the color is clearly separable from the background base
    # (bounded retries: each draw succeeds with high probability).
    for _ in range(64):
        color = rng.integers(0, 256, size=3)
        if int(np.abs(color - bg_base).max()) >= 90:
            return color
    return np.array([255, 255, 255]) - bg_base  # complement always contrasts


STRIPE_PERIOD = 6  # pixels per on/off pair
STRIPE_AMPLITUDE = 40


def _fill_texture(rng: np.random.Generator, cls: int, size: int) -> np.ndarray:
    """Class-keyed stripe pattern in {-1, +1}, random phase.

    Each class fills its shapes with a different stripe orientation
    (vertical / horizontal / diagonal / checker), so class identity is
    carried by fine-grained texture rather than by color. The stripes are
    a few pixels wide: local structure of exactly the kind pixel
    shuffling erases, which is what makes the encrypted variants degrade
    by shuffle width.
    """
    half = STRIPE_PERIOD // 2
    yy, xx = np.ogrid[:size, :size]
    ox, oy = int(rng.integers(0, STRIPE_PERIOD)), int(rng.integers(0, STRIPE_PERIOD))
    if cls == 1:
        pattern = ((xx + ox) // half) % 2 + np.zeros((size, 1), dtype=np.int64)
    elif cls == 2:
        pattern = ((yy + oy) // half) % 2 + np.zeros((1, size), dtype=np.int64)
    elif cls == 3:
        pattern = ((xx + yy + ox) // half) % 2
    else:
        pattern = (((xx + ox) // half) + ((yy + oy) // half)) % 2
    return pattern * 2 - 1


def make_sample(config: ExperimentConfig, index: int) -> tuple[np.ndarray, np.ndarray]:
    """One (image, label) pair, deterministic in (data_seed, index).

    The first shape of sample i has class 1 + (i mod n) and is drawn on
    top, so any run of n consecutive indices is guaranteed to contain
    every class.
    """
    rng = np.random.default_rng([config.data_seed, index])
    size = config.image_size
    n = config.num_shape_classes

    img = _background(rng, size)
    bg_base = img.reshape(-1, 3).mean(axis=0)
    label = np.zeros((size, size), dtype=np.uint8)

    n_shapes = int(rng.integers(1, 3))
    guaranteed_class = 1 + index % n
    classes = [guaranteed_class] + [int(rng.integers(1, n + 1)) for _ in range(n_shapes - 1)]
    # Draw the guaranteed shape last so nothing can occlude it completely.
    for cls in reversed(classes):
        kind = SHAPE_KINDS[cls - 1]
        mask = _shape_mask(rng, kind, size)
        color = _shape_color(rng, bg_base)
        stripes = _fill_texture(rng, cls, size)[:, :, None] * STRIPE_AMPLITUDE
        noise = rng.integers(-6, 7, size=(size, size, 3))
        fill = np.clip(color[None, None, :] + stripes + noise, 0, 255).astype(np.uint8)
        img[mask] = fill[mask]
        label[mask] = cls
    return img, label


@dataclass
class SplitSummary:
    count: int
    class_pixels: list[int]  # indexed by class id


def _write_split(config: ExperimentConfig, out_dir: Path, start: int, count: int) -> SplitSummary:
    out_dir.mkdir(parents=True, exist_ok=True)
    class_pixels = np.zeros(config.num_classes, dtype=np.int64)
    for i in range(start, start + count):
        img, label = make_sample(config, i)
        name = sample_name(i)
        pngs.save_rgb(out_dir / name, img)
        pngs.save_label(out_dir / LABELS_SUBDIR / name, label)
        class_pixels += np.bincount(label.ravel(), minlength=config.num_classes)
    return SplitSummary(count=count, class_pixels=class_pixels.tolist())


def generate_shapes_dataset(config: ExperimentConfig, out_dir: Path) -> dict:
    """Write train/ and val/ splits (images + labels/ subdir) under out_dir.

    Returns the summary that is also saved as summary.json: per-split
    sample counts and per-class pixel totals. Train and val use disjoint
    index ranges of the same stream, so they never share a sample.
    """
    config.validate()
    out_dir = Path(out_dir)
    train = _write_split(config, out_dir / "train", 0, config.train_count)
    val = _write_split(config, out_dir / "val", config.train_count, config.val_count)
    summary = {
        "image_size": config.image_size,
        "num_classes": config.num_classes,
        "data_seed": config.data_seed,
        "train": {"count": train.count, "class_pixels": train.class_pixels},
        "val": {"count": val.count, "class_pixels": val.class_pixels},
    }
    (out_dir / SUMMARY_NAME).write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary
