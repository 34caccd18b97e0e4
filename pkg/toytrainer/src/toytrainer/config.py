"""Experiment configuration for the shapes segmentation harness."""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    """Raised when an experiment configuration is internally inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment matrix.

    The patch size doubles as the encryption block size, so every
    shuffle width in ``sub_block_sizes`` must divide it and it must
    divide the image size.
    """

    image_size: int = 64
    patch_size: int = 8
    sub_block_sizes: tuple[int, ...] = (8, 4, 2)
    num_shape_classes: int = 4  # class ids 1..n; 0 is background
    train_count: int = 2000
    val_count: int = 500
    epochs: int = 12
    lr: float = 3e-3
    batch_size: int = 64
    embed_dim: int = 128
    depth: int = 4
    num_heads: int = 4
    data_seed: int = 0
    train_seeds: tuple[int, ...] = (0, 1, 2)
    reencrypt_per_epoch: bool = False

    @property
    def num_classes(self) -> int:
        return self.num_shape_classes + 1

    def validate(self) -> None:
        if self.image_size <= 0 or self.patch_size <= 0:
            raise ConfigError("image size and patch size must be positive")
        if self.image_size % self.patch_size != 0:
            raise ConfigError(
                f"patch size {self.patch_size} does not divide image size {self.image_size}"
            )
        # An empty width list is allowed: the matrix then runs the plain
        # baseline alone and reports without asserting a trend.
        for ms in self.sub_block_sizes:
            if ms <= 0 or self.patch_size % ms != 0:
                raise ConfigError(
                    f"shuffle width {ms} does not divide patch size {self.patch_size}"
                )
        if len(set(self.sub_block_sizes)) != len(self.sub_block_sizes):
            raise ConfigError("shuffle widths must be distinct")
        if self.num_shape_classes < 1 or self.num_shape_classes > 4:
            raise ConfigError("supported shape class counts are 1..4")
        if self.train_count < 1 or self.val_count < 1:
            raise ConfigError("train and val counts must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch size must be positive")
        if self.embed_dim % self.num_heads != 0:
            raise ConfigError(
                f"embed dim {self.embed_dim} is not a multiple of head count {self.num_heads}"
            )
        if not (2 <= self.depth <= 8):
            raise ConfigError("encoder depth must be between 2 and 8")
        if not self.train_seeds:
            raise ConfigError("at least one training seed is required")
        if len(set(self.train_seeds)) != len(self.train_seeds):
            raise ConfigError("training seeds must be distinct")

    def variants(self) -> list[str]:
        """Variant names in report order: plain baseline, then coarsest shuffle first."""
        names = ["plain"]
        for ms in sorted(self.sub_block_sizes, reverse=True):
            names.append(f"ms{ms}")
        return names

    def describe(self) -> str:
        """One-line echo used in error messages and reports."""
        return (
            f"image={self.image_size} patch={self.patch_size} "
            f"widths={list(self.sub_block_sizes)} classes={self.num_classes} "
            f"train/val={self.train_count}/{self.val_count} epochs={self.epochs} "
            f"lr={self.lr} batch={self.batch_size} dim={self.embed_dim} "
            f"depth={self.depth} heads={self.num_heads} data_seed={self.data_seed} "
            f"seeds={list(self.train_seeds)} reencrypt={self.reencrypt_per_epoch}"
        )


def variant_sub_block_size(variant: str) -> int | None:
    """Shuffle width for a variant name, or None for the plain baseline."""
    if variant == "plain":
        return None
    if variant.startswith("ms") and variant[2:].isdigit():
        return int(variant[2:])
    raise ConfigError(f"unknown variant name: {variant!r}")
