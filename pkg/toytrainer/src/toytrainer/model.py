"""Tiny vision transformer for per-pixel classification.

Patchify with a strided convolution, run a few pre-norm encoder layers,
then map each token linearly to logits for every pixel of its patch.
The per-patch linear decoder is deliberately naive: all spatial detail
inside a patch must come from that single token.
"""

from __future__ import annotations

import torch
from torch import nn

from .config import ExperimentConfig


class TinySegViT(nn.Module):
    def __init__(self, config: ExperimentConfig):
        super().__init__()
        config.validate()
        self.patch = config.patch_size
        self.grid = config.image_size // config.patch_size
        self.num_classes = config.num_classes
        dim = config.embed_dim

        self.embed = nn.Conv2d(3, dim, kernel_size=self.patch, stride=self.patch)
        self.pos = nn.Parameter(torch.zeros(1, self.grid * self.grid, dim))
        nn.init.trunc_normal_(self.pos, std=0.02)
        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=config.num_heads,
            dim_feedforward=dim * 2,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.depth, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, self.patch * self.patch * self.num_classes)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """images: (B, 3, H, W) float in [0, 1] -> logits (B, K, H, W)."""
        b = images.shape[0]
        x = self.embed(images * 2.0 - 1.0)  # (B, dim, g, g)
        x = x.flatten(2).transpose(1, 2) + self.pos  # (B, g*g, dim)
        x = self.norm(self.encoder(x))
        x = self.head(x)  # (B, g*g, p*p*K)
        g, p, k = self.grid, self.patch, self.num_classes
        x = x.view(b, g, g, p, p, k).permute(0, 5, 1, 3, 2, 4)  # (B, K, g, p, g, p)
        return x.reshape(b, k, g * p, g * p)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
