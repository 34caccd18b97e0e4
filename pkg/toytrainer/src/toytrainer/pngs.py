"""Minimal PNG helpers.

The harness talks to the encryption tool exclusively through files, so
these cover exactly what crosses that boundary: RGB images, single-channel
label maps, and content hashes over raw pixel bytes (encoder-independent).
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
from PIL import Image


def save_rgb(path: Path, arr: np.ndarray) -> None:
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected HxWx3 uint8 array, got {arr.dtype} {arr.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def save_label(path: Path, arr: np.ndarray) -> None:
    if arr.dtype != np.uint8 or arr.ndim != 2:
        raise ValueError(f"expected HxW uint8 array, got {arr.dtype} {arr.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode != "RGB":
            raise ValueError(f"{path}: expected an RGB image, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint8)


def load_label(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "P"):
            raise ValueError(f"{path}: expected a single-channel label map, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint8)


def sha256_pixels(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()
