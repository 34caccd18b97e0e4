"""Strict PNG loading/saving and atomic file writes.

The cipher is defined over exact bytes, so only lossless strict-RGB input
is accepted; anything with an alpha channel, a palette, or non-8-bit depth
is rejected rather than silently converted. Label maps are single-channel
8-bit (palette PNGs read as their index values, which is how common
segmentation datasets ship their annotation files).
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ImageFormatError


def load_rgb(path: str | os.PathLike) -> np.ndarray:
    """Read a strict 8-bit RGB PNG as a (H, W, 3) uint8 array."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: expected a PNG file, got {im.format}")
            if im.mode != "RGB":
                raise ImageFormatError(
                    f"{path}: expected strict 8-bit RGB, got mode {im.mode}"
                )
            arr = np.asarray(im, dtype=np.uint8)
    except (OSError, Image.DecompressionBombError) as exc:
        raise ImageFormatError(f"{path}: cannot read image: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageFormatError(f"{path}: decoded to unexpected shape {arr.shape}")
    return arr


def load_label(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit single-channel label map as a (H, W) uint8 array."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("L", "P"):
                raise ImageFormatError(
                    f"{path}: expected an 8-bit single-channel label map, got mode {im.mode}"
                )
            # For palette images the indices are the class ids; np.asarray
            # reads them directly without expanding to RGB.
            arr = np.asarray(im, dtype=np.uint8)
    except OSError as exc:
        raise ImageFormatError(f"{path}: cannot read label map: {exc}") from exc
    if arr.ndim != 2:
        raise ImageFormatError(f"{path}: label map decoded to unexpected shape {arr.shape}")
    return arr


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temp file in the same directory plus rename, so readers
    never observe a half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        # mkstemp creates 0600; give outputs ordinary file permissions.
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _png_bytes(im: Image.Image) -> bytes:
    import io

    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def save_rgb(path: str | os.PathLike, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ImageFormatError(f"can only save (H, W, 3) uint8 arrays, got {arr.shape} {arr.dtype}")
    atomic_write_bytes(path, _png_bytes(Image.fromarray(arr, mode="RGB")))


def save_label(path: str | os.PathLike, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ImageFormatError(f"can only save (H, W) uint8 label maps, got {arr.shape} {arr.dtype}")
    atomic_write_bytes(path, _png_bytes(Image.fromarray(arr, mode="L")))


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_array(arr: np.ndarray) -> str:
    """Hash of the raw pixel bytes (row-major), independent of PNG encoder."""
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()
