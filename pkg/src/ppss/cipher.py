"""Block/sub-block pixel shuffling over 8-bit RGB images.

An image is partitioned into square blocks, each block into square
sub-blocks. Within every sub-block each source channel's pixels are
shuffled by that channel's permutation, then the channels themselves are
reordered. Only pixel positions move; values never change, so every
sub-block keeps its exact multiset of bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ImageFormatError
from .keys import SubBlockKey


@dataclass(frozen=True)
class BlockGrid:
    """Partition of a width x height image into blocks and sub-blocks."""

    width: int
    height: int
    block_size: int
    sub_block_size: int

    @property
    def blocks_x(self) -> int:
        return self.width // self.block_size

    @property
    def blocks_y(self) -> int:
        return self.height // self.block_size

    @property
    def n_blocks(self) -> int:
        return self.blocks_x * self.blocks_y

    @property
    def subs_per_side(self) -> int:
        return self.block_size // self.sub_block_size

    @property
    def subs_per_block(self) -> int:
        return self.subs_per_side ** 2

    @property
    def pixels_per_subblock(self) -> int:
        return self.sub_block_size ** 2

    @property
    def total_subblocks(self) -> int:
        return self.n_blocks * self.subs_per_block


def partition_geometry(width: int, height: int, block_size: int, sub_block_size: int) -> BlockGrid:
    """Validate and build the block grid; every misfit names the offending
    dimension so callers can report actionable errors."""
    if block_size < 1:
        raise GeometryError(f"block size must be >= 1, got {block_size}")
    if sub_block_size < 1:
        raise GeometryError(f"sub-block size must be >= 1, got {sub_block_size}")
    if block_size % sub_block_size != 0:
        raise GeometryError(
            f"block size {block_size} is not divisible by sub-block size {sub_block_size}"
        )
    if width < 1 or height < 1:
        raise GeometryError(f"image dimensions must be positive, got {width}x{height}")
    if width % block_size != 0:
        raise GeometryError(f"image width {width} is not divisible by block size {block_size}")
    if height % block_size != 0:
        raise GeometryError(f"image height {height} is not divisible by block size {block_size}")
    return BlockGrid(width=width, height=height, block_size=block_size, sub_block_size=sub_block_size)


def check_rgb_image(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageFormatError(f"expected an RGB array of shape (H, W, 3), got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ImageFormatError(f"expected 8-bit channel depth (uint8), got {arr.dtype}")
    return arr


def image_tiles(img: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """View the image as sub-block tiles of shape
    (n_blocks, subs_per_block, 3, ms*ms), channels first, all indices
    row-major (blocks over the image, sub-blocks within a block, pixels
    within a sub-block)."""
    by, bx = grid.blocks_y, grid.blocks_x
    sps, ms = grid.subs_per_side, grid.sub_block_size
    t = img.reshape(by, sps, ms, bx, sps, ms, 3)
    t = t.transpose(0, 3, 1, 4, 6, 2, 5)
    return np.ascontiguousarray(t).reshape(grid.n_blocks, grid.subs_per_block, 3, ms * ms)


def tiles_to_image(tiles: np.ndarray, grid: BlockGrid) -> np.ndarray:
    by, bx = grid.blocks_y, grid.blocks_x
    sps, ms = grid.subs_per_side, grid.sub_block_size
    t = tiles.reshape(by, bx, sps, sps, 3, ms, ms)
    t = t.transpose(0, 2, 5, 1, 3, 6, 4)
    return np.ascontiguousarray(t).reshape(grid.height, grid.width, 3)


def apply_subblock(tile: np.ndarray, key: SubBlockKey) -> np.ndarray:
    """Shuffle one sub-block tile of shape (3, ms*ms).

    Output channel c takes source channel key.channel_perm[c], with that
    source channel's pixel permutation applied as a gather.
    """
    tile = np.asarray(tile)
    if tile.ndim != 2 or tile.shape[0] != 3:
        raise ImageFormatError(f"sub-block tile must have shape (3, n), got {tile.shape}")
    cp = key.channel_perm
    out = np.empty_like(tile)
    for c in range(3):
        src = int(cp[c])
        out[c] = tile[src][key.pixel_perms[src]]
    return out


def invert_subblock(tile: np.ndarray, key: SubBlockKey) -> np.ndarray:
    """Undo apply_subblock under the same key."""
    return apply_subblock(tile, key.invert())


def _gather_tiles(tiles: np.ndarray, pix: np.ndarray, chan: np.ndarray) -> np.ndarray:
    # out[b,s,c,i] = tiles[b,s,cp,pp[cp][i]] with cp = chan[b,s,c]
    picked = np.take_along_axis(tiles, chan[:, :, :, None], axis=2)
    perms = np.take_along_axis(pix, chan[:, :, :, None], axis=2)
    return np.take_along_axis(picked, perms, axis=3)


def _invert_key_arrays(pix: np.ndarray, chan: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Same construction as SubBlockKey.invert, vectorized: the decrypt
    # channel perm is the inverse, and decrypt pixel perm m is the inverse
    # of the encrypt perm of source channel chan[m].
    inv_chan = np.argsort(chan, axis=-1)
    reordered = np.take_along_axis(pix, chan[:, :, :, None], axis=2)
    inv_pix = np.argsort(reordered, axis=-1)
    return inv_pix, inv_chan


def encrypt_image(img: np.ndarray, provider, block_size: int, sub_block_size: int) -> np.ndarray:
    """Encrypt a (H, W, 3) uint8 array; returns a new array of equal shape."""
    img = check_rgb_image(img)
    grid = partition_geometry(img.shape[1], img.shape[0], block_size, sub_block_size)
    pix, chan = provider.key_arrays(grid.n_blocks, grid.subs_per_block, grid.sub_block_size)
    tiles = image_tiles(img, grid)
    return tiles_to_image(_gather_tiles(tiles, np.asarray(pix), np.asarray(chan)), grid)


def decrypt_image(img: np.ndarray, provider, block_size: int, sub_block_size: int) -> np.ndarray:
    """Inverse of encrypt_image under the same provider and geometry."""
    img = check_rgb_image(img)
    grid = partition_geometry(img.shape[1], img.shape[0], block_size, sub_block_size)
    pix, chan = provider.key_arrays(grid.n_blocks, grid.subs_per_block, grid.sub_block_size)
    inv_pix, inv_chan = _invert_key_arrays(np.asarray(pix), np.asarray(chan))
    tiles = image_tiles(img, grid)
    return tiles_to_image(_gather_tiles(tiles, inv_pix, inv_chan), grid)
