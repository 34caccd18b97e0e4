"""Privacy analysis of the pixel-shuffling cipher.

Quantifies what the cipher hides and what it provably leaks: per-sub-block
channel sums survive any pixel shuffle (up to channel relabeling), neighbor
correlation collapses inside shuffled regions, the keyspace grows
factorially in the sub-block area, and a known plaintext/ciphertext pair
pins the key down to a counted ambiguity class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .cipher import BlockGrid, apply_subblock, check_rgb_image, image_tiles, partition_geometry
from .errors import InconsistentPairError
from .keys import ExplicitKeyProvider, SubBlockKey


def subblock_sums(img: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Exact per-channel pixel sums of every sub-block, shape
    (n_blocks, subs_per_block, 3). Pixel shuffling cannot change these;
    channel reordering only permutes the triple."""
    tiles = image_tiles(check_rgb_image(img), grid)
    return tiles.astype(np.int64).sum(axis=3)


@dataclass(frozen=True)
class SumLeakReport:
    total_subblocks: int
    matching_subblocks: int  # channel-sum triples equal as multisets

    @property
    def match_fraction(self) -> float:
        return self.matching_subblocks / self.total_subblocks


def sum_leak(plain: np.ndarray, cipher: np.ndarray, block_size: int, sub_block_size: int) -> SumLeakReport:
    """How many sub-blocks of a plain/cipher pair share their channel-sum
    multiset. 1.0 for a true encryption pair; near 0 for unrelated images."""
    plain = check_rgb_image(plain)
    cipher = check_rgb_image(cipher)
    if plain.shape != cipher.shape:
        raise InconsistentPairError(f"shape mismatch: {plain.shape} vs {cipher.shape}")
    grid = partition_geometry(plain.shape[1], plain.shape[0], block_size, sub_block_size)
    a = np.sort(subblock_sums(plain, grid), axis=2).reshape(-1, 3)
    b = np.sort(subblock_sums(cipher, grid), axis=2).reshape(-1, 3)
    matches = int((a == b).all(axis=1).sum())
    return SumLeakReport(total_subblocks=a.shape[0], matching_subblocks=matches)


def adjacent_correlation(img: np.ndarray) -> dict[str, list[float | None]]:
    """Pearson correlation of neighboring pixel values per channel.

    Keys are 'horizontal', 'vertical', 'diagonal'; each value holds one
    entry per channel, or None where a side of the pairing is constant
    (correlation is undefined there).
    """
    img = check_rgb_image(img).astype(np.float64)
    pairs = {
        "horizontal": (img[:, :-1], img[:, 1:]),
        "vertical": (img[:-1, :], img[1:, :]),
        "diagonal": (img[:-1, :-1], img[1:, 1:]),
    }
    out: dict[str, list[float | None]] = {}
    for name, (a, b) in pairs.items():
        per_channel: list[float | None] = []
        for c in range(3):
            x = a[..., c].ravel()
            y = b[..., c].ravel()
            sx = x.std()
            sy = y.std()
            if sx == 0.0 or sy == 0.0:
                per_channel.append(None)
            else:
                per_channel.append(float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy)))
        out[name] = per_channel
    return out


@dataclass(frozen=True)
class KeyspaceReport:
    sub_block_size: int
    independent_channels: bool
    per_subblock_count: int  # exact
    per_subblock_bits: float
    n_subblocks: int
    total_bits: float


def _log2_exact_int(n: int) -> float:
    # math.log2 overflows above ~2**1024; shift down to 53 significant bits.
    shift = max(0, n.bit_length() - 53)
    return math.log2(n >> shift) + shift


def keyspace(sub_block_size: int, independent_channels: bool = True, n_subblocks: int = 1) -> KeyspaceReport:
    """Exact key count per sub-block and total bits across n_subblocks
    independently keyed sub-blocks.

    Independent channels: three pixel permutations plus a channel
    permutation, (n!)^3 * 3!. Otherwise one shared pixel permutation:
    n! * 3!.
    """
    if sub_block_size < 1:
        raise ValueError("sub-block size must be >= 1")
    if n_subblocks < 1:
        raise ValueError("sub-block count must be >= 1")
    n = sub_block_size * sub_block_size
    fact = math.factorial(n)
    count = (fact ** 3 if independent_channels else fact) * math.factorial(3)
    bits = _log2_exact_int(count)
    return KeyspaceReport(
        sub_block_size=sub_block_size,
        independent_channels=independent_channels,
        per_subblock_count=count,
        per_subblock_bits=bits,
        n_subblocks=n_subblocks,
        total_bits=bits * n_subblocks,
    )


# ---------------------------------------------------------------------------
# Known-plaintext attack: with one plain/cipher pair the key collapses to a
# counted equivalence class; repeated pixel values are the only ambiguity.

@dataclass(frozen=True)
class SubblockAttack:
    key: SubBlockKey  # one representative consistent key
    ambiguity: int  # exact number of keys mapping this plain tile to this cipher tile
    channel_perms: int  # how many channel perms are histogram-consistent


@dataclass
class AttackReport:
    grid: BlockGrid
    per_subblock: list[SubblockAttack]
    provider: ExplicitKeyProvider

    @property
    def total_ambiguity_bits(self) -> float:
        return sum(_log2_exact_int(s.ambiguity) for s in self.per_subblock)

    @property
    def exact_subblocks(self) -> int:
        return sum(1 for s in self.per_subblock if s.ambiguity == 1)


def _attack_tile(plain: np.ndarray, cipher: np.ndarray) -> SubblockAttack:
    n = plain.shape[1]
    plain_hists = [np.bincount(plain[c], minlength=256) for c in range(3)]
    cipher_hists = [np.bincount(cipher[c], minlength=256) for c in range(3)]
    consistent = [
        cp
        for cp in permutations(range(3))
        if all(np.array_equal(cipher_hists[c], plain_hists[cp[c]]) for c in range(3))
    ]
    if not consistent:
        raise InconsistentPairError(
            "no channel assignment matches the value histograms; not an encryption pair"
        )
    cp = consistent[0]
    pixel_perms: list[np.ndarray | None] = [None, None, None]
    ambiguity = len(consistent)
    for c in range(3):
        src = cp[c]
        # Stable value-group matching: the i-th occurrence of value v in the
        # cipher channel gathers the i-th position of v in the plain channel.
        order_plain = np.argsort(plain[src], kind="stable")
        order_cipher = np.argsort(cipher[c], kind="stable")
        perm = np.empty(n, dtype=np.int32)
        perm[order_cipher] = order_plain
        pixel_perms[src] = perm
        counts = cipher_hists[c][cipher_hists[c] > 1]
        for cnt in counts:
            ambiguity *= math.factorial(int(cnt))
    key = SubBlockKey(
        pixel_perms=tuple(pixel_perms),  # type: ignore[arg-type]
        channel_perm=np.asarray(cp, dtype=np.int32),
    )
    if not np.array_equal(apply_subblock(plain, key), cipher):
        raise InconsistentPairError("histograms match but no permutation maps plain to cipher")
    return SubblockAttack(key=key, ambiguity=ambiguity, channel_perms=len(consistent))


def known_plaintext_attack(
    plain: np.ndarray, cipher: np.ndarray, block_size: int, sub_block_size: int
) -> AttackReport:
    """Recover per-sub-block keys from one plain/cipher image pair.

    Returns a representative key per sub-block plus the exact count of
    indistinguishable alternatives. Raises InconsistentPairError when the
    pair cannot be an encryption pair under the declared geometry.
    """
    plain = check_rgb_image(plain)
    cipher = check_rgb_image(cipher)
    if plain.shape != cipher.shape:
        raise InconsistentPairError(f"shape mismatch: {plain.shape} vs {cipher.shape}")
    grid = partition_geometry(plain.shape[1], plain.shape[0], block_size, sub_block_size)
    pt = image_tiles(plain, grid)
    ct = image_tiles(cipher, grid)
    results: list[SubblockAttack] = []
    for b in range(grid.n_blocks):
        for s in range(grid.subs_per_block):
            try:
                results.append(_attack_tile(pt[b, s], ct[b, s]))
            except InconsistentPairError as exc:
                raise InconsistentPairError(f"block {b}, sub-block {s}: {exc}") from exc
    provider = ExplicitKeyProvider([r.key for r in results], grid.subs_per_block)
    return AttackReport(grid=grid, per_subblock=results, provider=provider)
