"""Permutation key material for the block/sub-block image cipher.

Every shuffle is driven by a SHA-256 counter keystream whose seed binds
(master secret, image id, block index, sub-block index, purpose). Equal
inputs give byte-identical keys on every platform and run; distinct inputs
give independent streams. Purposes 0/1/2 feed the pixel shuffle of source
channel 0/1/2, purpose 3 feeds the channel reordering.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ManifestError

FORMAT_VERSION = "PPSS-v1"
_DOMAIN = FORMAT_VERSION.encode("ascii")
_U32_SPAN = 1 << 32

PURPOSE_CHANNEL = 3


def new_master_seed() -> bytes:
    """Draw a fresh 32-byte master secret from the OS entropy source."""
    return secrets.token_bytes(32)


def check_master_seed(master: bytes) -> bytes:
    if not isinstance(master, (bytes, bytearray)) or len(master) != 32:
        raise ValueError(f"master seed must be exactly 32 bytes, got {len(master) if isinstance(master, (bytes, bytearray)) else type(master).__name__}")
    return bytes(master)


def master_fingerprint(master: bytes) -> str:
    """Hex SHA-256 of the master seed; safe to store in manifests."""
    return hashlib.sha256(check_master_seed(master)).hexdigest()


def check_image_id(image_id: str) -> str:
    if "\x00" in image_id:
        raise ValueError("image id must not contain NUL bytes")
    return image_id


@dataclass(frozen=True)
class KeyDerivationContext:
    """Identifies one keystream: which image, block, sub-block, and purpose."""

    image_id: str
    block_index: int
    subblock_index: int
    purpose: int

    def validate(self) -> "KeyDerivationContext":
        check_image_id(self.image_id)
        if not (0 <= self.block_index < _U32_SPAN):
            raise ValueError(f"block index {self.block_index} out of range")
        if not (0 <= self.subblock_index < _U32_SPAN):
            raise ValueError(f"sub-block index {self.subblock_index} out of range")
        if self.purpose not in (0, 1, 2, 3):
            raise ValueError(f"purpose must be 0..3, got {self.purpose}")
        return self


def _seed_prefix(master: bytes, image_id: str) -> "hashlib._Hash":
    # Sentinel-separated variable-length fields keep the encoding injective;
    # image ids containing NUL are rejected at validation.
    h = hashlib.sha256()
    h.update(_DOMAIN)
    h.update(b"\x00")
    h.update(check_master_seed(master))
    h.update(b"\x00")
    h.update(check_image_id(image_id).encode("utf-8"))
    h.update(b"\x00")
    return h


def derive_stream_seed(master: bytes, ctx: KeyDerivationContext) -> bytes:
    """32-byte keystream seed for one (image, block, sub-block, purpose)."""
    ctx.validate()
    h = _seed_prefix(master, ctx.image_id)
    h.update(struct.pack(">IIB", ctx.block_index, ctx.subblock_index, ctx.purpose))
    return h.digest()


def stream_bytes(stream_seed: bytes, counter: int) -> bytes:
    """Chunk `counter` of the keystream: SHA-256(seed || counter as u64 BE)."""
    return hashlib.sha256(stream_seed + struct.pack(">Q", counter)).digest()


class Sha256Keystream:
    """Reads the keystream as consecutive 4-byte big-endian words."""

    def __init__(self, stream_seed: bytes):
        self._seed = stream_seed
        self._counter = 0
        self._words: list[int] = []
        self._pos = 0

    def read_u32(self) -> int:
        if self._pos == len(self._words):
            chunk = stream_bytes(self._seed, self._counter)
            self._counter += 1
            self._words = list(struct.unpack(">8I", chunk))
            self._pos = 0
        w = self._words[self._pos]
        self._pos += 1
        return w


def sample_permutation(stream, n: int) -> np.ndarray:
    """Uniform permutation of [0, n) drawn from the keystream.

    Fisher-Yates iterating i from n-1 down to 1; each draw reads consecutive
    u32 words, rejecting w >= floor(2^32/(i+1))*(i+1) so that j = w mod (i+1)
    is exactly uniform. Returns the gather map (output slot i takes input
    slot map[i]).
    """
    if n < 1:
        raise ValueError("permutation length must be >= 1")
    arr = list(range(n))
    for i in range(n - 1, 0, -1):
        bound = i + 1
        limit = (_U32_SPAN // bound) * bound
        while True:
            w = stream.read_u32()
            if w < limit:
                break
        j = w % bound
        arr[i], arr[j] = arr[j], arr[i]
    return np.asarray(arr, dtype=np.int32)


def is_permutation(arr: np.ndarray) -> bool:
    a = np.asarray(arr)
    return a.ndim == 1 and np.array_equal(np.sort(a), np.arange(len(a)))


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    return np.argsort(np.asarray(perm)).astype(np.int32)


@dataclass(eq=False)
class SubBlockKey:
    """Shuffle key for one sub-block: three per-source-channel pixel
    permutations of length ms*ms plus one channel permutation of length 3."""

    pixel_perms: tuple[np.ndarray, np.ndarray, np.ndarray]
    channel_perm: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubBlockKey):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.pixel_perms, other.pixel_perms)) and np.array_equal(
            self.channel_perm, other.channel_perm
        )

    @property
    def sub_block_size(self) -> int:
        return int(round(len(self.pixel_perms[0]) ** 0.5))

    def validate(self) -> "SubBlockKey":
        n = len(self.pixel_perms[0])
        if self.sub_block_size ** 2 != n:
            raise ValueError(f"pixel permutation length {n} is not a square")
        for c, p in enumerate(self.pixel_perms):
            if len(p) != n or not is_permutation(p):
                raise ValueError(f"pixel perm for channel {c} is not a bijection on [0, {n})")
        if len(self.channel_perm) != 3 or not is_permutation(self.channel_perm):
            raise ValueError("channel perm is not a bijection on [0, 3)")
        return self

    def invert(self) -> "SubBlockKey":
        """Key whose application undoes this one."""
        cp = np.asarray(self.channel_perm)
        inv_cp = invert_permutation(cp)
        inv_pix = tuple(invert_permutation(self.pixel_perms[int(cp[m])]) for m in range(3))
        return SubBlockKey(pixel_perms=inv_pix, channel_perm=inv_cp)

    @classmethod
    def identity(cls, sub_block_size: int) -> "SubBlockKey":
        n = sub_block_size * sub_block_size
        ident = np.arange(n, dtype=np.int32)
        return cls(
            pixel_perms=(ident.copy(), ident.copy(), ident.copy()),
            channel_perm=np.arange(3, dtype=np.int32),
        )


def derive_subblock_key(
    master: bytes, image_id: str, block_index: int, subblock_index: int, sub_block_size: int
) -> SubBlockKey:
    """Derive one sub-block's key; purposes 0..2 drive the pixel shuffles,
    purpose 3 the channel reordering, each from its own keystream."""
    if sub_block_size < 1:
        raise ValueError("sub-block size must be >= 1")
    n = sub_block_size * sub_block_size
    pixel_perms = []
    for c in range(3):
        ctx = KeyDerivationContext(image_id, block_index, subblock_index, c)
        pixel_perms.append(sample_permutation(Sha256Keystream(derive_stream_seed(master, ctx)), n))
    ctx = KeyDerivationContext(image_id, block_index, subblock_index, PURPOSE_CHANNEL)
    channel_perm = sample_permutation(Sha256Keystream(derive_stream_seed(master, ctx)), 3)
    return SubBlockKey(pixel_perms=tuple(pixel_perms), channel_perm=channel_perm)


# ---------------------------------------------------------------------------
# Batched derivation: same bits as derive_subblock_key, amortized across all
# sub-blocks of an image (hot path for large images).

def _batch_stream_words(seeds: list[bytes], n_words: int) -> np.ndarray:
    """Matrix of the first n_words u32 words of each stream, plus a mask of
    rows whose optimistic read hit the (astronomically rare) rejection path
    and must be resampled exactly."""
    n_chunks = (n_words * 4 + 31) // 32
    rows = bytearray()
    for seed in seeds:
        for ctr in range(n_chunks):
            rows += stream_bytes(seed, ctr)
    words = np.frombuffer(bytes(rows), dtype=">u4").reshape(len(seeds), n_chunks * 8)
    return words[:, :n_words
                 ].astype(np.uint32)


def _batch_permutations(seeds: list[bytes], n: int) -> np.ndarray:
    """sample_permutation for many streams at once; bit-exact with the
    scalar path (rows that would reject a word fall back to it)."""
    k = len(seeds)
    if n == 1:
        return np.zeros((k, 1), dtype=np.int32)
    bounds = np.arange(n, 1, -1, dtype=np.uint64)  # i+1 for i = n-1 .. 1
    limits = ((_U32_SPAN // bounds) * bounds).astype(np.uint64)
    words = _batch_stream_words(seeds, n - 1).astype(np.uint64)
    rejected = np.nonzero((words >= limits[None, :]).any(axis=1))[0]
    draws = (words % bounds[None, :]).astype(np.int64)
    out = np.tile(np.arange(n, dtype=np.int32), (k, 1))
    rows = np.arange(k)
    for t, i in enumerate(range(n - 1, 0, -1)):
        j = draws[:, t]
        vi = out[rows, i].copy()
        out[rows, i] = out[rows, j]
        out[rows, j] = vi
    for r in rejected:
        out[r] = sample_permutation(Sha256Keystream(seeds[r]), n)
    return out


def derive_image_key_arrays(
    master: bytes, image_id: str, n_blocks: int, subs_per_block: int, sub_block_size: int
) -> tuple[np.ndarray, np.ndarray]:
    """All sub-block keys of one image as arrays.

    Returns (pixel_perms, channel_perms) with shapes
    (n_blocks, subs_per_block, 3, ms*ms) and (n_blocks, subs_per_block, 3).
    """
    check_master_seed(master)
    check_image_id(image_id)
    n = sub_block_size * sub_block_size
    prefix = _seed_prefix(master, image_id)

    def seeds_for(purpose: int) -> list[bytes]:
        out = []
        for b in range(n_blocks):
            for s in range(subs_per_block):
                h = prefix.copy()
                h.update(struct.pack(">IIB", b, s, purpose))
                out.append(h.digest())
        return out

    total = n_blocks * subs_per_block
    if n == 1:
        pix = np.zeros((total, 3, 1), dtype=np.int32)
    else:
        per_purpose = [_batch_permutations(seeds_for(c), n) for c in range(3)]
        pix = np.stack(per_purpose, axis=1)
    chan = _batch_permutations(seeds_for(PURPOSE_CHANNEL), 3)
    return (
        pix.reshape(n_blocks, subs_per_block, 3, n),
        chan.reshape(n_blocks, subs_per_block, 3),
    )


# ---------------------------------------------------------------------------
# Key providers: uniform way for the cipher to ask for per-sub-block keys.

class SeededKeyProvider:
    """Keys derived on demand from a master seed; nothing to store."""

    mode = "seeded"

    def __init__(self, master: bytes, image_id: str):
        self.master = check_master_seed(master)
        self.image_id = check_image_id(image_id)

    def subblock_key(self, block_index: int, subblock_index: int, sub_block_size: int) -> SubBlockKey:
        return derive_subblock_key(self.master, self.image_id, block_index, subblock_index, sub_block_size)

    def key_arrays(self, n_blocks: int, subs_per_block: int, sub_block_size: int):
        return derive_image_key_arrays(self.master, self.image_id, n_blocks, subs_per_block, sub_block_size)


class ExplicitKeyProvider:
    """Self-contained table of keys, one per sub-block in row-major order
    (blocks row-major over the image, sub-blocks row-major within a block).

    Internally the table is a pair of index arrays; the SubBlockKey list
    view is materialized only when asked for (e.g. to serialize a manifest).
    """

    mode = "explicit"

    def __init__(self, keys: list[SubBlockKey], subs_per_block: int):
        if not keys:
            raise ValueError("key table must not be empty")
        n = len(keys[0].pixel_perms[0])
        for k in keys:
            if len(k.pixel_perms[0]) != n:
                raise ValueError("all keys in a table must share one sub-block size")
        pix = np.stack([np.stack(k.pixel_perms).astype(np.int32) for k in keys])
        chan = np.stack([np.asarray(k.channel_perm, dtype=np.int32) for k in keys])
        self._init_arrays(pix, chan, subs_per_block)
        self._keys = list(keys)

    def _init_arrays(self, pix: np.ndarray, chan: np.ndarray, subs_per_block: int) -> None:
        self._pix = pix  # (total, 3, n)
        self._chan = chan  # (total, 3)
        self.subs_per_block = subs_per_block
        self._keys: list[SubBlockKey] | None = None

    @classmethod
    def from_arrays(cls, pix: np.ndarray, chan: np.ndarray, subs_per_block: int) -> "ExplicitKeyProvider":
        self = cls.__new__(cls)
        self._init_arrays(
            np.asarray(pix, dtype=np.int32).reshape(-1, 3, pix.shape[-1]),
            np.asarray(chan, dtype=np.int32).reshape(-1, 3),
            subs_per_block,
        )
        return self

    def __len__(self) -> int:
        return self._pix.shape[0]

    @property
    def keys(self) -> list[SubBlockKey]:
        if self._keys is None:
            self._keys = [
                SubBlockKey(
                    pixel_perms=tuple(self._pix[i, c] for c in range(3)),
                    channel_perm=self._chan[i],
                )
                for i in range(self._pix.shape[0])
            ]
        return self._keys

    def subblock_key(self, block_index: int, subblock_index: int, sub_block_size: int) -> SubBlockKey:
        i = block_index * self.subs_per_block + subblock_index
        return SubBlockKey(
            pixel_perms=tuple(self._pix[i, c] for c in range(3)), channel_perm=self._chan[i]
        )

    def key_arrays(self, n_blocks: int, subs_per_block: int, sub_block_size: int):
        if subs_per_block != self.subs_per_block or n_blocks * subs_per_block != len(self):
            raise ValueError(
                f"key table holds {len(self)} keys but grid needs {n_blocks * subs_per_block}"
            )
        if sub_block_size * sub_block_size != self._pix.shape[-1]:
            raise ValueError(
                f"key table is for {self._pix.shape[-1]}-pixel sub-blocks, not {sub_block_size}x{sub_block_size}"
            )
        n = self._pix.shape[-1]
        return (
            self._pix.reshape(n_blocks, subs_per_block, 3, n),
            self._chan.reshape(n_blocks, subs_per_block, 3),
        )


class SharedKeyProvider:
    """One key applied to every sub-block (the low-keyspace shared mode)."""

    mode = "shared"

    def __init__(self, key: SubBlockKey):
        self.key = key.validate()

    def subblock_key(self, block_index: int, subblock_index: int, sub_block_size: int) -> SubBlockKey:
        return self.key

    def key_arrays(self, n_blocks: int, subs_per_block: int, sub_block_size: int):
        n = sub_block_size * sub_block_size
        pix = np.broadcast_to(
            np.stack(self.key.pixel_perms).astype(np.int32), (n_blocks, subs_per_block, 3, n)
        )
        chan = np.broadcast_to(self.key.channel_perm.astype(np.int32), (n_blocks, subs_per_block, 3))
        return pix, chan


def generate_random_image_key(grid, entropy: bytes | None = None) -> ExplicitKeyProvider:
    """Fresh explicit key table for one image, one key per sub-block.

    Keys come from a keystream seeded with OS entropy (or the 32 bytes passed
    as `entropy`); no master seed is involved and the table stands alone.
    """
    if entropy is None:
        entropy = secrets.token_bytes(32)  # raises if the OS entropy source is unavailable
    pix, chan = derive_image_key_arrays(
        check_master_seed(entropy), "", grid.n_blocks, grid.subs_per_block, grid.sub_block_size
    )
    return ExplicitKeyProvider.from_arrays(pix, chan, grid.subs_per_block)


# ---------------------------------------------------------------------------
# Key manifest: the serialized form of one image's key material.

@dataclass(eq=False)
class ImageKeyManifest:
    """Binds an image id to its key material and geometry.

    Seeded mode stores only a fingerprint of the master seed (the seed itself
    only when explicitly exported); explicit mode stores the full per-sub-block
    permutation table in row-major sub-block order.
    """

    image_id: str
    block_size: int
    sub_block_size: int
    mode: str  # "seeded" | "explicit"
    width: int | None = None
    height: int | None = None
    seed_fingerprint: str | None = None
    master_seed: bytes | None = None
    subblock_keys: list[SubBlockKey] | None = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageKeyManifest):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.block_size == other.block_size
            and self.sub_block_size == other.sub_block_size
            and self.mode == other.mode
            and self.width == other.width
            and self.height == other.height
            and self.seed_fingerprint == other.seed_fingerprint
            and self.master_seed == other.master_seed
            and self.subblock_keys == other.subblock_keys
        )


def serialize_manifest(manifest: ImageKeyManifest) -> bytes:
    doc: dict = {
        "version": FORMAT_VERSION,
        "image_id": manifest.image_id,
        "block_size": manifest.block_size,
        "sub_block_size": manifest.sub_block_size,
        "mode": manifest.mode,
    }
    if manifest.width is not None:
        doc["width"] = manifest.width
        doc["height"] = manifest.height
    if manifest.mode == "seeded":
        if manifest.seed_fingerprint is None:
            raise ManifestError("seeded manifest needs a master-seed fingerprint")
        doc["seed_fingerprint"] = manifest.seed_fingerprint
        if manifest.master_seed is not None:
            doc["master_seed"] = manifest.master_seed.hex()
    elif manifest.mode == "explicit":
        if manifest.subblock_keys is None:
            raise ManifestError("explicit manifest needs the per-sub-block key table")
        doc["subblock_keys"] = [
            [k.pixel_perms[0].tolist(), k.pixel_perms[1].tolist(), k.pixel_perms[2].tolist(), k.channel_perm.tolist()]
            for k in manifest.subblock_keys
        ]
    else:
        raise ManifestError(f"unknown key mode {manifest.mode!r}")
    return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")


def _parse_perm(raw, length: int, what: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=np.int64)
    if arr.shape != (length,) or not is_permutation(arr):
        raise ManifestError(f"{what} is not a bijection on [0, {length})")
    return arr.astype(np.int32)


def parse_manifest(data: bytes) -> ImageKeyManifest:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"manifest is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("manifest root must be an object")
    if doc.get("version") != FORMAT_VERSION:
        raise ManifestError(f"unknown manifest version {doc.get('version')!r} (expected {FORMAT_VERSION!r})")
    try:
        image_id = check_image_id(str(doc["image_id"]))
        block_size = int(doc["block_size"])
        sub_block_size = int(doc["sub_block_size"])
        mode = doc["mode"]
    except KeyError as exc:
        raise ManifestError(f"manifest is missing field {exc}") from exc
    if block_size < 1 or sub_block_size < 1 or block_size % sub_block_size != 0:
        raise ManifestError(
            f"geometry mismatch: block size {block_size} is not a positive multiple of sub-block size {sub_block_size}"
        )
    width = doc.get("width")
    height = doc.get("height")
    if (width is None) != (height is None):
        raise ManifestError("width and height must be given together")
    if width is not None:
        width, height = int(width), int(height)
        if width % block_size or height % block_size:
            raise ManifestError(f"geometry mismatch: {width}x{height} is not divisible by block size {block_size}")

    manifest = ImageKeyManifest(
        image_id=image_id, block_size=block_size, sub_block_size=sub_block_size, mode=mode, width=width, height=height
    )
    if mode == "seeded":
        fp = doc.get("seed_fingerprint")
        if not isinstance(fp, str) or len(fp) != 64:
            raise ManifestError("seeded manifest needs a 64-hex-char seed fingerprint")
        manifest.seed_fingerprint = fp
        if "master_seed" in doc:
            seed = bytes.fromhex(doc["master_seed"])
            if master_fingerprint(seed) != fp:
                raise ManifestError("exported master seed does not match its fingerprint")
            manifest.master_seed = seed
    elif mode == "explicit":
        raw_keys = doc.get("subblock_keys")
        if not isinstance(raw_keys, list) or not raw_keys:
            raise ManifestError("explicit manifest needs a non-empty subblock_keys array")
        if width is None:
            raise ManifestError("explicit manifest needs width and height")
        expected = (width // block_size) * (height // block_size) * (block_size // sub_block_size) ** 2
        if len(raw_keys) != expected:
            raise ManifestError(
                f"geometry mismatch: manifest holds {len(raw_keys)} sub-block keys but geometry needs {expected}"
            )
        n = sub_block_size * sub_block_size
        keys = []
        for idx, entry in enumerate(raw_keys):
            if not isinstance(entry, list) or len(entry) != 4:
                raise ManifestError(f"sub-block entry {idx} must be [pixel_perm_0, pixel_perm_1, pixel_perm_2, channel_perm]")
            pix = tuple(_parse_perm(entry[c], n, f"pixel perm {c} of sub-block {idx}") for c in range(3))
            chan = _parse_perm(entry[3], 3, f"channel perm of sub-block {idx}")
            keys.append(SubBlockKey(pixel_perms=pix, channel_perm=chan))
        manifest.subblock_keys = keys
    else:
        raise ManifestError(f"unknown key mode {mode!r}")
    return manifest


def provider_from_manifest(manifest: ImageKeyManifest, master: bytes | None = None):
    """Turn a parsed manifest into a key provider usable by the cipher."""
    if manifest.mode == "explicit":
        spb = (manifest.block_size // manifest.sub_block_size) ** 2
        return ExplicitKeyProvider(manifest.subblock_keys, spb)
    seed = master if master is not None else manifest.master_seed
    if seed is None:
        raise ManifestError("seeded manifest requires the master seed to reconstruct keys")
    if master_fingerprint(seed) != manifest.seed_fingerprint:
        raise ManifestError("master seed does not match the manifest fingerprint")
    return SeededKeyProvider(seed, manifest.image_id)
