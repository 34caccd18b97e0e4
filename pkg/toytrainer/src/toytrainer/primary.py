"""Bridge to the encryption tool (the `ppss` command-line program).

The harness never imports the tool's code; everything crosses this module
as files and subprocess invocations: PNGs in, PNGs out, tab-delimited
records on stdout. Before any training run the installed tool is checked
against pinned reference vectors (known seed/image/geometry triples with
the expected ciphertext hashes, plus one case with the full ciphertext
bytes); a tool that fails any vector aborts the harness.
"""

from __future__ import annotations

import hashlib
import shutil
import struct
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pngs
from .errors import CipherMismatchError, HarnessError

# One full-ciphertext pin: 4x4 image, block 4, sub-block 2, all-zero seed.
TINY_VECTOR = {
    "master_hex": "00" * 32,
    "image_id": "img0",
    "width": 4,
    "height": 4,
    "block_size": 4,
    "sub_block_size": 2,
    "plain_hex": "819823c29c427fbf47b89c1b8425602b6affc85ba6b8705a33ea234de4721f9d"
    "3b9088aa916a63b72b3b13053e90caa2",
    "cipher_hex": "ff9c84426a81a670c85a9c7f6025c223982b47bfb81b5bb86a9163e4333b9d3e"
    "90caa21feab7722b4d2305aa90883b13",
}

# Hash pins across geometries (sub-block sizes 1, 2, 4, 8, 16; square and
# non-square images; an empty and a slash-bearing image id).
REFERENCE_VECTORS = [
    # (tag, width, height, block, sub_block, image_id, master_hex, cipher_sha256)
    ("fixA", 16, 16, 8, 2, "alpha",
     "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f",
     "5d8ad1c9030e8c291f8c51e4f026efbef6cca6be0ecaa8bb0232be4b155988d7"),
    ("fixB", 32, 48, 16, 4, "beta/01.png",
     "aa" * 32,
     "893c517987b4d2c4329fa52a70e1c8190f0dd30a64411be7267c6af8ee7b7d66"),
    ("fixC", 48, 48, 16, 16, "gamma",
     "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f",
     "289e591e417bd67a156f40ed74bffb47780a554576e001e8715b6ea1f0ed1a76"),
    ("fixD", 24, 24, 8, 1, "delta",
     "5c" * 32,
     "8843eb4def8201c2ee86e268c3bdf6490812f7c50e8ad731e0414e8a8a8d8714"),
    ("fixE", 64, 64, 16, 8, "",
     "00" * 32,
     "ea04fa3273d8a0bec08c3e08061e79053a7a0304b4b84237c55f14911689c6a3"),
]


def tool_argv() -> list[str]:
    """Command prefix for the encryption tool.

    Prefers the installed console script; falls back to running the module
    with the current interpreter so tests work in any environment where
    the tool's package is importable.
    """
    exe = shutil.which("ppss")
    if exe:
        return [exe]
    return [sys.executable, "-m", "ppss.cli"]


def run_tool(args: list[str], ok_codes: tuple[int, ...] = (0,)) -> subprocess.CompletedProcess:
    proc = subprocess.run(tool_argv() + args, capture_output=True, text=True)
    if proc.returncode not in ok_codes:
        raise HarnessError(
            f"encryption tool failed (exit {proc.returncode}): ppss {' '.join(args)}\n"
            f"stderr: {proc.stderr.strip()}"
        )
    return proc


def reference_pixels(tag: str, width: int, height: int) -> np.ndarray:
    """Deterministic test pattern: SHA-256 counter stream over the tag."""
    need = width * height * 3
    buf = bytearray()
    ctr = 0
    while len(buf) < need:
        buf += hashlib.sha256(b"fixture:" + tag.encode() + struct.pack(">Q", ctr)).digest()
        ctr += 1
    return np.frombuffer(bytes(buf[:need]), dtype=np.uint8).reshape(height, width, 3)


def derive_master_seed(data_seed: int, variant: str, epoch: int = 0) -> bytes:
    """Reproducible 32-byte seed for one (experiment, variant, epoch) cell."""
    return hashlib.sha256(
        f"toytrainer-master:{data_seed}:{variant}:{epoch}".encode()
    ).digest()


def write_seed_file(path: Path, seed: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(seed)
    path.chmod(0o600)
    return path


_validated = False


def validate_cipher_tool(force: bool = False) -> None:
    """Assert the installed tool reproduces every pinned reference vector.

    Runs once per process (cached) unless force=True. Raises
    CipherMismatchError naming the first failing vector.
    """
    global _validated
    if _validated and not force:
        return
    _validated = False  # a failed re-check must not leave a stale pass
    with tempfile.TemporaryDirectory(prefix="cipher-check-") as td:
        tmp = Path(td)

        # Full-byte pin first: strongest check, tiniest image.
        tv = TINY_VECTOR
        plain = np.frombuffer(bytes.fromhex(tv["plain_hex"]), dtype=np.uint8)
        plain = plain.reshape(tv["height"], tv["width"], 3)
        pngs.save_rgb(tmp / "tiny-plain.png", plain)
        seed_path = write_seed_file(tmp / "tiny.seed", bytes.fromhex(tv["master_hex"]))
        run_tool([
            "--quiet", "encrypt",
            "--in", str(tmp / "tiny-plain.png"), "--out", str(tmp / "tiny-cipher.png"),
            "--block-size", str(tv["block_size"]), "--sub-block-size", str(tv["sub_block_size"]),
            "--mode", "seeded", "--image-id", tv["image_id"], "--seed-file", str(seed_path),
        ])
        got = pngs.load_rgb(tmp / "tiny-cipher.png")
        if got.tobytes().hex() != tv["cipher_hex"]:
            raise CipherMismatchError(
                "encryption tool does not reproduce the full-byte reference vector; "
                "refusing to train with it"
            )

        for tag, width, height, block, sub, image_id, master_hex, want in REFERENCE_VECTORS:
            pngs.save_rgb(tmp / f"{tag}-plain.png", reference_pixels(tag, width, height))
            seed_path = write_seed_file(tmp / f"{tag}.seed", bytes.fromhex(master_hex))
            run_tool([
                "--quiet", "encrypt",
                "--in", str(tmp / f"{tag}-plain.png"), "--out", str(tmp / f"{tag}-cipher.png"),
                "--block-size", str(block), "--sub-block-size", str(sub),
                "--mode", "seeded", f"--image-id={image_id}", "--seed-file", str(seed_path),
            ])
            got_hash = pngs.sha256_pixels(pngs.load_rgb(tmp / f"{tag}-cipher.png"))
            if got_hash != want:
                raise CipherMismatchError(
                    f"encryption tool does not reproduce reference vector {tag} "
                    f"({width}x{height}, block {block}, sub-block {sub}); refusing to train with it"
                )
    _validated = True


def encrypt_split(
    plain_dir: Path,
    out_dir: Path,
    block_size: int,
    sub_block_size: int,
    seed: bytes,
    labels_subdir: str = "labels",
) -> None:
    """Encrypt a split directory with per-image keys (seeded mode keys each
    image by its file name). Labels are carried along unencrypted."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(prefix="split-", suffix=".seed", delete=False, dir=out_dir) as f:
        seed_path = Path(f.name)
    try:
        write_seed_file(seed_path, seed)
        run_tool([
            "--quiet", "dataset", "encrypt",
            "--in", str(plain_dir), "--out", str(out_dir),
            "--block-size", str(block_size), "--sub-block-size", str(sub_block_size),
            "--mode", "seeded", "--labels-subdir", labels_subdir,
            "--seed-file", str(seed_path),
        ])
    finally:
        seed_path.unlink(missing_ok=True)


@dataclass
class ToolScores:
    aacc: float
    macc: float
    miou: float
    per_class: dict[int, tuple[float, float]]  # class id -> (recall, iou)


def score_predictions(gt_dir: Path, pred_dir: Path, num_classes: int) -> ToolScores:
    """Score a directory of predicted label maps with the tool's metrics
    command and parse its tab-delimited output."""
    proc = run_tool([
        "--output-format", "machine", "metrics",
        "--gt", str(gt_dir), "--pred", str(pred_dir),
        "--classes", str(num_classes), "--no-figure",
    ])
    summary: dict[str, float] = {}
    per_class: dict[int, tuple[float, float]] = {}
    for line in proc.stdout.splitlines():
        parts = line.rstrip("\n").split("\t")
        if parts[0] in ("aAcc", "mAcc", "mIoU"):
            summary[parts[0]] = float(parts[1])
        elif parts[0] == "class":
            per_class[int(parts[1])] = (float(parts[3]), float(parts[4]))
    for key in ("aAcc", "mAcc", "mIoU"):
        if key not in summary:
            raise HarnessError(f"metrics output is missing the {key} record:\n{proc.stdout}")
    return ToolScores(
        aacc=summary["aAcc"], macc=summary["mAcc"], miou=summary["mIoU"], per_class=per_class
    )
