"""Batch encryption of image/label datasets with integrity manifests.

Layout convention: the input directory holds RGB PNGs (flat, sorted by
name); an optional labels subdirectory holds same-named single-channel
label maps. The output mirrors that layout and adds manifest.json, which
records geometry, key mode, and per-image SHA-256 hashes of the raw pixel
bytes before and after encryption so a dataset can later be verified
without the original files. Labels are never shuffled; they are resized
(nearest neighbor) and copied so they stay aligned with the images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import pngio
from .cipher import decrypt_image, encrypt_image, partition_geometry
from .errors import GeometryError, ImageFormatError, ManifestError, PpssError
from .keys import (
    FORMAT_VERSION,
    ImageKeyManifest,
    SeededKeyProvider,
    check_master_seed,
    generate_random_image_key,
    master_fingerprint,
    parse_manifest,
    provider_from_manifest,
    serialize_manifest,
)

MANIFEST_NAME = "manifest.json"
KEYS_SUBDIR = "keys"


@dataclass
class DatasetJob:
    in_dir: Path
    out_dir: Path
    sub_block_size: int
    block_size: int = 16
    mode: str = "seeded"  # "seeded" | "explicit"
    master: bytes | None = None
    resize: tuple[int, int] | None = None  # (width, height)
    labels_subdir: str | None = None
    on_error: str = "abort"  # "abort" | "skip"


@dataclass
class DatasetReport:
    manifest_path: Path
    processed: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def list_images(dir_path: Path) -> list[Path]:
    return sorted(p for p in dir_path.glob("*.png") if p.is_file())


def _resize_rgb(arr: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    if (arr.shape[1], arr.shape[0]) == size:
        return arr
    im = Image.fromarray(arr, mode="RGB").resize(size, Image.BILINEAR)
    return np.asarray(im, dtype=np.uint8)


def _resize_label(arr: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    if (arr.shape[1], arr.shape[0]) == size:
        return arr
    im = Image.fromarray(arr, mode="L").resize(size, Image.NEAREST)
    return np.asarray(im, dtype=np.uint8)


def encrypt_dataset(job: DatasetJob, threads: int = 1) -> DatasetReport:
    if job.mode not in ("seeded", "explicit"):
        raise ValueError(f"unknown key mode {job.mode!r}")
    if job.mode == "seeded":
        check_master_seed(job.master)
    if job.on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {job.on_error!r}")
    in_dir = Path(job.in_dir)
    out_dir = Path(job.out_dir)
    if not in_dir.is_dir():
        raise FileNotFoundError(f"input directory {in_dir} does not exist")
    images = list_images(in_dir)
    if not images:
        raise FileNotFoundError(f"no .png images found in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    doc: dict = {
        "version": FORMAT_VERSION,
        "kind": "dataset",
        "block_size": job.block_size,
        "sub_block_size": job.sub_block_size,
        "mode": job.mode,
        "resize": list(job.resize) if job.resize else None,
        "labels_subdir": job.labels_subdir,
        "images": [],
    }
    if job.mode == "seeded":
        doc["seed_fingerprint"] = master_fingerprint(job.master)

    report = DatasetReport(manifest_path=out_dir / MANIFEST_NAME)
    if threads > 1:
        # Per-image work is independent; writes are per-file atomic, the
        # manifest is assembled afterwards in input order.
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = [(src.name, pool.submit(_encrypt_one, job, src, out_dir)) for src in images]
            outcomes = []
            for name, fut in pending:
                try:
                    outcomes.append((name, fut.result(), None))
                except (GeometryError, ImageFormatError) as exc:
                    outcomes.append((name, None, exc))
    else:
        outcomes = []
        for src in images:
            try:
                outcomes.append((src.name, _encrypt_one(job, src, out_dir), None))
            except (GeometryError, ImageFormatError) as exc:
                if job.on_error == "abort":
                    raise
                outcomes.append((src.name, None, exc))
    for name, entry, exc in outcomes:
        if exc is not None:
            if job.on_error == "abort":
                raise exc
            report.skipped.append((name, str(exc)))
            continue
        doc["images"].append(entry)
        report.processed.append(name)
    if not doc["images"]:
        raise PpssError("every image failed; no dataset was produced")
    pngio.atomic_write_bytes(report.manifest_path, json.dumps(doc, indent=2, sort_keys=True).encode())
    return report


def _encrypt_one(job: DatasetJob, src: Path, out_dir: Path) -> dict:
    name = src.name
    arr = pngio.load_rgb(src)
    if job.resize:
        arr = _resize_rgb(arr, job.resize)
    grid = partition_geometry(arr.shape[1], arr.shape[0], job.block_size, job.sub_block_size)

    if job.mode == "seeded":
        provider = SeededKeyProvider(job.master, name)
        key_ref = None
    else:
        provider = generate_random_image_key(grid)
        key_manifest = ImageKeyManifest(
            image_id=name,
            block_size=job.block_size,
            sub_block_size=job.sub_block_size,
            mode="explicit",
            width=grid.width,
            height=grid.height,
            subblock_keys=provider.keys,
        )
        key_ref = f"{KEYS_SUBDIR}/{src.stem}.json"
        pngio.atomic_write_bytes(out_dir / key_ref, serialize_manifest(key_manifest))

    ct = encrypt_image(arr, provider, job.block_size, job.sub_block_size)
    pngio.save_rgb(out_dir / name, ct)

    entry = {
        "name": name,
        "image_id": name,
        "width": grid.width,
        "height": grid.height,
        "plain_sha256": pngio.sha256_array(arr),
        "cipher_sha256": pngio.sha256_array(ct),
    }
    if key_ref:
        entry["key_manifest"] = key_ref

    if job.labels_subdir:
        label_src = Path(job.in_dir) / job.labels_subdir / name
        if label_src.exists():
            label = pngio.load_label(label_src)
            if job.resize:
                label = _resize_label(label, job.resize)
            pngio.save_label(out_dir / job.labels_subdir / name, label)
            entry["label_sha256"] = pngio.sha256_array(label)
    return entry


@dataclass
class VerifyReport:
    checked: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.checked > 0 and not self.failures


def load_dataset_manifest(dataset_dir: Path) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"{path} not found")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: unreadable manifest: {exc}") from exc
    if doc.get("version") != FORMAT_VERSION or doc.get("kind") != "dataset":
        raise ManifestError(f"{path}: not a {FORMAT_VERSION} dataset manifest")
    for key in ("block_size", "sub_block_size", "mode", "images"):
        if key not in doc:
            raise ManifestError(f"{path}: missing field {key!r}")
    return doc


def verify_dataset(dataset_dir: Path, master: bytes | None = None) -> VerifyReport:
    """Re-derive keys, decrypt every image, and check all recorded hashes.

    Seeded datasets need the master seed; explicit datasets carry their key
    manifests. A failure entry is (image name, reason).
    """
    dataset_dir = Path(dataset_dir)
    doc = load_dataset_manifest(dataset_dir)
    mode = doc["mode"]
    if mode == "seeded":
        if master is None:
            raise ManifestError("seeded dataset verification requires the master seed")
        check_master_seed(master)
        if master_fingerprint(master) != doc.get("seed_fingerprint"):
            raise ManifestError("master seed does not match the dataset fingerprint")

    report = VerifyReport()
    for entry in doc["images"]:
        name = entry["name"]
        report.checked += 1
        try:
            ct = pngio.load_rgb(dataset_dir / name)
            if pngio.sha256_array(ct) != entry["cipher_sha256"]:
                raise PpssError("encrypted pixels do not match the recorded hash")
            if mode == "seeded":
                provider = SeededKeyProvider(master, entry["image_id"])
            else:
                km = parse_manifest((dataset_dir / entry["key_manifest"]).read_bytes())
                if km.image_id != entry["image_id"]:
                    raise ManifestError("key manifest bound to a different image id")
                provider = provider_from_manifest(km)
            pt = decrypt_image(ct, provider, doc["block_size"], doc["sub_block_size"])
            if pngio.sha256_array(pt) != entry["plain_sha256"]:
                raise PpssError("decryption does not reproduce the recorded plaintext hash")
            if "label_sha256" in entry:
                label = pngio.load_label(dataset_dir / doc["labels_subdir"] / name)
                if pngio.sha256_array(label) != entry["label_sha256"]:
                    raise PpssError("label pixels do not match the recorded hash")
        except (PpssError, OSError) as exc:
            report.failures.append((name, str(exc)))
    return report
