"""Command-line interface.

Exit codes: 0 success, 1 a validly requested check or attack failed
(verification mismatch, inconsistent pair), 2 the invocation itself was
invalid (bad arguments, malformed files, geometry misfits).

Master seeds travel only in files (raw 32 bytes or 64 hex chars), never on
the command line, so they cannot leak through process listings or shell
history.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, dataset, keys, metrics, pngio, reporting
from .cipher import decrypt_image, encrypt_image, partition_geometry
from .errors import (
    GeometryError,
    ImageFormatError,
    InconsistentPairError,
    ManifestError,
    MetricsError,
    PpssError,
)


def read_seed_file(path: str) -> bytes:
    """Raw 32-byte file, or 64 hex chars (surrounding whitespace ignored)."""
    data = Path(path).read_bytes()
    if len(data) == 32:
        return data
    text = data.decode("ascii", errors="ignore").strip() if len(data) <= 130 else ""
    try:
        seed = bytes.fromhex(text)
    except ValueError:
        seed = b""
    if len(seed) == 32:
        return seed
    raise ManifestError(f"{path}: seed file must hold exactly 32 raw bytes or 64 hex characters")


def _require_seed(args, why: str) -> bytes:
    if not args.seed_file:
        raise ManifestError(f"{why} requires --seed-file")
    return read_seed_file(args.seed_file)


def _emit(args, lines) -> None:
    if args.quiet:
        return
    for line in lines:
        print(line)


def _parse_resize(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        size = (int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH (e.g. 768x768), got {text!r}")
    if size[0] < 1 or size[1] < 1:
        raise argparse.ArgumentTypeError(f"resize dimensions must be positive, got {text!r}")
    return size


def _figure_path(args, default_name: str) -> Path | None:
    if args.no_figure:
        return None
    return Path(args.figure) if args.figure else Path(default_name)


# ---------------------------------------------------------------------------
# Subcommand implementations.

def cmd_keygen(args) -> int:
    out = Path(args.out)
    if out.exists() and not args.force:
        raise ManifestError(f"{out} already exists; pass --force to overwrite")
    seed = keys.new_master_seed()
    pngio.atomic_write_bytes(out, seed)
    out.chmod(0o600)
    _emit(args, [f"fingerprint\t{keys.master_fingerprint(seed)}" if args.output_format == "machine" else f"wrote {out} (fingerprint {keys.master_fingerprint(seed)})"])
    return 0


def _single_provider_for_encrypt(args, grid, image_id: str):
    if args.mode == "seeded":
        master = _require_seed(args, "seeded mode")
        provider = keys.SeededKeyProvider(master, image_id)
        manifest = keys.ImageKeyManifest(
            image_id=image_id,
            block_size=args.block_size,
            sub_block_size=args.sub_block_size,
            mode="seeded",
            width=grid.width,
            height=grid.height,
            seed_fingerprint=keys.master_fingerprint(master),
            master_seed=master if args.export_seed else None,
        )
        return provider, manifest
    provider = keys.generate_random_image_key(grid)
    manifest = keys.ImageKeyManifest(
        image_id=image_id,
        block_size=args.block_size,
        sub_block_size=args.sub_block_size,
        mode="explicit",
        width=grid.width,
        height=grid.height,
        subblock_keys=provider.keys,
    )
    return provider, manifest


def cmd_encrypt(args) -> int:
    img = pngio.load_rgb(args.infile)
    grid = partition_geometry(img.shape[1], img.shape[0], args.block_size, args.sub_block_size)
    image_id = args.image_id if args.image_id is not None else Path(args.infile).name
    if args.mode == "explicit" and not args.key_manifest:
        raise ManifestError("explicit mode would lose the key; pass --key-manifest to save it")
    provider, manifest = _single_provider_for_encrypt(args, grid, image_id)
    ct = encrypt_image(img, provider, args.block_size, args.sub_block_size)
    pngio.save_rgb(args.out, ct)
    if args.key_manifest:
        pngio.atomic_write_bytes(args.key_manifest, keys.serialize_manifest(manifest))
    _emit(args, [f"encrypted\t{args.infile}\t{args.out}" if args.output_format == "machine" else f"encrypted {args.infile} -> {args.out} (image id {image_id!r})"])
    return 0


def cmd_decrypt(args) -> int:
    img = pngio.load_rgb(args.infile)
    if args.key_manifest:
        manifest = keys.parse_manifest(Path(args.key_manifest).read_bytes())
        master = read_seed_file(args.seed_file) if args.seed_file else None
        provider = keys.provider_from_manifest(manifest, master)
        block_size, sub_block_size = manifest.block_size, manifest.sub_block_size
        if manifest.width is not None and (manifest.width, manifest.height) != (img.shape[1], img.shape[0]):
            raise ManifestError(
                f"manifest is for a {manifest.width}x{manifest.height} image but input is {img.shape[1]}x{img.shape[0]}"
            )
    else:
        if args.block_size is None or args.sub_block_size is None or args.image_id is None:
            raise ManifestError("without --key-manifest, decrypt needs --seed-file, --image-id, --block-size and --sub-block-size")
        master = _require_seed(args, "decrypting without a key manifest")
        provider = keys.SeededKeyProvider(master, args.image_id)
        block_size, sub_block_size = args.block_size, args.sub_block_size
    pt = decrypt_image(img, provider, block_size, sub_block_size)
    pngio.save_rgb(args.out, pt)
    _emit(args, [f"decrypted\t{args.infile}\t{args.out}" if args.output_format == "machine" else f"decrypted {args.infile} -> {args.out}"])
    return 0


def cmd_dataset(args) -> int:
    if args.action == "encrypt":
        master = _require_seed(args, "seeded mode") if args.mode == "seeded" else None
        job = dataset.DatasetJob(
            in_dir=Path(args.in_dir),
            out_dir=Path(args.out_dir),
            block_size=args.block_size,
            sub_block_size=args.sub_block_size,
            mode=args.mode,
            master=master,
            resize=args.resize,
            labels_subdir=args.labels_subdir,
            on_error=args.on_error,
        )
        report = dataset.encrypt_dataset(job, threads=args.threads)
        for name, reason in report.skipped:
            print(f"skipped {name}: {reason}", file=sys.stderr)
        if args.output_format == "machine":
            _emit(args, [f"dataset\t{len(report.processed)}\t{len(report.skipped)}\t{report.manifest_path}"])
        else:
            _emit(args, [f"encrypted {len(report.processed)} images ({len(report.skipped)} skipped) -> {report.manifest_path}"])
        return 0
    # verify
    master = read_seed_file(args.seed_file) if args.seed_file else None
    report = dataset.verify_dataset(Path(args.in_dir), master)
    for name, reason in report.failures:
        print(f"FAIL {name}: {reason}", file=sys.stderr)
    if args.output_format == "machine":
        _emit(args, [f"verify\t{report.checked}\t{len(report.failures)}"])
    else:
        _emit(args, [f"verified {report.checked} images, {len(report.failures)} failures"])
    return 0 if report.ok else 1


def _label_pairs(gt: Path, pred: Path) -> list[tuple[Path, Path]]:
    if gt.is_file() and pred.is_file():
        return [(gt, pred)]
    if not gt.is_dir() or not pred.is_dir():
        raise MetricsError("--gt and --pred must both be files or both be directories")
    pairs = []
    names = sorted(p.name for p in gt.glob("*.png"))
    if not names:
        raise MetricsError(f"no .png label maps in {gt}")
    for name in names:
        p = pred / name
        if not p.exists():
            raise MetricsError(f"prediction for {name} missing in {pred}")
        pairs.append((gt / name, p))
    return pairs


def cmd_metrics(args) -> int:
    cm = metrics.new_confusion_matrix(args.classes)
    for gt_path, pred_path in _label_pairs(Path(args.gt), Path(args.pred)):
        metrics.accumulate(cm, pngio.load_label(gt_path), pngio.load_label(pred_path), args.ignore_label)
    scores = metrics.compute_scores(cm)
    _emit(args, reporting.metrics_lines(scores, args.output_format == "machine"))
    fig = _figure_path(args, "ppss-metrics-report.png")
    if fig:
        reporting.render_metrics_figure(scores, fig)
        _emit(args, [f"figure\t{fig}" if args.output_format == "machine" else f"figure written to {fig}"])
    return 0


def cmd_analyze(args) -> int:
    img = pngio.load_rgb(args.infile)
    machine = args.output_format == "machine"
    lines: list[str] = []
    corr_main = analysis.adjacent_correlation(img)
    lines += reporting.correlation_lines(corr_main, "encrypted" if args.plain else "image", machine)
    corr_plain = None
    if args.plain:
        plain = pngio.load_rgb(args.plain)
        corr_plain = analysis.adjacent_correlation(plain)
        lines += reporting.correlation_lines(corr_plain, "plain", machine)
        leak = analysis.sum_leak(plain, img, args.block_size, args.sub_block_size)
        lines += reporting.sum_leak_lines(leak, machine)
    grid = partition_geometry(img.shape[1], img.shape[0], args.block_size, args.sub_block_size)
    ks = analysis.keyspace(args.sub_block_size, not args.shared_pixel_perm, grid.total_subblocks)
    lines += reporting.keyspace_lines(ks, machine)
    _emit(args, lines)
    fig = _figure_path(args, "ppss-analysis-report.png")
    if fig:
        reporting.render_analysis_figure(corr_main, fig, corr_plain)
        _emit(args, [f"figure\t{fig}" if machine else f"figure written to {fig}"])
    return 0


def cmd_attack(args) -> int:
    plain = pngio.load_rgb(args.plain)
    cipher = pngio.load_rgb(args.cipher)
    report = analysis.known_plaintext_attack(plain, cipher, args.block_size, args.sub_block_size)
    machine = args.output_format == "machine"
    lines = reporting.attack_lines(report, machine)
    recovered = decrypt_image(cipher, report.provider, args.block_size, args.sub_block_size)
    exact = bool(np.array_equal(recovered, plain))
    lines.append(f"decrypt_check\t{'ok' if exact else 'mismatch'}" if machine else f"decrypting with recovered keys reproduces the plaintext: {'yes' if exact else 'NO'}")
    if args.out_keys:
        manifest = keys.ImageKeyManifest(
            image_id=args.image_id or "",
            block_size=args.block_size,
            sub_block_size=args.sub_block_size,
            mode="explicit",
            width=report.grid.width,
            height=report.grid.height,
            subblock_keys=[s.key for s in report.per_subblock],
        )
        pngio.atomic_write_bytes(args.out_keys, keys.serialize_manifest(manifest))
        lines.append(f"keys\t{args.out_keys}" if machine else f"recovered key table written to {args.out_keys}")
    _emit(args, lines)
    fig = _figure_path(args, "ppss-attack-report.png")
    if fig:
        reporting.render_attack_figure(report, fig)
        _emit(args, [f"figure\t{fig}" if machine else f"figure written to {fig}"])
    return 0 if exact else 1


# ---------------------------------------------------------------------------
# Parser assembly.

def _add_geometry(p: argparse.ArgumentParser, required_sub: bool = True) -> None:
    p.add_argument("--block-size", type=int, default=16, help="square block edge in pixels (default 16)")
    p.add_argument("--sub-block-size", type=int, required=required_sub, help="square sub-block edge; must divide the block size")


def _add_figure_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--figure", help="write the report figure to this PNG path")
    p.add_argument("--no-figure", action="store_true", help="skip figure rendering entirely")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppss",
        description="Keyed block/sub-block pixel shuffling for privacy-preserving segmentation: "
        "encrypt images and datasets, score predictions, and analyze what the scheme leaks.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress stdout reporting (exit codes still apply)")
    parser.add_argument("--output-format", choices=("text", "machine"), default="text", help="machine = tab-delimited records")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for dataset processing")
    parser.add_argument("--seed-file", help="master seed file (raw 32 bytes or 64 hex chars)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    for flag, kwargs in (
        ("--quiet", dict(action="store_true")),
        ("--output-format", dict(choices=("text", "machine"))),
        ("--threads", dict(type=int)),
        ("--seed-file", dict()),
    ):
        common.add_argument(flag, default=argparse.SUPPRESS, **kwargs)

    p = sub.add_parser("keygen", parents=[common], help="create a fresh master seed file")
    p.add_argument("--out", required=True, help="seed file to write (raw 32 bytes, mode 0600)")
    p.add_argument("--force", action="store_true", help="overwrite an existing file")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", parents=[common], help="encrypt one RGB PNG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_geometry(p)
    p.add_argument("--mode", choices=("seeded", "explicit"), default="seeded")
    p.add_argument("--image-id", help="key derivation id (default: input file name)")
    p.add_argument("--key-manifest", help="write the key manifest here (required for explicit mode)")
    p.add_argument("--export-seed", action="store_true", help="embed the master seed in the manifest (seeded mode)")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", parents=[common], help="decrypt one RGB PNG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--key-manifest", help="key manifest from encryption")
    p.add_argument("--image-id", help="key derivation id (when no manifest is given)")
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--sub-block-size", type=int, default=None)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("dataset", parents=[common], help="encrypt or verify a directory of images")
    p.add_argument("action", choices=("encrypt", "verify"))
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", help="output directory (encrypt)")
    _add_geometry(p, required_sub=False)
    p.add_argument("--mode", choices=("seeded", "explicit"), default="seeded")
    p.add_argument("--resize", type=_parse_resize, help="resize to WxH before encrypting (bilinear; labels nearest)")
    p.add_argument("--labels-subdir", help="subdirectory of same-named label maps to carry along")
    p.add_argument("--on-error", choices=("abort", "skip"), default="abort")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("metrics", parents=[common], help="score predicted label maps against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth label map or directory")
    p.add_argument("--pred", required=True, help="predicted label map or directory")
    p.add_argument("--classes", type=int, required=True, help="number of classes K (labels 0..K-1)")
    p.add_argument("--ignore-label", type=int, default=metrics.IGNORE_LABEL)
    _add_figure_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("analyze", parents=[common], help="leakage and keyspace report for an image")
    p.add_argument("--in", dest="infile", required=True, help="image to analyze (typically the encrypted one)")
    p.add_argument("--plain", help="matching plaintext; adds the channel-sum leak comparison")
    _add_geometry(p)
    p.add_argument("--shared-pixel-perm", action="store_true", help="count the keyspace for one pixel perm shared by all channels")
    _add_figure_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("attack", parents=[common], help="known plain/cipher pair key recovery")
    p.add_argument("--plain", required=True)
    p.add_argument("--cipher", required=True)
    _add_geometry(p)
    p.add_argument("--image-id", help="image id recorded in the recovered key manifest")
    p.add_argument("--out-keys", help="write the recovered explicit key manifest here")
    _add_figure_flags(p)
    p.set_defaults(func=cmd_attack)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    if args.command == "dataset" and args.action == "encrypt" and not args.out_dir:
        print("error: dataset encrypt requires --out", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (GeometryError, ImageFormatError, ManifestError, MetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InconsistentPairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PpssError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
