"""Regenerates tests/data/goldens.json.

Deliberately independent of the ppss package: everything here is
straight-line pure Python (no numpy, no imports from src/) so the frozen
values cross-check the real implementation rather than restating it.
Run from the repo root: python tests/make_goldens.py
"""

import hashlib
import json
import pathlib
import struct

DOMAIN = b"PPSS-v1"
U32 = 1 << 32


def stream_seed(master: bytes, image_id: str, block: int, sub: int, purpose: int) -> bytes:
    msg = DOMAIN + b"\x00" + master + b"\x00" + image_id.encode("utf-8") + b"\x00"
    msg += struct.pack(">IIB", block, sub, purpose)
    return hashlib.sha256(msg).digest()


def word_stream(seed: bytes):
    ctr = 0
    while True:
        chunk = hashlib.sha256(seed + struct.pack(">Q", ctr)).digest()
        for k in range(0, 32, 4):
            yield int.from_bytes(chunk[k : k + 4], "big")
        ctr += 1


def fisher_yates(words, n: int) -> list:
    arr = list(range(n))
    for i in range(n - 1, 0, -1):
        bound = i + 1
        limit = (U32 // bound) * bound
        while True:
            w = next(words)
            if w < limit:
                break
        j = w % bound
        arr[i], arr[j] = arr[j], arr[i]
    return arr


def perm_for(master: bytes, image_id: str, block: int, sub: int, purpose: int, n: int) -> list:
    return fisher_yates(word_stream(stream_seed(master, image_id, block, sub, purpose)), n)


def encrypt(pixels, width, height, m, ms, master, image_id):
    """Reference cipher: nested loops, one sub-block at a time."""
    out = [[[0, 0, 0] for _ in range(width)] for _ in range(height)]
    blocks_x = width // m
    sps = m // ms
    n = ms * ms
    for by in range(height // m):
        for bx in range(blocks_x):
            b = by * blocks_x + bx
            for sy in range(sps):
                for sx in range(sps):
                    s = sy * sps + sx
                    pp = [perm_for(master, image_id, b, s, c, n) for c in range(3)]
                    cp = perm_for(master, image_id, b, s, 3, 3)
                    y0 = by * m + sy * ms
                    x0 = bx * m + sx * ms
                    flat = [
                        [pixels[y0 + i // ms][x0 + i % ms][c] for i in range(n)]
                        for c in range(3)
                    ]
                    for c in range(3):
                        src = cp[c]
                        for i in range(n):
                            out[y0 + i // ms][x0 + i % ms][c] = flat[src][pp[src][i]]
    return out


def fixture_pixels(tag: str, width: int, height: int):
    """Deterministic plaintext: SHA-256 counter stream over a fixture tag."""
    need = width * height * 3
    buf = bytearray()
    ctr = 0
    while len(buf) < need:
        buf += hashlib.sha256(b"fixture:" + tag.encode() + struct.pack(">Q", ctr)).digest()
        ctr += 1
    flat = buf[:need]
    return [
        [[flat[(y * width + x) * 3 + c] for c in range(3)] for x in range(width)]
        for y in range(height)
    ]


def pixel_bytes(pixels) -> bytes:
    return bytes(v for row in pixels for px in row for v in px)


def main():
    # Sanity gate: all-zero keystream, n=3. Hand trace: i=2 swaps slots 2,0
    # -> [2,1,0]; i=1 swaps slots 1,0 -> [1,2,0].
    assert fisher_yates(iter(lambda: 0, 1), 3) == [1, 2, 0]

    zero = bytes(32)
    seq = bytes(range(32))

    golden = {}
    golden["stream_seed_zero_img0_b0_s0_p0"] = stream_seed(zero, "img0", 0, 0, 0).hex()
    golden["stream_words_first8"] = [
        w for w, _ in zip(word_stream(stream_seed(zero, "img0", 0, 0, 0)), range(8))
    ]
    golden["perm_n4_zero_img0_b0_s0_p0"] = perm_for(zero, "img0", 0, 0, 0, 4)
    golden["perm_n3_zero_img0_b0_s0_p3"] = perm_for(zero, "img0", 0, 0, 3, 3)
    golden["perm_n16_seq_alpha_b1_s2_p1"] = perm_for(seq, "alpha", 1, 2, 1, 16)

    # Full tiny ciphertext, small enough to eyeball in a debugger.
    tiny_pt = fixture_pixels("tiny", 4, 4)
    tiny_ct = encrypt(tiny_pt, 4, 4, 4, 2, zero, "img0")
    golden["tiny_case"] = {
        "width": 4,
        "height": 4,
        "block_size": 4,
        "sub_block_size": 2,
        "master_hex": zero.hex(),
        "image_id": "img0",
        "plain_hex": pixel_bytes(tiny_pt).hex(),
        "cipher_hex": pixel_bytes(tiny_ct).hex(),
    }

    # Larger cases frozen as SHA-256 of the raw RGB ciphertext bytes.
    cases = [
        ("fixA", 16, 16, 8, 2, seq, "alpha"),
        ("fixB", 32, 48, 16, 4, bytes([0xAA]) * 32, "beta/01.png"),
        ("fixC", 48, 48, 16, 16, seq, "gamma"),
        ("fixD", 24, 24, 8, 1, bytes([0x5C]) * 32, "delta"),
        ("fixE", 64, 64, 16, 8, zero, ""),
    ]
    golden["fixtures"] = []
    for tag, w, h, m, ms, master, image_id in cases:
        pt = fixture_pixels(tag, w, h)
        ct = encrypt(pt, w, h, m, ms, master, image_id)
        golden["fixtures"].append(
            {
                "tag": tag,
                "width": w,
                "height": h,
                "block_size": m,
                "sub_block_size": ms,
                "master_hex": master.hex(),
                "image_id": image_id,
                "plain_sha256": hashlib.sha256(pixel_bytes(pt)).hexdigest(),
                "cipher_sha256": hashlib.sha256(pixel_bytes(ct)).hexdigest(),
            }
        )

    out = pathlib.Path(__file__).parent / "data" / "goldens.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(golden, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
