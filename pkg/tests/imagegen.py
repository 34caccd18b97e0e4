"""Deterministic plaintext images for tests."""

import hashlib
import struct

import numpy as np


def fixture_image(tag: str, width: int, height: int) -> np.ndarray:
    """Deterministic plaintext pixels; same construction the golden oracle
    uses (SHA-256 counter stream over the tag), so it cannot drift with
    numpy RNG changes."""
    need = width * height * 3
    buf = bytearray()
    ctr = 0
    while len(buf) < need:
        buf += hashlib.sha256(b"fixture:" + tag.encode() + struct.pack(">Q", ctr)).digest()
        ctr += 1
    return np.frombuffer(bytes(buf[:need]), dtype=np.uint8).reshape(height, width, 3)
