import math

import numpy as np
import pytest

from imagegen import fixture_image
from ppss import analysis, cipher, keys
from ppss.errors import InconsistentPairError
from refimpl import count_consistent_keys_ms2


def _textured_image(width: int, height: int, seed: int = 123) -> np.ndarray:
    # Box-blurred noise: neighbors correlate strongly (~0.8) but the
    # correlation length is a few pixels, as in natural textures, so
    # in-sub-block shuffling can actually break it. A slowly varying
    # gradient would stay correlated even after shuffling, since all values
    # inside a sub-block would be nearly equal.
    rng = np.random.default_rng(seed)
    base = rng.uniform(0, 1, (height + 4, width + 4, 3))
    acc = sum(base[dy : dy + height, dx : dx + width] for dy in range(5) for dx in range(5)) / 25
    lo, hi = acc.min(), acc.max()
    return ((acc - lo) / (hi - lo) * 255).astype(np.uint8)


def test_sum_leak_full_match_on_pair():
    img = _textured_image(32, 32)
    prov = keys.SeededKeyProvider(bytes([6]) * 32, "leak")
    ct = cipher.encrypt_image(img, prov, 16, 4)
    report = analysis.sum_leak(img, ct, 16, 4)
    assert report.total_subblocks == 4 * 16
    assert report.matching_subblocks == report.total_subblocks
    assert report.match_fraction == 1.0


def test_sum_leak_detects_unrelated_images():
    a = fixture_image("leakA", 32, 32)
    b = fixture_image("leakB", 32, 32)
    report = analysis.sum_leak(a, b, 16, 4)
    assert report.match_fraction < 0.5


def test_sum_leak_shape_mismatch():
    with pytest.raises(InconsistentPairError):
        analysis.sum_leak(
            np.zeros((16, 16, 3), dtype=np.uint8), np.zeros((32, 32, 3), dtype=np.uint8), 8, 2
        )


def test_subblock_sums_exact_integers():
    img = np.full((8, 8, 3), 255, dtype=np.uint8)
    grid = cipher.partition_geometry(8, 8, 8, 4)
    sums = analysis.subblock_sums(img, grid)
    assert sums.dtype == np.int64
    assert (sums == 255 * 16).all()  # would overflow uint8 arithmetic


def test_adjacent_correlation_constant_is_none():
    img = np.full((16, 16, 3), 42, dtype=np.uint8)
    corr = analysis.adjacent_correlation(img)
    for d in ("horizontal", "vertical", "diagonal"):
        assert corr[d] == [None, None, None]


def test_adjacent_correlation_linear_gradient():
    img = np.zeros((16, 64, 3), dtype=np.uint8)
    img[:, :, 0] = np.arange(64, dtype=np.uint8)[None, :]
    img[:, :, 1] = np.arange(64, dtype=np.uint8)[None, :]
    img[:, :, 2] = 7  # constant channel stays undefined
    corr = analysis.adjacent_correlation(img)
    assert corr["horizontal"][0] == pytest.approx(1.0, abs=1e-9)
    assert corr["vertical"][1] == pytest.approx(1.0, abs=1e-9)  # columns identical
    assert corr["horizontal"][2] is None


def test_encryption_destroys_neighbor_correlation():
    img = _textured_image(64, 64)
    plain_corr = analysis.adjacent_correlation(img)
    ct = cipher.encrypt_image(img, keys.SeededKeyProvider(bytes(32), "corr"), 16, 8)
    ct_corr = analysis.adjacent_correlation(ct)
    for c in range(3):
        assert plain_corr["horizontal"][c] > 0.7
        assert abs(ct_corr["horizontal"][c]) < 0.4
        assert abs(ct_corr["horizontal"][c]) < plain_corr["horizontal"][c]


def test_keyspace_ms2_exact():
    ks = analysis.keyspace(2, independent_channels=True)
    assert ks.per_subblock_count == math.factorial(4) ** 3 * math.factorial(3) == 82944
    assert ks.per_subblock_bits == pytest.approx(math.log2(82944), abs=1e-12)
    shared = analysis.keyspace(2, independent_channels=False)
    assert shared.per_subblock_count == math.factorial(4) * 6 == 144


def test_keyspace_large_no_overflow():
    ks = analysis.keyspace(16)
    expected_bits = 3 * sum(math.log2(k) for k in range(2, 257)) + math.log2(6)
    assert ks.per_subblock_count == math.factorial(256) ** 3 * 6
    assert ks.per_subblock_bits == pytest.approx(expected_bits, rel=1e-12)
    total = analysis.keyspace(16, n_subblocks=2304)
    assert total.total_bits == pytest.approx(2304 * ks.per_subblock_bits)


def test_log2_exact_int():
    assert analysis._log2_exact_int(1) == 0.0
    assert analysis._log2_exact_int(2 ** 5000) == 5000.0
    assert analysis._log2_exact_int(12345) == pytest.approx(math.log2(12345), abs=1e-12)


def test_keyspace_validation():
    with pytest.raises(ValueError):
        analysis.keyspace(0)
    with pytest.raises(ValueError):
        analysis.keyspace(2, n_subblocks=0)


# ---------------------------------------------------------------------------
# Known-plaintext attack.

def _random_key(rng, ms):
    n = ms * ms
    return keys.SubBlockKey(
        pixel_perms=tuple(rng.permutation(n).astype(np.int32) for _ in range(3)),
        channel_perm=rng.permutation(3).astype(np.int32),
    )


def test_attack_tile_distinct_values_exact():
    rng = np.random.default_rng(21)
    ms = 4
    n = ms * ms
    # Disjoint value ranges per channel: unique channel perm, unique pixel
    # perms, so exactly one key can explain the pair.
    plain = np.stack(
        [rng.permutation(np.arange(lo, lo + n)).astype(np.uint8) for lo in (0, 100, 200)]
    )
    key = _random_key(rng, ms)
    ciph = cipher.apply_subblock(plain, key)
    got = analysis._attack_tile(plain, ciph)
    assert got.ambiguity == 1
    assert got.channel_perms == 1
    assert got.key == key


def test_attack_tile_uniform_is_whole_keyspace():
    # An all-constant tile (same value in every channel) is consistent with
    # every key, so the ambiguity must equal the full per-sub-block keyspace.
    ms = 2
    plain = np.full((3, 4), 9, dtype=np.uint8)
    got = analysis._attack_tile(plain, plain.copy())
    assert got.ambiguity == analysis.keyspace(ms).per_subblock_count
    assert got.channel_perms == 6


def test_attack_tile_ambiguity_matches_exhaustive_count():
    rng = np.random.default_rng(22)
    for _ in range(6):
        plain = rng.integers(0, 2, (3, 4), dtype=np.uint8)  # tiny alphabet forces collisions
        key = _random_key(rng, 2)
        ciph = cipher.apply_subblock(plain, key)
        got = analysis._attack_tile(plain, ciph)
        brute = count_consistent_keys_ms2(plain.tolist(), ciph.tolist())
        assert got.ambiguity == brute
        assert np.array_equal(cipher.apply_subblock(plain, got.key), ciph)


def test_attack_recovers_image_keys():
    img = fixture_image("kpa", 32, 32)
    prov = keys.SeededKeyProvider(bytes([4]) * 32, "kpa")
    ct = cipher.encrypt_image(img, prov, 16, 4)
    report = analysis.known_plaintext_attack(img, ct, 16, 4)
    assert len(report.per_subblock) == 4 * 16
    # Recovered keys must re-encrypt and decrypt exactly, even when the
    # representative differs from the true key.
    assert np.array_equal(cipher.encrypt_image(img, report.provider, 16, 4), ct)
    assert np.array_equal(cipher.decrypt_image(ct, report.provider, 16, 4), img)
    assert report.total_ambiguity_bits >= 0.0


def test_attack_rejects_non_pair():
    a = fixture_image("nopairA", 16, 16)
    b = fixture_image("nopairB", 16, 16)
    with pytest.raises(InconsistentPairError, match="block"):
        analysis.known_plaintext_attack(a, b, 8, 2)


def test_attack_rejects_forged_value_swap():
    # Same histogram totals per sub-block would be needed; corrupting one
    # byte of the ciphertext must be detected.
    img = fixture_image("forge", 16, 16)
    ct = cipher.encrypt_image(img, keys.SeededKeyProvider(bytes(32), "forge"), 8, 2).copy()
    ct[0, 0, 0] ^= 0xFF
    with pytest.raises(InconsistentPairError):
        analysis.known_plaintext_attack(img, ct, 8, 2)
