from pathlib import Path

import numpy as np
import pytest
from cryptography.hazmat.decrepit.ciphers.algorithms import Blowfish
from cryptography.hazmat.primitives.ciphers import Cipher, modes

from groupmove.cipher import (
    KeySchedule,
    decrypt_block,
    decrypt_packet,
    encrypt_block,
    encrypt_packet,
    pi_words,
)

VECTORS = Path(__file__).parent / "data" / "blowfish_vectors.txt"


def load_vectors():
    rows = []
    for line in VECTORS.read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            rows.append(tuple(line.split()))
    return rows


def test_pi_initialisation():
    words = pi_words()
    assert len(words) == 18 + 1024
    assert words[0] == 0x243F6A88 and words[17] == 0x8979FB1B
    # first word of the first S-box
    assert words[18] == 0xD1310BA6


@pytest.mark.parametrize("key,plain,cipher", load_vectors())
def test_reference_vectors(key, plain, cipher):
    ks = KeySchedule.from_hex(key)
    assert encrypt_block(ks, int(plain, 16)) == int(cipher, 16)
    assert decrypt_block(ks, int(cipher, 16)) == int(plain, 16)


@pytest.mark.parametrize("key_bytes", [4, 8, 16, 56])
def test_agrees_with_cryptography(key_bytes):
    rng = np.random.default_rng(key_bytes)
    key = rng.bytes(key_bytes)
    ks = KeySchedule.from_key(key)
    ref = Cipher(Blowfish(key), modes.ECB()).encryptor()
    blocks = rng.bytes(8 * 64)
    expected = ref.update(blocks) + ref.finalize()
    got = b"".join(
        encrypt_block(ks, int.from_bytes(blocks[i:i + 8], "big")).to_bytes(8, "big") for i in range(0, len(blocks), 8)
    )
    assert got == expected


@pytest.mark.parametrize("key_bytes", [4, 8, 16, 56])
def test_block_roundtrip(key_bytes):
    rng = np.random.default_rng(100 + key_bytes)
    ks = KeySchedule.from_key(rng.bytes(key_bytes))
    for block in rng.integers(0, 1 << 63, size=1000, dtype=np.uint64):
        b = int(block) << 1 | 1
        assert decrypt_block(ks, encrypt_block(ks, b)) == b


def test_key_length_limits():
    for bad in (b"abc", bytes(57)):
        with pytest.raises(ValueError):
            KeySchedule.from_key(bad)


def test_schedule_is_immutable_and_deterministic():
    a, b = KeySchedule.from_hex("00112233"), KeySchedule.from_hex("00112233")
    assert a == b
    with pytest.raises(AttributeError):
        a.P = ()


@pytest.mark.parametrize("size", [0, 1, 3, 4, 5, 12, 100])
def test_packet_roundtrip_and_length(size):
    ks = KeySchedule.from_hex("0123456789abcdef")
    data = bytes(range(size % 256)) * (size // 256) + bytes(range(size % 256))
    data = data[:size]
    sealed = encrypt_packet(ks, data)
    assert len(sealed) == 8 * -(-(size + 4) // 8)
    assert decrypt_packet(ks, sealed) == data


def test_cbc_mode():
    ks = KeySchedule.from_hex("feedfacecafebeef")
    data = b"location batch " * 5
    sealed = encrypt_packet(ks, data, mode="cbc", iv=b"\x01" * 8)
    assert sealed[:8] == b"\x01" * 8
    assert decrypt_packet(ks, sealed, mode="cbc") == data
    # identical plaintext blocks do not repeat under CBC
    body = sealed[8:]
    blocks = [body[i:i + 8] for i in range(0, len(body), 8)]
    assert len(set(blocks)) == len(blocks)
    with pytest.raises(ValueError):
        encrypt_packet(ks, data, mode="cbc", iv=b"short")


def test_wrong_key_detected():
    sealed = encrypt_packet(KeySchedule.from_hex("00000000000000aa"), b"secret trajectory data")
    with pytest.raises(ValueError):
        decrypt_packet(KeySchedule.from_hex("00000000000000ab"), sealed)


def test_malformed_ciphertext():
    ks = KeySchedule.from_hex("01020304")
    with pytest.raises(ValueError):
        decrypt_packet(ks, b"1234567")
    with pytest.raises(ValueError):
        encrypt_packet(ks, b"x", mode="ofb")


def test_encrypts_update_packet_objects():
    class Packet:
        data = b"\x01\x02\x03"

    ks = KeySchedule.from_hex("a1b2c3d4")
    assert decrypt_packet(ks, encrypt_packet(ks, Packet())) == Packet.data
