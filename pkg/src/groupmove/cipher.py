"""Blowfish block cipher and packet encryption.

The P-array and S-boxes are initialised from the fractional hexadecimal
digits of pi, which are computed here with integer arithmetic (Machin's
formula) instead of being pasted in as constants.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import lru_cache

MASK32 = 0xFFFFFFFF
ROUNDS = 16


def _arctan_inv(x: int, unity: int) -> int:
    """``arctan(1/x) * unity`` by its alternating series."""
    total = term = unity // x
    x2, n, sign = x * x, 1, -1
    while term:
        term //= x2
        n += 2
        total += sign * (term // n)
        sign = -sign
    return total


@lru_cache(maxsize=1)
def pi_words(count: int = 18 + 4 * 256) -> tuple[int, ...]:
    """The first ``count`` 32-bit words of pi's fractional part."""
    guard = 64
    bits = 32 * count + guard
    unity = 1 << bits
    pi = 4 * (4 * _arctan_inv(5, unity) - _arctan_inv(239, unity))
    frac = (pi - (3 << bits)) >> guard
    return tuple((frac >> (32 * (count - 1 - i))) & MASK32 for i in range(count))


@dataclass(frozen=True)
class KeySchedule:
    P: tuple[int, ...]
    S: tuple[tuple[int, ...], ...]

    @classmethod
    def from_key(cls, key: bytes) -> "KeySchedule":
        if not 4 <= len(key) <= 56:
            raise ValueError("Blowfish keys are 32 to 448 bits (4 to 56 bytes)")
        words = pi_words()
        P = list(words[:18])
        S = [list(words[18 + 256 * i:18 + 256 * (i + 1)]) for i in range(4)]
        for i in range(18):
            chunk = 0
            for j in range(4):
                chunk = (chunk << 8) | key[(4 * i + j) % len(key)]
            P[i] ^= chunk
        left = right = 0
        for i in range(0, 18, 2):
            left, right = _encrypt(P, S, left, right)
            P[i], P[i + 1] = left, right
        for box in S:
            for i in range(0, 256, 2):
                left, right = _encrypt(P, S, left, right)
                box[i], box[i + 1] = left, right
        return cls(tuple(P), tuple(tuple(b) for b in S))

    @classmethod
    def from_hex(cls, key_hex: str) -> "KeySchedule":
        return cls.from_key(bytes.fromhex(key_hex))


def _f(S, x: int) -> int:
    a, b, c, d = x >> 24, (x >> 16) & 0xFF, (x >> 8) & 0xFF, x & 0xFF
    return ((((S[0][a] + S[1][b]) & MASK32) ^ S[2][c]) + S[3][d]) & MASK32


def _encrypt(P, S, xl: int, xr: int) -> tuple[int, int]:
    for i in range(ROUNDS):
        xl ^= P[i]
        xr ^= _f(S, xl)
        xl, xr = xr, xl
    xl, xr = xr, xl
    xr ^= P[16]
    xl ^= P[17]
    return xl, xr


def _decrypt(P, S, xl: int, xr: int) -> tuple[int, int]:
    for i in range(17, 1, -1):
        xl ^= P[i]
        xr ^= _f(S, xl)
        xl, xr = xr, xl
    xl, xr = xr, xl
    xr ^= P[1]
    xl ^= P[0]
    return xl, xr


def encrypt_block(ks: KeySchedule, block: int) -> int:
    """Encrypt one 64-bit block given as an integer."""
    xl, xr = _encrypt(ks.P, ks.S, block >> 32, block & MASK32)
    return (xl << 32) | xr


def decrypt_block(ks: KeySchedule, block: int) -> int:
    xl, xr = _decrypt(ks.P, ks.S, block >> 32, block & MASK32)
    return (xl << 32) | xr


# --------------------------------------------------------------------------
# Packet encryption


def _pad(data: bytes) -> bytes:
    body = struct.pack(">I", len(data)) + data
    return body + bytes(-len(body) % 8)


def encrypt_packet(ks: KeySchedule, data, mode: str = "ecb", iv: bytes | None = None) -> bytes:
    """Length-prefix, zero-pad to whole blocks, and encrypt.

    ``mode`` is ``"ecb"`` or ``"cbc"``; CBC prepends its 8-byte IV (random
    unless given).
    """
    if hasattr(data, "data"):
        data = data.data
    plain = _pad(bytes(data))
    blocks = [int.from_bytes(plain[i:i + 8], "big") for i in range(0, len(plain), 8)]
    if mode == "ecb":
        return b"".join(encrypt_block(ks, b).to_bytes(8, "big") for b in blocks)
    if mode == "cbc":
        iv = os.urandom(8) if iv is None else iv
        if len(iv) != 8:
            raise ValueError("CBC needs an 8-byte IV")
        out, prev = [iv], int.from_bytes(iv, "big")
        for b in blocks:
            prev = encrypt_block(ks, b ^ prev)
            out.append(prev.to_bytes(8, "big"))
        return b"".join(out)
    raise ValueError(f"unknown mode {mode!r}")


def decrypt_packet(ks: KeySchedule, data: bytes, mode: str = "ecb") -> bytes:
    if len(data) % 8:
        raise ValueError("ciphertext is not a whole number of blocks")
    blocks = [int.from_bytes(data[i:i + 8], "big") for i in range(0, len(data), 8)]
    if mode == "ecb":
        plain = [decrypt_block(ks, b) for b in blocks]
    elif mode == "cbc":
        if not blocks:
            raise ValueError("missing IV")
        plain = [decrypt_block(ks, b) ^ prev for prev, b in zip(blocks, blocks[1:])]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    raw = b"".join(p.to_bytes(8, "big") for p in plain)
    if len(raw) < 4:
        raise ValueError("ciphertext too short")
    (length,) = struct.unpack_from(">I", raw)
    if length > len(raw) - 4 or any(raw[4 + length:]):
        raise ValueError("bad padding (wrong key?)")
    return raw[4:4 + length]
