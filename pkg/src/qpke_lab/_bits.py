"""Bit-string helpers. Bit-strings are Python str of '0'/'1'.

Convention used everywhere: the leftmost character is qubit 0 and the most
significant bit of the integer encoding, so ``int(bits, 2)`` is the basis-state
index of ``|bits>``.
"""

from __future__ import annotations

import numpy as np


def bits_to_int(bits: str) -> int:
    return int(bits, 2)


def int_to_bits(value: int, width: int) -> str:
    if value < 0 or value >> width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b")


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError("bit-string length mismatch")
    return int_to_bits(int(a, 2) ^ int(b, 2), len(a))


def parity(x: int) -> int:
    """Parity of the popcount of x."""
    return bin(x).count("1") & 1


def dot_bits(a: str, b: str) -> int:
    """Bitwise inner product a.b mod 2."""
    if len(a) != len(b):
        raise ValueError("bit-string length mismatch")
    return parity(int(a, 2) & int(b, 2))


def is_bits(s: str, length: int | None = None) -> bool:
    if length is not None and len(s) != length:
        return False
    return len(s) > 0 and all(c in "01" for c in s)


def check_bits(s: str, length: int, what: str = "bit-string") -> None:
    if not is_bits(s, length):
        raise ValueError(f"{what} must be {length} characters of 0/1, got {s!r}")


def random_bits(rng: np.random.Generator, length: int) -> str:
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=length))


def bits_to_hex(bits: str) -> str:
    """Hex encoding used in JSON dumps; width fixed by the bit length."""
    return format(int(bits, 2), f"0{(len(bits) + 3) // 4}x")


def hex_to_bits(hx: str, length: int) -> str:
    return int_to_bits(int(hx, 16), length)


def parity_vector(nbits: int) -> np.ndarray:
    """Vector p with p[x] = popcount parity of x, for x in [0, 2^nbits)."""
    v = np.arange(1 << nbits, dtype=np.uint64)
    v = np.bitwise_count(v)
    return (v & 1).astype(np.int8)
