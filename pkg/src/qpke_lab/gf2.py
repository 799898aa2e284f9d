"""Carry-less GF(2)[x] arithmetic and squaring in GF(2^n).

Field elements are n-bit strings; bit i of the integer encoding is the
coefficient of x^i (so the last character of the bit-string is the constant
term). The modulus is the lexicographically smallest irreducible polynomial
of degree n, found by brute force and cached.
"""

from __future__ import annotations

from functools import lru_cache

from ._bits import bits_to_int, int_to_bits


def polymul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def polymod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _is_irreducible(p: int) -> bool:
    deg = p.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            if polymod(p, q) == 0:
                return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(n: int) -> int:
    """Smallest degree-n irreducible polynomial by integer encoding."""
    if n < 1:
        raise ValueError("degree must be at least 1")
    for p in range(1 << n, 1 << (n + 1)):
        if _is_irreducible(p):
            return p
    raise AssertionError("unreachable: irreducible polynomials exist for every degree")


@lru_cache(maxsize=64)
def _square_table(n: int) -> tuple[int, ...]:
    mod = smallest_irreducible(n)
    table = []
    for a in range(1 << n):
        # squaring spreads bits: (sum a_i x^i)^2 = sum a_i x^{2i} over GF(2)
        sq = 0
        for i in range(n):
            if (a >> i) & 1:
                sq |= 1 << (2 * i)
        table.append(polymod(sq, mod))
    return tuple(table)


def gf2_square(a: str) -> str:
    """Square of the field element a in GF(2^len(a))."""
    n = len(a)
    return int_to_bits(_square_table(n)[bits_to_int(a)], n)
