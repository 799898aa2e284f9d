"""Authentication of quantum messages, symmetric and public-key.

The symmetric layer pads the message with a one-time-pad key x, then embeds
the padded state into the syndrome-y coset of code Q_z from a purity-testing
family. The receiver re-measures the syndrome and aborts on mismatch; an
undetected nontrivial tamper must act as a logical operator on Q_z, which by
the family's figure of merit happens for at most an epsilon fraction of z.

The public-key layer encrypts the classical parameters u = x || z || y with
single-use quantum key states, one bit per state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._bits import bits_to_hex, check_bits, int_to_bits, random_bits
from .errors import CapacityError, DecodeFailureError
from .pqc import DeltaBiasedSet, ApqcKey, PqcKey, apqc_encrypt, pqc_decrypt, pqc_encrypt
from .qpke import PrivateKeyF, PublicKey, _encrypt_bits, decrypt_bit
from .qstate import DensityMatrix, as_generator
from .stabilizer import SptcFamily, decode, encode, measure_syndrome

MAX_MIXTURE_TERMS = 1 << 12


@dataclass(frozen=True)
class AuthKey:
    """Authentication parameters: pad key x, code index z, syndrome y."""

    x: str
    z: int
    y: str

    def __post_init__(self):
        check_bits(self.x, len(self.x), "x")
        check_bits(self.y, len(self.y), "y")
        if self.z < 0:
            raise ValueError("z must be nonnegative")

    def serialize(self, family: SptcFamily) -> str:
        """u = x || z || y with z packed into ceil(log2 |family|) bits."""
        if self.z >= len(family):
            raise ValueError(f"z = {self.z} out of range for |family| = {len(family)}")
        return self.x + int_to_bits(self.z, family.index_bits) + self.y

    @staticmethod
    def deserialize(u: str, n_log: int, family: SptcFamily) -> "AuthKey":
        x_len = 2 * n_log
        t = family.syndrome_bits
        if len(u) != x_len + family.index_bits + t:
            raise ValueError(f"u has {len(u)} bits, expected {x_len + family.index_bits + t}")
        x = u[:x_len]
        # codepoints above |family| fold back onto the family
        z = int(u[x_len : x_len + family.index_bits], 2) % len(family)
        y = u[x_len + family.index_bits :]
        return AuthKey(x=x, z=z, y=y)


def auth_key_bits(n_log: int, family: SptcFamily) -> int:
    """h = |x| + ceil(log2 |family|) + t."""
    return 2 * n_log + family.index_bits + family.syndrome_bits


def random_auth_key(n_log: int, family: SptcFamily, rng) -> AuthKey:
    gen = as_generator(rng)
    return AuthKey(
        x=random_bits(gen, 2 * n_log),
        z=int(gen.integers(0, len(family))),
        y=random_bits(gen, family.syndrome_bits),
    )


def auth_encode(u: AuthKey, family: SptcFamily, message: DensityMatrix) -> DensityMatrix:
    """Pad with x, then embed into the syndrome-y coset of code Q_z."""
    n_log = message.qubits
    if len(u.x) != 2 * n_log:
        raise ValueError(f"x has {len(u.x)} bits, message needs {2 * n_log}")
    if u.z >= len(family):
        raise ValueError(f"z = {u.z} out of range")
    code = family.codes[u.z]
    if code.n_log != n_log:
        raise ValueError(f"family encodes {code.n_log} qubits, message has {n_log}")
    padded = pqc_encrypt(PqcKey(n_log, u.x), message)
    return encode(code, u.y, padded)


def auth_verify_decode(
    u: AuthKey, family: SptcFamily, received: DensityMatrix, rng
) -> tuple[bool, DensityMatrix | None]:
    """Measure the syndrome of Q_z; accept iff it matches y, then unpad."""
    code = family.codes[u.z]
    observed, post = measure_syndrome(code, received, rng=rng)
    if observed != u.y:
        return False, None
    logical = decode(code, u.y, post)
    return True, pqc_decrypt(PqcKey(code.n_log, u.x), logical)


@dataclass
class AuthBundle:
    """Public-key authenticated message: h tag/cipher pairs plus payload."""

    s_list: tuple[str, ...]
    bit_registers: tuple[DensityMatrix, ...]
    payload: DensityMatrix
    family_ref: str | None = None

    def __post_init__(self):
        if len(self.s_list) != len(self.bit_registers):
            raise ValueError("s_list and bit_registers length mismatch")

    def to_json(self) -> str:
        def dump(dm: DensityMatrix) -> list[list[float]]:
            return [[float(c.real), float(c.imag)] for c in dm.data.ravel()]

        return json.dumps(
            {
                "family_ref": self.family_ref,
                "s_list": [bits_to_hex(s) for s in self.s_list],
                "s_bits": len(self.s_list[0]) if self.s_list else 0,
                "bit_registers": [dump(r) for r in self.bit_registers],
                "payload": dump(self.payload),
            },
            sort_keys=True,
        )


def pk_authenticate(
    pks: Sequence[PublicKey], family: SptcFamily, message: DensityMatrix, rng
) -> tuple[AuthBundle, AuthKey]:
    """Draw fresh (x, z, y), authenticate the message, and encrypt the bits
    of u into the supplied key states. Consumes h = |u| keys."""
    gen = as_generator(rng)
    n_log = message.qubits
    h = auth_key_bits(n_log, family)
    if len(pks) != h:
        raise ValueError(f"need exactly {h} public keys, got {len(pks)}")
    u = random_auth_key(n_log, family, gen)
    payload = auth_encode(u, family, message)
    s_list, regs = _encrypt_bits(pks, u.serialize(family))
    bundle = AuthBundle(
        s_list=s_list, bit_registers=regs, payload=payload, family_ref=family.ref()
    )
    return bundle, u


def pk_verify(
    f: PrivateKeyF, family: SptcFamily, bundle: AuthBundle, rng
) -> tuple[bool, DensityMatrix | None]:
    """Recover u from the bit registers with the private key, then run the
    symmetric verification. Bit-decode failures reject."""
    bits = []
    for s, reg in zip(bundle.s_list, bundle.bit_registers):
        try:
            bits.append(str(decrypt_bit(f, s, reg)))
        except DecodeFailureError:
            return False, None
    n_log = bundle.payload.qubits - family.syndrome_bits
    u = AuthKey.deserialize("".join(bits), n_log, family)
    return auth_verify_decode(u, family, bundle.payload, rng)


def auth_mixture(
    family: SptcFamily,
    message: DensityMatrix,
    mode: str = "PQC",
    bset: DeltaBiasedSet | None = None,
) -> DensityMatrix:
    """Exact uniform mixture of the authenticated payload over all (x, z, y).

    In PQC mode the inner pad average is the maximally mixed state, so the
    result is exactly message-independent. In APQC mode x runs over
    (a, element of B) pairs and the result is message-independent up to the
    pad's measured mixing gap.
    """
    n_log = message.qubits
    t = family.syndrome_bits
    if mode == "PQC":
        x_space = [("PQC", int_to_bits(v, 2 * n_log)) for v in range(1 << (2 * n_log))]
    elif mode == "APQC":
        if bset is None:
            raise ValueError("APQC mode needs a small-bias set")
        if bset.n != n_log:
            raise ValueError("small-bias set is on the wrong number of bits")
        x_space = [
            ("APQC", (int_to_bits(a, n_log), b_idx))
            for a in range(1 << n_log)
            for b_idx in range(len(bset))
        ]
    else:
        raise ValueError("mode must be PQC or APQC")
    terms = len(x_space) * len(family) * (1 << t)
    if terms > MAX_MIXTURE_TERMS:
        raise CapacityError(f"{terms} mixture terms exceed the cap {MAX_MIXTURE_TERMS}")
    dim = 1 << (n_log + t)
    acc = np.zeros((dim, dim), dtype=complex)
    for kind, x in x_space:
        if kind == "PQC":
            padded = pqc_encrypt(PqcKey(n_log, x), message)
        else:
            padded = apqc_encrypt(ApqcKey(x[0], x[1]), bset, message)
        for z in range(len(family)):
            code = family.codes[z]
            for yv in range(1 << t):
                acc += encode(code, int_to_bits(yv, t), padded).data
    return DensityMatrix(acc / terms, _trusted=True)
