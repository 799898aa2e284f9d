"""Public-key encryption built on single-use quantum key states.

A private key is a secret function F mapping a public tag s to a hidden
trapdoor string k of odd parity. The issuer publishes one copy of the n-qubit
state rho_{k,i} = (|i> + |i xor k>)(<i| + <i xor k|)/2 per (s, i) pair. The
holder of a key state encrypts one classical bit by applying (Z tensor ... Z)
or not; odd parity of k makes the two bit values flip the relative phase of
the superposition, which only the trapdoor circuit can read out.

A quantum message is encrypted by drawing a fresh one-time-pad key l,
padding the message with it, and encrypting the bits of l with that many
key states.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._bits import bits_to_hex, check_bits, int_to_bits, parity, random_bits
from .errors import CapacityError, DecodeFailureError, KeyReuseError, RejectionBudgetError
from .pqc import ApqcKey, DeltaBiasedSet, PqcKey, apqc_decrypt, apqc_encrypt, pqc_decrypt, pqc_encrypt
from .qstate import (
    ATOL,
    DensityMatrix,
    PauliOp,
    apply_pauli,
    apply_unitary,
    as_generator,
    pure_state,
)

# Rejection-sampling attempts before giving up on hitting the odd-parity set.
REJECTION_BUDGET = 64

# bit_cipher_mixture enumerates 2^{2n-1} terms; global_cipher_mixture builds
# the full cipher of every register and is pinned to n = 2 (dimension 1024).
MAX_MIXTURE_N = 6
GLOBAL_MIXTURE_N = 2


def is_odd_parity(k: str) -> bool:
    """True iff the bit-string has an odd number of ones."""
    if not k:
        raise ValueError("empty bit-string")
    check_bits(k, len(k), "k")
    return parity(int(k, 2)) == 1


@dataclass(frozen=True)
class PrivateKeyF:
    """Secret keyed mapping from 2n-bit tags s to n-bit trapdoors k.

    Realized as a keyed hash truncated to n bits; the security claims under
    test only need k to stay hidden, which the ledger enforces, so the
    concrete mapping is opaque behind this type.
    """

    n: int
    seed: int
    s_bits: int = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2 (a 1-bit odd-parity trapdoor is public)")
        object.__setattr__(self, "s_bits", 2 * self.n)

    def evaluate(self, s: str) -> str:
        check_bits(s, self.s_bits, "s")
        key = self.seed.to_bytes(16, "big", signed=True)
        digest = hashlib.blake2b(s.encode(), key=key, digest_size=16).digest()
        return int_to_bits(int.from_bytes(digest, "big") % (1 << self.n), self.n)


def keygen_private(n: int, seed: int) -> PrivateKeyF:
    return PrivateKeyF(n=n, seed=seed)


def public_key_state(k: str, i: str) -> DensityMatrix:
    """rho_{k,i}: equal superposition of |i> and |i xor k| as a projector."""
    n = len(k)
    check_bits(k, n, "k")
    check_bits(i, n, "i")
    if int(k, 2) == 0:
        raise ValueError("k must be nonzero")
    vec = np.zeros(1 << n, dtype=complex)
    vec[int(i, 2)] = 1 / np.sqrt(2)
    vec[int(i, 2) ^ int(k, 2)] = 1 / np.sqrt(2)
    return pure_state(vec)


@dataclass
class PublicKey:
    """Published (s, state) pair. Single use: encrypt_bit flips ``used``."""

    s: str
    state: DensityMatrix
    used: bool = False

    def tag_json(self) -> str:
        return json.dumps(
            {"n": self.state.qubits, "s": bits_to_hex(self.s), "used": self.used},
            sort_keys=True,
        )


@dataclass
class KeyLedgerEntry:
    s: str
    k: str
    i: str
    issued: bool = False


class KeyIssuer:
    """Owns a private key and the ledger of issued key states.

    Issuance mutates the ledger and must be serialized by the caller; all
    operations on issued values are pure.
    """

    def __init__(self, f: PrivateKeyF):
        self.f = f
        self.entries: list[KeyLedgerEntry] = []
        self._si_pairs: set[tuple[str, str]] = set()

    def issue(self, rng) -> tuple[PublicKey, KeyLedgerEntry]:
        """Sample a tag s with F(s) of odd parity, a fresh i, and publish
        the single permitted copy of rho_{k,i}."""
        gen = as_generator(rng)
        for _ in range(REJECTION_BUDGET):
            s = random_bits(gen, self.f.s_bits)
            k = self.f.evaluate(s)
            if is_odd_parity(k):
                break
        else:
            raise RejectionBudgetError(
                f"no odd-parity k within {REJECTION_BUDGET} draws (p = 2^-{REJECTION_BUDGET})"
            )
        for _ in range(REJECTION_BUDGET):
            i = random_bits(gen, self.f.n)
            if (s, i) not in self._si_pairs:
                break
        else:
            raise RejectionBudgetError("no fresh (s, i) pair within budget")
        entry = KeyLedgerEntry(s=s, k=k, i=i, issued=True)
        self.entries.append(entry)
        self._si_pairs.add((s, i))
        return PublicKey(s=s, state=public_key_state(k, i)), entry

    def issue_many(self, count: int, rng) -> list[PublicKey]:
        gen = as_generator(rng)
        return [self.issue(gen)[0] for _ in range(count)]

    def public_json(self) -> str:
        """Tag dump safe to publish: no k, i or seed."""
        return json.dumps(
            [{"n": self.f.n, "s": bits_to_hex(e.s), "issued": e.issued} for e in self.entries],
            sort_keys=True,
        )

    def secret_json(self) -> str:
        """Full ledger including secrets; keep out of reports."""
        return json.dumps(
            {
                "n": self.f.n,
                "seed": self.f.seed,
                "entries": [
                    {"s": bits_to_hex(e.s), "k": bits_to_hex(e.k), "i": bits_to_hex(e.i),
                     "issued": e.issued}
                    for e in self.entries
                ],
            },
            sort_keys=True,
        )


def issue_public_key(issuer: KeyIssuer, rng) -> tuple[PublicKey, KeyLedgerEntry]:
    return issuer.issue(rng)


def encrypt_bit(pk: PublicKey, l: int) -> DensityMatrix:
    """Encode one bit: apply (Z tensor ... tensor Z)^l to the key state.

    Hard-errors on reuse; the scheme's security rests on one copy per key.
    """
    if l not in (0, 1):
        raise ValueError("l must be 0 or 1")
    if pk.used:
        raise KeyReuseError(f"public key {pk.s} has already been used")
    pk.used = True
    if l == 0:
        return pk.state
    n = pk.state.qubits
    return apply_pauli(pk.state, PauliOp(n, "0" * n, "1" * n))


@lru_cache(maxsize=512)
def _trapdoor_unitary(k: str) -> np.ndarray:
    """Readout circuit for trapdoor k: CNOTs from the pivot onto the other
    support qubits collapse the two branches to differ only at the pivot,
    then a Hadamard there turns the relative phase into a basis outcome."""
    n = len(k)
    dim = 1 << n
    pivot = k.index("1")
    rest = int(k, 2) & ~(1 << (n - 1 - pivot))
    idx = np.arange(dim)
    controlled = (idx >> (n - 1 - pivot)) & 1
    permuted = idx ^ (controlled * rest)
    perm = np.zeros((dim, dim), dtype=complex)
    perm[permuted, idx] = 1.0
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    hp = np.kron(np.kron(np.eye(1 << pivot), h), np.eye(1 << (n - 1 - pivot)))
    return hp @ perm


def decrypt_bit(f: PrivateKeyF, s: str, cipher: DensityMatrix, atol: float = ATOL) -> int:
    """Recover the encrypted bit with the trapdoor k = F(s).

    Deterministic for every valid cipher; raises DecodeFailureError when the
    received state is not supported on a (|i>, |i xor k|) pair.
    """
    k = f.evaluate(s)
    if not is_odd_parity(k):
        raise DecodeFailureError(f"F({s}) has even parity; ledger or tag corrupted")
    if cipher.qubits != f.n:
        raise ValueError(f"cipher has {cipher.qubits} qubits, scheme uses {f.n}")
    pivot = k.index("1")
    post = apply_unitary(cipher, _trapdoor_unitary(k))
    # probability that the pivot qubit reads 1
    idx = np.arange(post.dim)
    mask = ((idx >> (f.n - 1 - pivot)) & 1).astype(bool)
    p1 = float(np.real(np.diag(post.data)[mask].sum()))
    if min(p1, 1 - p1) > 100 * atol:
        raise DecodeFailureError(
            f"cipher is not a valid bit encryption for k = F({s}): Pr(1) = {p1:.6f}"
        )
    return int(round(p1))


@dataclass
class QuantumCiphertext:
    """Tags plus per-bit cipher registers plus the padded message register."""

    s_list: tuple[str, ...]
    bit_registers: tuple[DensityMatrix, ...]
    message_register: DensityMatrix
    mode: str  # "PQC" or "APQC"
    apqc_set_ref: str | None = None

    def __post_init__(self):
        if self.mode not in ("PQC", "APQC"):
            raise ValueError("mode must be PQC or APQC")
        if len(self.s_list) != len(self.bit_registers):
            raise ValueError("s_list and bit_registers length mismatch")

    def to_json(self) -> str:
        def dump(dm: DensityMatrix) -> list[list[float]]:
            flat = dm.data.ravel()
            return [[float(c.real), float(c.imag)] for c in flat]

        return json.dumps(
            {
                "mode": self.mode,
                "apqc_set_ref": self.apqc_set_ref,
                "s_list": [bits_to_hex(s) for s in self.s_list],
                "s_bits": len(self.s_list[0]) if self.s_list else 0,
                "bit_registers": [dump(r) for r in self.bit_registers],
                "message_register": dump(self.message_register),
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "QuantumCiphertext":
        obj = json.loads(text)

        def load(pairs: list[list[float]]) -> DensityMatrix:
            flat = np.array([complex(re, im) for re, im in pairs])
            dim = int(round(np.sqrt(flat.shape[0])))
            return DensityMatrix(flat.reshape(dim, dim))

        from ._bits import hex_to_bits

        width = obj["s_bits"]
        return QuantumCiphertext(
            s_list=tuple(hex_to_bits(h, width) for h in obj["s_list"]),
            bit_registers=tuple(load(r) for r in obj["bit_registers"]),
            message_register=load(obj["message_register"]),
            mode=obj["mode"],
            apqc_set_ref=obj.get("apqc_set_ref"),
        )


def _encrypt_bits(pks: Sequence[PublicKey], bits: str) -> tuple[tuple[str, ...], tuple[DensityMatrix, ...]]:
    if len(pks) != len(bits):
        raise ValueError(f"need {len(bits)} unused public keys, got {len(pks)}")
    if any(pk.used for pk in pks):
        raise KeyReuseError("a supplied public key was already used")
    regs = tuple(encrypt_bit(pk, int(b)) for pk, b in zip(pks, bits))
    return tuple(pk.s for pk in pks), regs


def encrypt_message(
    pks: Sequence[PublicKey], message: DensityMatrix, rng
) -> QuantumCiphertext:
    """Pad the message with a fresh 2n-bit one-time-pad key l and encrypt the
    bits of l into the 2n supplied key states."""
    n = message.qubits
    if len(pks) != 2 * n:
        raise ValueError(f"need exactly {2*n} public keys for an {n}-qubit message")
    for pk in pks:
        if pk.state.qubits != n:
            raise ValueError("public key register size does not match the message")
    gen = as_generator(rng)
    l = random_bits(gen, 2 * n)
    s_list, regs = _encrypt_bits(pks, l)
    return QuantumCiphertext(
        s_list=s_list,
        bit_registers=regs,
        message_register=pqc_encrypt(PqcKey(n, l), message),
        mode="PQC",
    )


def decrypt_message(f: PrivateKeyF, ct: QuantumCiphertext) -> DensityMatrix:
    """Recover l bit by bit with the trapdoors, then unpad the message."""
    if ct.mode != "PQC":
        raise ValueError("decrypt_message handles PQC mode; use decrypt_message_apqc")
    n = ct.message_register.qubits
    bits = []
    for j, (s, reg) in enumerate(zip(ct.s_list, ct.bit_registers)):
        try:
            bits.append(str(decrypt_bit(f, s, reg)))
        except DecodeFailureError as exc:
            raise DecodeFailureError(f"bit register {j}: {exc}") from exc
    l = "".join(bits)
    if len(l) != 2 * n:
        raise ValueError(f"ciphertext has {len(l)} bit registers, expected {2*n}")
    return pqc_decrypt(PqcKey(n, l), ct.message_register)


def apqc_key_bits(n: int, bset: DeltaBiasedSet) -> int:
    """Total key length m = n + ceil(log2 |B|)."""
    return n + bset.index_bits


def encrypt_message_apqc(
    pks: Sequence[PublicKey], message: DensityMatrix, bset: DeltaBiasedSet, rng
) -> QuantumCiphertext:
    """Same protocol with the shorter approximate-pad key a || rank(b)."""
    n = message.qubits
    if bset.n != n:
        raise ValueError("small-bias set is on the wrong number of bits")
    m = apqc_key_bits(n, bset)
    if len(pks) != m:
        raise ValueError(f"need exactly {m} public keys for APQC mode at this |B|")
    gen = as_generator(rng)
    a = random_bits(gen, n)
    b_index = int(gen.integers(0, len(bset)))
    u = a + (int_to_bits(b_index, bset.index_bits) if bset.index_bits else "")
    s_list, regs = _encrypt_bits(pks, u)
    return QuantumCiphertext(
        s_list=s_list,
        bit_registers=regs,
        message_register=apqc_encrypt(ApqcKey(a, b_index), bset, message),
        mode="APQC",
        apqc_set_ref=bset.ref(),
    )


def decrypt_message_apqc(
    f: PrivateKeyF, ct: QuantumCiphertext, bset: DeltaBiasedSet
) -> DensityMatrix:
    if ct.mode != "APQC":
        raise ValueError("ciphertext is not APQC mode")
    if ct.apqc_set_ref != bset.ref():
        raise ValueError("ciphertext was produced with a different small-bias set")
    n = ct.message_register.qubits
    bits = []
    for j, (s, reg) in enumerate(zip(ct.s_list, ct.bit_registers)):
        try:
            bits.append(str(decrypt_bit(f, s, reg)))
        except DecodeFailureError as exc:
            raise DecodeFailureError(f"bit register {j}: {exc}") from exc
    u = "".join(bits)
    a = u[:n]
    # unused codepoints fold back onto the set; honest ciphers never need it
    b_index = int(u[n:], 2) % len(bset) if bset.index_bits else 0
    return apqc_decrypt(ApqcKey(a, b_index), bset, ct.message_register)


@lru_cache(maxsize=64)
def bit_cipher_mixture(n: int, l: int) -> DensityMatrix:
    """Exact average of the bit-l cipher over all odd-parity k and all i.

    The two mixtures (l = 0, 1) sit at trace distance exactly 1/2^{n-1}.
    """
    if l not in (0, 1):
        raise ValueError("l must be 0 or 1")
    if n > MAX_MIXTURE_N:
        raise CapacityError(f"mixture over 2^{2*n-1} terms exceeds the n<={MAX_MIXTURE_N} cap")
    dim = 1 << n
    sign = -1.0 if l else 1.0
    acc = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        if parity(k) != 1:
            continue
        for i in range(dim):
            vec = np.zeros(dim, dtype=complex)
            vec[i] += 1 / np.sqrt(2)
            vec[i ^ k] += sign / np.sqrt(2)
            acc += np.outer(vec, vec.conj())
    return DensityMatrix(acc / (1 << (2 * n - 1)), _trusted=True)


def global_cipher_mixture(message: DensityMatrix, n: int) -> DensityMatrix:
    """The full cipher as the attacker sees it: average over the pad key l of
    (per-bit cipher mixtures) tensor (padded message). Exact, n = 2 only."""
    if n != GLOBAL_MIXTURE_N:
        raise CapacityError(f"global mixture is materialized only at n = {GLOBAL_MIXTURE_N}")
    if message.qubits != n:
        raise ValueError(f"message must have {n} qubits")
    mixes = (bit_cipher_mixture(n, 0).data, bit_cipher_mixture(n, 1).data)
    total_dim = 1 << (2 * n * n + n)
    acc = np.zeros((total_dim, total_dim), dtype=complex)
    for l in range(1 << (2 * n)):
        bits = int_to_bits(l, 2 * n)
        term = np.ones((1, 1), dtype=complex)
        for b in bits:
            term = np.kron(term, mixes[int(b)])
        term = np.kron(term, pqc_encrypt(PqcKey(n, bits), message).data)
        acc += term
    return DensityMatrix(acc / (1 << (2 * n)), _trusted=True)
