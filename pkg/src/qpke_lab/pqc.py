"""Private quantum channel (quantum one-time pad) and its approximate variant.

The exact channel encrypts an n-qubit state by conjugation with X^a Z^b keyed
by a uniform 2n-bit string; averaging over all keys sends every input to the
maximally mixed state. The approximate variant keys the phase layer by an
element of a small-bias set B instead of a full n-bit mask, shortening the key
to n + ceil(log2 |B|) bits at the cost of a measurable gap from perfect mixing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._bits import (
    bits_to_hex,
    check_bits,
    hex_to_bits,
    int_to_bits,
    parity,
    random_bits,
    xor_bits,
)
from .errors import CapacityError
from .gf2 import gf2_square
from .qstate import (
    ATOL,
    DensityMatrix,
    PauliOp,
    apply_pauli,
    as_generator,
    basis_state,
    maximally_mixed,
    pure_state,
    trace_distance,
)

# Mixture sums enumerate 2^{2n} keys; keep the exact channel small.
MAX_MIXTURE_QUBITS = 5


@dataclass(frozen=True)
class PqcKey:
    """2n-bit one-time-pad key: first n bits are the X mask, last n the Z mask."""

    n: int
    bits: str

    def __post_init__(self):
        check_bits(self.bits, 2 * self.n, "key bits")

    @property
    def alpha(self) -> str:
        return self.bits[: self.n]

    @property
    def beta(self) -> str:
        return self.bits[self.n :]

    @staticmethod
    def random(n: int, rng) -> "PqcKey":
        return PqcKey(n, random_bits(as_generator(rng), 2 * n))


def _key_pauli(key: PqcKey) -> PauliOp:
    return PauliOp(key.n, key.alpha, key.beta)


def pqc_encrypt(key: PqcKey, message: DensityMatrix) -> DensityMatrix:
    """X^alpha Z^beta conjugation of the message."""
    if message.qubits != key.n:
        raise ValueError(f"key is for {key.n} qubits, message has {message.qubits}")
    return apply_pauli(message, _key_pauli(key))


def pqc_decrypt(key: PqcKey, cipher: DensityMatrix) -> DensityMatrix:
    # Conjugation by the inverse coincides with conjugation by the operator
    # itself: (X^a Z^b)^dagger = +/- X^a Z^b and the sign cancels.
    if cipher.qubits != key.n:
        raise ValueError(f"key is for {key.n} qubits, cipher has {cipher.qubits}")
    return apply_pauli(cipher, _key_pauli(key))


def pqc_mixture(message: DensityMatrix) -> DensityMatrix:
    """Uniform average of the cipher over all 2^{2n} keys.

    Equals the maximally mixed state for every input (the full Pauli twirl).
    """
    n = message.qubits
    if n > MAX_MIXTURE_QUBITS:
        raise CapacityError(f"mixture over 2^{2*n} keys exceeds the n<={MAX_MIXTURE_QUBITS} cap")
    acc = np.zeros_like(message.data)
    for l in range(1 << (2 * n)):
        key = PqcKey(n, int_to_bits(l, 2 * n))
        acc += pqc_encrypt(key, message).data
    return DensityMatrix(acc / (1 << (2 * n)), _trusted=True)


# ---------------------------------------------------------------------------
# Small-bias sets
# ---------------------------------------------------------------------------


def measure_bias(candidate: Sequence[str]) -> float:
    """Exact bias of a set of n-bit strings.

    max over nonzero x of |mean over b of (-1)^{b.x}|, computed with an
    integer Walsh-Hadamard transform so the result is exact.
    """
    elems = list(candidate)
    if not elems:
        raise ValueError("candidate set is empty")
    n = len(elems[0])
    for e in elems:
        check_bits(e, n, "set element")
    if len(set(elems)) != len(elems):
        raise ValueError("candidate set has duplicate elements")
    counts = np.zeros(1 << n, dtype=np.int64)
    for e in elems:
        counts[int(e, 2)] += 1
    # in-place Walsh-Hadamard butterfly over integer counts
    h = 1
    while h < counts.shape[0]:
        counts = counts.reshape(-1, 2 * h)
        a = counts[:, :h].copy()
        b = counts[:, h:].copy()
        counts[:, :h] = a + b
        counts[:, h:] = a - b
        counts = counts.ravel()
        h *= 2
    if counts.shape[0] == 1:
        return 0.0
    return float(np.max(np.abs(counts[1:])) / len(elems))


@dataclass(frozen=True)
class DeltaBiasedSet:
    """A set B of distinct n-bit strings with its exactly recomputed bias.

    Elements are stored sorted; an index into the set is the lexicographic
    rank of the element. ``target_met`` is set by the search entry point.
    """

    n: int
    elements: tuple[str, ...]
    measured_bias: float = field(default=-1.0)
    search_seed: int | None = None
    target_met: bool | None = None

    def __post_init__(self):
        elems = tuple(sorted(self.elements))
        for e in elems:
            check_bits(e, self.n, "set element")
        if not elems:
            raise ValueError("a small-bias set must be nonempty")
        if len(set(elems)) != len(elems):
            raise ValueError("set elements must be distinct")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "measured_bias", measure_bias(elems))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def index_bits(self) -> int:
        """Bits needed to address an element (0 for a singleton)."""
        return max(1, (len(self.elements) - 1).bit_length()) if len(self.elements) > 1 else 0

    def ref(self) -> str:
        """Short stable identifier recorded in ciphertexts."""
        h = hashlib.sha256(("|".join(self.elements)).encode()).hexdigest()
        return f"B{self.n}-{h[:12]}"

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "elements": [bits_to_hex(e) for e in self.elements],
                "measured_bias": self.measured_bias,
                "search_seed": self.search_seed,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "DeltaBiasedSet":
        obj = json.loads(text)
        elems = tuple(hex_to_bits(h, obj["n"]) for h in obj["elements"])
        return DeltaBiasedSet(obj["n"], elems, search_seed=obj.get("search_seed"))


def find_delta_biased_set(
    n: int,
    size_target: int,
    delta_target: float,
    rng_seed: int,
    trial_budget: int = 2000,
) -> DeltaBiasedSet:
    """Seeded random-restart hill climb for a small-bias set.

    Swaps one element at a time and keeps strict improvements, evaluating the
    bias exactly at each step. Returns the best set found; ``target_met``
    records whether the requested bias was reached within the budget.
    """
    if size_target < 1 or size_target > (1 << n):
        raise ValueError(f"size_target must be in [1, 2^{n}]")
    rng = as_generator(rng_seed)
    seed_record = int(rng_seed) if isinstance(rng_seed, (int, np.integer)) else None
    universe = 1 << n

    def as_strings(ints) -> tuple[str, ...]:
        return tuple(int_to_bits(int(v), n) for v in ints)

    if size_target == universe:
        best = tuple(int_to_bits(v, n) for v in range(universe))
        bias = measure_bias(best)
        return DeltaBiasedSet(n, best, search_seed=seed_record,
                              target_met=bias <= delta_target)

    best_set: tuple[str, ...] | None = None
    best_bias = float("inf")
    evals = 0
    stale_limit = max(8, 4 * n)
    while evals < trial_budget:
        current = set(rng.choice(universe, size=size_target, replace=False).tolist())
        bias = measure_bias(as_strings(current))
        evals += 1
        stale = 0
        while evals < trial_budget and stale < stale_limit and bias > delta_target:
            out = int(rng.choice(sorted(current)))
            candidates = [v for v in range(universe) if v not in current]
            inc = int(candidates[rng.integers(0, len(candidates))])
            trial = (current - {out}) | {inc}
            tb = measure_bias(as_strings(sorted(trial)))
            evals += 1
            if tb < bias:
                current, bias, stale = trial, tb, 0
            else:
                stale += 1
        if bias < best_bias:
            best_bias, best_set = bias, as_strings(sorted(current))
        if best_bias <= delta_target:
            break
    assert best_set is not None
    return DeltaBiasedSet(n, best_set, search_seed=seed_record,
                          target_met=best_bias <= delta_target)


# ---------------------------------------------------------------------------
# Approximate channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApqcKey:
    """Key (a, b): an n-bit X mask and the rank of an element of B."""

    a: str
    b_index: int

    def __post_init__(self):
        check_bits(self.a, len(self.a), "a")
        if self.b_index < 0:
            raise ValueError("b_index must be nonnegative")


def phase_flip_unitary(b: str) -> np.ndarray:
    """Diagonal unitary |x> -> (-1)^{b.x} |x> (used by tests as an oracle)."""
    n = len(b)
    signs = np.array([1.0 - 2.0 * parity(v & int(b, 2)) for v in range(1 << n)])
    return np.diag(signs.astype(complex))


def _apqc_pauli(key: ApqcKey, bset: DeltaBiasedSet) -> PauliOp:
    # X^a Z^{a^2} U_b collapses to the single Pauli X^a Z^{a^2 xor b}:
    # both Z^{a^2} and U_b are (+/-1)-diagonal with multiplicative signs.
    if key.b_index >= len(bset):
        raise ValueError(f"b_index {key.b_index} out of range for |B| = {len(bset)}")
    n = bset.n
    if len(key.a) != n:
        raise ValueError(f"a has {len(key.a)} bits, set elements have {n}")
    a_sq = gf2_square(key.a)
    b = bset.elements[key.b_index]
    return PauliOp(n, key.a, xor_bits(a_sq, b))


def apqc_encrypt(key: ApqcKey, bset: DeltaBiasedSet, message: DensityMatrix) -> DensityMatrix:
    """Conjugation by X^a Z^{a^2} U_b, with a^2 computed in GF(2^n)."""
    if message.qubits != bset.n:
        raise ValueError(f"message has {message.qubits} qubits, set is on {bset.n} bits")
    return apply_pauli(message, _apqc_pauli(key, bset))


def apqc_decrypt(key: ApqcKey, bset: DeltaBiasedSet, cipher: DensityMatrix) -> DensityMatrix:
    # Same self-inverse-conjugation argument as pqc_decrypt.
    if cipher.qubits != bset.n:
        raise ValueError(f"cipher has {cipher.qubits} qubits, set is on {bset.n} bits")
    return apply_pauli(cipher, _apqc_pauli(key, bset))


def apqc_mixture(message: DensityMatrix, bset: DeltaBiasedSet) -> DensityMatrix:
    """Uniform average over all a in {0,1}^n and b in B."""
    n = bset.n
    if n > MAX_MIXTURE_QUBITS:
        raise CapacityError(f"mixture over 2^{n} x |B| keys exceeds the n<={MAX_MIXTURE_QUBITS} cap")
    acc = np.zeros_like(message.data)
    for a in range(1 << n):
        for b_idx in range(len(bset)):
            key = ApqcKey(int_to_bits(a, n), b_idx)
            acc += apqc_encrypt(key, bset, message).data
    return DensityMatrix(acc / ((1 << n) * len(bset)), _trusted=True)


def apqc_security_gap(
    bset: DeltaBiasedSet,
    n: int,
    sample_messages: Sequence[DensityMatrix] = (),
) -> float:
    """Max distance of the key-averaged cipher from the maximally mixed state,
    over a message sample.

    A sampled lower bound on the true worst case over all inputs, not a
    supremum. The sample always includes every computational basis state and
    the uniform-superposition state.
    """
    if n != bset.n:
        raise ValueError("n does not match the set")
    plus = pure_state(np.ones(1 << n) / np.sqrt(1 << n))
    samples = [basis_state(int_to_bits(v, n)) for v in range(1 << n)]
    samples.append(plus)
    samples.extend(sample_messages)
    mixed = maximally_mixed(n)
    return max(trace_distance(apqc_mixture(s, bset), mixed) for s in samples)
