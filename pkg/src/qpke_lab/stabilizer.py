"""Small stabilizer codes with syndrome-coset encoding, and search for code
families whose worst-case undetected-tamper fraction is small.

A code is kept as a full tableau: t = n_phys - n_log commuting independent
generators, their destabilizers (one anticommuting partner per generator,
commuting with everything else), and logical X/Z pairs. Symplectic rows are
(x, z) integer masks; bit arithmetic decides commutation, and dense matrices
are materialized only for the actual encode/measure/decode channels
(n_phys <= 6, so dimensions stay at most 64).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._bits import bits_to_hex, hex_to_bits, int_to_bits, parity, parity_vector
from .errors import CapacityError, DecodeFailureError
from .qstate import ATOL, DensityMatrix, PauliOp, as_generator

MAX_PHYS_QUBITS = 6


# ---------------------------------------------------------------------------
# Symplectic arithmetic on (x, z) integer rows
# ---------------------------------------------------------------------------


def _row_of(op: PauliOp) -> tuple[int, int]:
    return int(op.x_mask, 2), int(op.z_mask, 2)


def _op_of(row: tuple[int, int], n: int) -> PauliOp:
    return PauliOp(n, int_to_bits(row[0], n), int_to_bits(row[1], n))


def symplectic_product(r1: tuple[int, int], r2: tuple[int, int]) -> int:
    """0 if the two Pauli classes commute, 1 if they anticommute."""
    return parity(r1[0] & r2[1]) ^ parity(r1[1] & r2[0])


def _gf2_rank(vectors: list[int]) -> int:
    rank = 0
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
            rank += 1
    return rank


def _span_keys(rows: list[tuple[int, int]], n: int) -> set[int]:
    """All GF(2) combinations of the rows, keyed as (x << n) | z."""
    keys = {0}
    for x, z in rows:
        k = (x << n) | z
        keys |= {k ^ old for old in keys}
    return keys


def hermitian_pauli_matrix(op: PauliOp) -> np.ndarray:
    """The +/-1-eigenvalue observable for a Pauli class: i^{x.z} X^x Z^z."""
    x, z = _row_of(op)
    ph = 1j if parity(x & z) else 1
    return ph * op.matrix()


# ---------------------------------------------------------------------------
# Codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """An [[n_phys, n_log]] code as a complete tableau.

    generators, destabilizers and logical_ops are validated against the
    expected commutation pattern at construction.
    """

    n_phys: int
    n_log: int
    generators: tuple[PauliOp, ...]
    logical_ops: tuple[tuple[PauliOp, PauliOp], ...]
    destabilizers: tuple[PauliOp, ...]

    def __post_init__(self):
        n, t = self.n_phys, self.n_phys - self.n_log
        if self.n_log < 1 or t < 1:
            raise ValueError("need n_log >= 1 and at least one generator")
        if n > MAX_PHYS_QUBITS:
            raise CapacityError(f"codes are capped at {MAX_PHYS_QUBITS} physical qubits")
        if len(self.generators) != t or len(self.destabilizers) != t:
            raise ValueError(f"expected {t} generators and destabilizers")
        if len(self.logical_ops) != self.n_log:
            raise ValueError(f"expected {self.n_log} logical pairs")
        for op in self._all_ops():
            if op.qubits != n:
                raise ValueError("tableau row acts on the wrong number of qubits")
        g = [_row_of(op) for op in self.generators]
        d = [_row_of(op) for op in self.destabilizers]
        lx = [_row_of(p[0]) for p in self.logical_ops]
        lz = [_row_of(p[1]) for p in self.logical_ops]
        for a in range(t):
            for b in range(t):
                if symplectic_product(g[a], g[b]) != 0:
                    raise ValueError("generators do not commute")
                if symplectic_product(d[a], g[b]) != (1 if a == b else 0):
                    raise ValueError("destabilizer pattern broken")
        if _gf2_rank([(x << n) | z for x, z in g]) != t:
            raise ValueError("generators are not independent")
        for a in range(self.n_log):
            for b in range(self.n_log):
                want = 1 if a == b else 0
                if symplectic_product(lx[a], lz[b]) != want:
                    raise ValueError("logical X/Z pairing broken")
                if symplectic_product(lx[a], lx[b]) or symplectic_product(lz[a], lz[b]):
                    raise ValueError("logical operators of the same type must commute")
            for r in g + d:
                if symplectic_product(lx[a], r) or symplectic_product(lz[a], r):
                    raise ValueError("logical operators must commute with the tableau")

    def _all_ops(self):
        for op in self.generators + self.destabilizers:
            yield op
        for px, pz in self.logical_ops:
            yield px
            yield pz

    @property
    def syndrome_bits(self) -> int:
        return self.n_phys - self.n_log

    def syndrome_of_pauli(self, p: PauliOp) -> str:
        """Predicted syndrome flip pattern of a Pauli error (bit j set iff the
        error anticommutes with generator j)."""
        r = _row_of(p)
        return "".join(str(symplectic_product(r, _row_of(g))) for g in self.generators)

    def stabilizer_span(self) -> set[int]:
        return _span_keys([_row_of(g) for g in self.generators], self.n_phys)

    def to_json(self) -> str:
        def row(op: PauliOp) -> list[str]:
            return [bits_to_hex(op.x_mask), bits_to_hex(op.z_mask)]

        return json.dumps(
            {
                "n_phys": self.n_phys,
                "n_log": self.n_log,
                "generators": [row(g) for g in self.generators],
                "destabilizers": [row(d) for d in self.destabilizers],
                "logical_xs": [row(p[0]) for p in self.logical_ops],
                "logical_zs": [row(p[1]) for p in self.logical_ops],
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "StabilizerCode":
        obj = json.loads(text)
        n = obj["n_phys"]

        def op(pair: list[str]) -> PauliOp:
            return PauliOp(n, hex_to_bits(pair[0], n), hex_to_bits(pair[1], n))

        return StabilizerCode(
            n_phys=n,
            n_log=obj["n_log"],
            generators=tuple(op(r) for r in obj["generators"]),
            destabilizers=tuple(op(r) for r in obj["destabilizers"]),
            logical_ops=tuple(
                (op(x), op(z)) for x, z in zip(obj["logical_xs"], obj["logical_zs"])
            ),
        )


def canonical_code(n_log: int, t: int) -> StabilizerCode:
    """Trivial code: generator j is Z on qubit j, logical pairs live on the
    last n_log qubits."""
    n = n_log + t
    zero = "0" * n

    def single(q: int, kind: str) -> PauliOp:
        mask = "".join("1" if j == q else "0" for j in range(n))
        return PauliOp(n, mask if kind == "X" else zero, mask if kind == "Z" else zero)

    return StabilizerCode(
        n_phys=n,
        n_log=n_log,
        generators=tuple(single(j, "Z") for j in range(t)),
        destabilizers=tuple(single(j, "X") for j in range(t)),
        logical_ops=tuple((single(t + a, "X"), single(t + a, "Z")) for a in range(n_log)),
    )


def _apply_random_symplectic(rows: list[tuple[int, int]], n: int, rng) -> list[tuple[int, int]]:
    """Conjugate all rows by a random Clifford, tracked purely symplectically.

    Elementary moves (Hadamard, phase, CNOT) on random qubits preserve every
    commutation relation, so the tableau stays valid.
    """
    xs = [r[0] for r in rows]
    zs = [r[1] for r in rows]
    n_ops = 4 * n * n + 8
    for _ in range(n_ops):
        kind = int(rng.integers(0, 3))
        if kind == 0:  # Hadamard: swap x and z at one bit
            b = 1 << int(rng.integers(0, n))
            for j in range(len(xs)):
                xb, zb = xs[j] & b, zs[j] & b
                if bool(xb) != bool(zb):
                    xs[j] ^= b
                    zs[j] ^= b
        elif kind == 1:  # phase gate: z ^= x at one bit
            b = 1 << int(rng.integers(0, n))
            for j in range(len(xs)):
                if xs[j] & b:
                    zs[j] ^= b
        else:  # CNOT: x_t ^= x_c, z_c ^= z_t
            c = int(rng.integers(0, n))
            tq = int(rng.integers(0, n - 1))
            if tq >= c:
                tq += 1
            bc, bt = 1 << c, 1 << tq
            for j in range(len(xs)):
                if xs[j] & bc:
                    xs[j] ^= bt
                if zs[j] & bt:
                    zs[j] ^= bc
    return list(zip(xs, zs))


def random_stabilizer_code(n_log: int, t: int, rng) -> StabilizerCode:
    """Random Clifford conjugation of the canonical code."""
    gen = as_generator(rng)
    base = canonical_code(n_log, t)
    n = base.n_phys
    rows = [_row_of(op) for op in base._all_ops()]
    rows = _apply_random_symplectic(rows, n, gen)
    t_rows, rest = rows[:t], rows[t:]
    d_rows = rest[:t]
    log_rows = rest[t:]
    logical = tuple(
        (_op_of(log_rows[2 * a], n), _op_of(log_rows[2 * a + 1], n)) for a in range(n_log)
    )
    return StabilizerCode(
        n_phys=n,
        n_log=n_log,
        generators=tuple(_op_of(r, n) for r in t_rows),
        destabilizers=tuple(_op_of(r, n) for r in d_rows),
        logical_ops=logical,
    )


# ---------------------------------------------------------------------------
# Dense channels: encode / measure / decode
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _code_matrices(code: StabilizerCode):
    """(encoding isometry V, Hermitian generator observables, destabilizer
    matrices). V maps the logical space into the syndrome-0 coset; columns are
    the logical basis states."""
    dim = 1 << code.n_phys
    gens = [hermitian_pauli_matrix(g) for g in code.generators]
    dests = [hermitian_pauli_matrix(d) for d in code.destabilizers]
    log_x = [hermitian_pauli_matrix(p[0]) for p in code.logical_ops]
    log_z = [hermitian_pauli_matrix(p[1]) for p in code.logical_ops]

    anchor = None
    for r in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[r] = 1.0
        for p in gens + log_z:
            v = (v + p @ v) / 2
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            anchor = v / norm
            break
    assert anchor is not None, "joint +1 eigenspace is one-dimensional and nonempty"

    cols = []
    for x in range(1 << code.n_log):
        v = anchor
        for a in range(code.n_log):
            if (x >> (code.n_log - 1 - a)) & 1:
                v = log_x[a] @ v
        cols.append(v)
    iso = np.column_stack(cols)
    return iso, gens, dests


def _syndrome_shift(code: StabilizerCode, syndrome: str) -> np.ndarray:
    _, _, dests = _code_matrices(code)
    dim = 1 << code.n_phys
    p = np.eye(dim, dtype=complex)
    for j, bit in enumerate(syndrome):
        if bit == "1":
            p = dests[j] @ p
    return p


def encode(code: StabilizerCode, syndrome: str, logical_state: DensityMatrix) -> DensityMatrix:
    """Isometric embedding of a logical state into the coset with the given
    syndrome. Preserves trace and spectrum."""
    t = code.syndrome_bits
    if len(syndrome) != t or any(c not in "01" for c in syndrome):
        raise ValueError(f"syndrome must be {t} bits")
    if logical_state.qubits != code.n_log:
        raise ValueError(f"logical state has {logical_state.qubits} qubits, code encodes {code.n_log}")
    iso, _, _ = _code_matrices(code)
    w = _syndrome_shift(code, syndrome) @ iso
    return DensityMatrix(w @ logical_state.data @ w.conj().T, _trusted=True)


def measure_syndrome(
    code: StabilizerCode,
    state: DensityMatrix,
    rng=None,
    atol: float = ATOL,
) -> tuple[str, DensityMatrix]:
    """Projectively measure every generator observable in order.

    Deterministic branches (probability within atol of 0 or 1) need no rng;
    a genuinely random branch raises unless an rng is supplied.
    """
    if state.qubits != code.n_phys:
        raise ValueError(f"state has {state.qubits} qubits, code has {code.n_phys}")
    _, gens, _ = _code_matrices(code)
    rho = state.data
    eye = np.eye(state.dim, dtype=complex)
    bits = []
    gen_rng = None
    for g in gens:
        proj_plus = (eye + g) / 2
        p_plus = float(np.real(np.trace(proj_plus @ rho)))
        if p_plus >= 1 - atol:
            bit = 0
        elif p_plus <= atol:
            bit = 1
        else:
            if gen_rng is None:
                if rng is None:
                    raise ValueError("syndrome outcome is random here; an rng is required")
                gen_rng = as_generator(rng)
            bit = 0 if gen_rng.random() < p_plus else 1
        proj = proj_plus if bit == 0 else (eye - g) / 2
        rho = proj @ rho @ proj
        rho = rho / np.real(np.trace(rho))
        bits.append(str(bit))
    return "".join(bits), DensityMatrix(rho, _trusted=True)


def decode(code: StabilizerCode, syndrome: str, state: DensityMatrix,
           atol: float = ATOL) -> DensityMatrix:
    """Inverse of encode on the syndrome coset. Fails if the state has weight
    outside that coset beyond tolerance."""
    if state.qubits != code.n_phys:
        raise ValueError(f"state has {state.qubits} qubits, code has {code.n_phys}")
    t = code.syndrome_bits
    if len(syndrome) != t or any(c not in "01" for c in syndrome):
        raise ValueError(f"syndrome must be {t} bits")
    iso, _, _ = _code_matrices(code)
    w = _syndrome_shift(code, syndrome) @ iso
    out = w.conj().T @ state.data @ w
    weight = float(np.real(np.trace(out)))
    if 1 - weight > 100 * atol:
        raise DecodeFailureError(
            f"state has weight {weight:.9f} in the syndrome-{syndrome} coset"
        )
    return DensityMatrix(out / weight, _trusted=True)


# ---------------------------------------------------------------------------
# Purity-testing figure of merit and family search
# ---------------------------------------------------------------------------


def family_epsilon(codes: Sequence[StabilizerCode]) -> float:
    """Worst-case fraction of codes fooled by a single Pauli class.

    A non-identity Pauli E fools code Q iff it commutes with every generator
    of Q (syndrome unchanged) while lying outside Q's stabilizer span (so it
    acts on the encoded content). Exact maximum by enumerating all 4^n - 1
    classes; phases are irrelevant to the conjugation channel.
    """
    codes = list(codes)
    if not codes:
        raise ValueError("empty code family")
    n = codes[0].n_phys
    if any(c.n_phys != n or c.n_log != codes[0].n_log for c in codes):
        raise ValueError("codes must share n_phys and n_log")
    if n > MAX_PHYS_QUBITS:
        raise CapacityError(f"enumeration is capped at {MAX_PHYS_QUBITS} physical qubits")
    par = parity_vector(n)
    count = 1 << n
    all_e = np.arange(1, count * count, dtype=np.int64)
    xs = all_e >> n
    zs = all_e & (count - 1)
    fooled = np.zeros(all_e.shape[0], dtype=np.int64)
    for code in codes:
        commute = np.ones(all_e.shape[0], dtype=bool)
        for g in code.generators:
            gx, gz = _row_of(g)
            commute &= (par[xs & gz] ^ par[zs & gx]) == 0
        in_span = np.isin(all_e, np.fromiter(code.stabilizer_span(), dtype=np.int64))
        fooled += (commute & ~in_span).astype(np.int64)
    return float(fooled.max() / len(codes))


@dataclass(frozen=True, eq=False)
class SptcFamily:
    """Indexed family {Q_z}; epsilon is recomputed exactly at construction."""

    codes: tuple[StabilizerCode, ...]
    epsilon: float = -1.0
    syndrome_bits: int = field(init=False)
    search_seed: int | None = None
    trial_budget: int | None = None
    target_met: bool | None = None

    def __post_init__(self):
        if len(self.codes) < 2:
            raise ValueError("a purity-testing family needs at least 2 codes")
        object.__setattr__(self, "syndrome_bits", self.codes[0].syndrome_bits)
        object.__setattr__(self, "epsilon", family_epsilon(self.codes))

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def index_bits(self) -> int:
        return max(1, (len(self.codes) - 1).bit_length())

    def ref(self) -> str:
        """Short stable identifier recorded in bundles."""
        import hashlib

        h = hashlib.sha256("|".join(c.to_json() for c in self.codes).encode())
        return f"Q{self.codes[0].n_phys}-{h.hexdigest()[:12]}"

    def to_json(self) -> str:
        return json.dumps(
            {
                "codes": [json.loads(c.to_json()) for c in self.codes],
                "epsilon": self.epsilon,
                "seed": self.search_seed,
                "budget": self.trial_budget,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "SptcFamily":
        obj = json.loads(text)
        codes = tuple(StabilizerCode.from_json(json.dumps(c)) for c in obj["codes"])
        return SptcFamily(codes, search_seed=obj.get("seed"), trial_budget=obj.get("budget"))


def build_sptc_family(
    n_log: int,
    t: int,
    family_size: int,
    epsilon_target: float,
    rng_seed: int,
    trial_budget: int = 300,
) -> SptcFamily:
    """Random search with greedy one-code swaps, exact epsilon each step.

    Returns the best family found within the evaluation budget, flagged with
    whether the target was reached.
    """
    if n_log + t > MAX_PHYS_QUBITS:
        raise CapacityError(f"n_log + t must stay at most {MAX_PHYS_QUBITS}")
    if family_size < 2:
        raise ValueError("family_size must be at least 2")
    rng = as_generator(rng_seed)
    seed_record = int(rng_seed) if isinstance(rng_seed, (int, np.integer)) else None

    def fresh_family() -> list[StabilizerCode]:
        return [random_stabilizer_code(n_log, t, rng) for _ in range(family_size)]

    current = fresh_family()
    current_eps = family_epsilon(current)
    best, best_eps = list(current), current_eps
    evals = 1
    stale = 0
    restart_after = max(20, 4 * family_size)
    while evals < trial_budget and best_eps > epsilon_target:
        if stale >= restart_after:
            current = fresh_family()
            current_eps = family_epsilon(current)
            evals += 1
            stale = 0
            if current_eps < best_eps:
                best, best_eps = list(current), current_eps
            continue
        idx = int(rng.integers(0, family_size))
        trial = list(current)
        trial[idx] = random_stabilizer_code(n_log, t, rng)
        trial_eps = family_epsilon(trial)
        evals += 1
        if trial_eps < current_eps:
            current, current_eps = trial, trial_eps
            stale = 0
            if current_eps < best_eps:
                best, best_eps = list(current), current_eps
        else:
            stale += 1
    return SptcFamily(
        tuple(best),
        search_seed=seed_record,
        trial_budget=trial_budget,
        target_met=best_eps <= epsilon_target,
    )
