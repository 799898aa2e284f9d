"""Dense density-matrix core: states, Pauli operators, measurement, metrics.

Everything in this library is carried by :class:`DensityMatrix`, a validated
2^q x 2^q complex Hermitian positive-semidefinite unit-trace matrix. All
operations are pure functions returning new values; matrices are frozen
(numpy write flag cleared) so values can be shared freely between threads.

Basis convention: bit-string "b_0 b_1 ... b_{q-1}" labels qubit 0 leftmost,
and ``int(bits, 2)`` is the basis index of ``|bits>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._bits import check_bits, int_to_bits
from .errors import CapacityError

# Single global absolute tolerance for equality and invariant checks,
# overridable per call via the atol keyword.
ATOL = 1e-9

# Desk-scale cap on the total simulated dimension (2^14 = 16384).
MAX_DIM = 2**14

_PHASES = (1, -1, 1j, -1j)


def set_max_dim(value: int) -> None:
    """Override the global dimension cap (use sparingly; tests rely on it)."""
    global MAX_DIM
    if value < 2:
        raise ValueError("max dimension must be at least 2")
    MAX_DIM = value


def _check_capacity(dim: int) -> None:
    if dim > MAX_DIM:
        raise CapacityError(f"dimension {dim} exceeds the configured cap {MAX_DIM}")


@lru_cache(maxsize=32)
def _parity_of_index(dim: int) -> np.ndarray:
    v = np.arange(dim, dtype=np.uint64)
    return (np.bitwise_count(v) & 1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A q-qubit mixed state. Validates Hermiticity, unit trace and
    positive semidefiniteness (within ``atol``) at construction.

    ``qubits == 0`` (the 1x1 unit matrix) is allowed as the scalar identity
    for tensor products.
    """

    qubits: int
    data: np.ndarray = field(repr=False)

    def __init__(self, data: np.ndarray, atol: float = ATOL, _trusted: bool = False):
        arr = np.asarray(data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {arr.shape}")
        dim = arr.shape[0]
        q = dim.bit_length() - 1
        if 1 << q != dim:
            raise ValueError(f"dimension {dim} is not a power of two")
        _check_capacity(dim)
        if not _trusted:
            if np.max(np.abs(arr - arr.conj().T)) > atol:
                raise ValueError("matrix is not Hermitian within tolerance")
            if abs(np.trace(arr) - 1.0) > atol:
                raise ValueError(f"trace is {np.trace(arr):.12g}, expected 1")
            if np.linalg.eigvalsh((arr + arr.conj().T) / 2).min() < -atol:
                raise ValueError("matrix has a negative eigenvalue beyond tolerance")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "qubits", q)
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def validate(self, atol: float = ATOL) -> None:
        """Re-check all invariants (used by tests on trusted-path outputs)."""
        DensityMatrix(self.data, atol=atol)

    def allclose(self, other: "DensityMatrix", atol: float = ATOL) -> bool:
        return self.dim == other.dim and bool(
            np.max(np.abs(self.data - other.data)) <= atol
        )


def _trusted(data: np.ndarray) -> DensityMatrix:
    # Internal fast path for outputs that preserve validity by construction
    # (conjugations, convex mixtures, renormalized projections).
    return DensityMatrix(data, _trusted=True)


@dataclass(frozen=True)
class PauliOp:
    """phase * X^x_mask Z^z_mask on ``qubits`` qubits.

    Masks are bit-strings of length ``qubits``; mask character j acts on
    qubit j. The phase is one of +1, -1, +i, -i.
    """

    qubits: int
    x_mask: str
    z_mask: str
    phase: complex = 1

    def __post_init__(self):
        check_bits(self.x_mask, self.qubits, "x_mask")
        check_bits(self.z_mask, self.qubits, "z_mask")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}")

    @property
    def is_identity(self) -> bool:
        return (
            self.phase == 1
            and int(self.x_mask, 2) == 0
            and int(self.z_mask, 2) == 0
        )

    def matrix(self) -> np.ndarray:
        """Dense matrix. (X^a Z^b)|x> = (-1)^{b.x} |x xor a>."""
        dim = 1 << self.qubits
        _check_capacity(dim)
        ax, bz = int(self.x_mask, 2), int(self.z_mask, 2)
        col = np.arange(dim)
        signs = 1.0 - 2.0 * _parity_of_index(dim)[col & bz]
        m = np.zeros((dim, dim), dtype=complex)
        m[col ^ ax, col] = self.phase * signs
        return m

    @staticmethod
    def identity(qubits: int) -> "PauliOp":
        return PauliOp(qubits, "0" * qubits, "0" * qubits)


def pure_state(amplitudes: Sequence[complex], atol: float = ATOL) -> DensityMatrix:
    """|psi><psi| from a unit-norm amplitude vector of length 2^q."""
    vec = np.asarray(amplitudes, dtype=complex).ravel()
    dim = vec.shape[0]
    if dim < 1 or (dim & (dim - 1)) != 0:
        raise ValueError(f"amplitude vector length {dim} is not a power of two")
    _check_capacity(dim)
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > atol:
        raise ValueError(f"amplitude vector norm is {norm:.12g}, expected 1")
    return _trusted(np.outer(vec, vec.conj()))


def basis_state(bits: str) -> DensityMatrix:
    """|bits><bits| computational basis projector."""
    dim = 1 << len(bits)
    vec = np.zeros(dim, dtype=complex)
    vec[int(bits, 2)] = 1.0
    return pure_state(vec)


def maximally_mixed(qubits: int) -> DensityMatrix:
    dim = 1 << qubits
    _check_capacity(dim)
    return _trusted(np.eye(dim, dtype=complex) / dim)


def apply_unitary(state: DensityMatrix, u: np.ndarray, atol: float = ATOL) -> DensityMatrix:
    """u  state  u^dagger. Raises if u is not unitary within tolerance."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (state.dim, state.dim):
        raise ValueError(f"unitary shape {u.shape} does not match dimension {state.dim}")
    if np.max(np.abs(u @ u.conj().T - np.eye(state.dim))) > atol:
        raise ValueError("matrix is not unitary within tolerance")
    return _trusted(u @ state.data @ u.conj().T)


def apply_pauli(state: DensityMatrix, p: PauliOp) -> DensityMatrix:
    """Conjugate by a Pauli operator. The phase of p cancels.

    Uses index arithmetic instead of a dense product:
    out[a,b] = s(a) s(b) rho[a^x, b^x] with s(a) = (-1)^{z.(a^x)}.
    """
    if p.qubits != state.qubits:
        raise ValueError(f"operator acts on {p.qubits} qubits, state has {state.qubits}")
    dim = state.dim
    ax, bz = int(p.x_mask, 2), int(p.z_mask, 2)
    perm = np.arange(dim) ^ ax
    signs = 1.0 - 2.0 * _parity_of_index(dim)[perm & bz]
    out = state.data[np.ix_(perm, perm)] * np.outer(signs, signs)
    return _trusted(out)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """(1/2) sum |eigenvalues of (a - b)|, in [0, 1].

    The difference is re-symmetrized before the Hermitian eigensolve to wash
    out accumulated round-off.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    delta = a.data - b.data
    delta = (delta + delta.conj().T) / 2
    eigs = np.linalg.eigvalsh(delta)
    return float(min(1.0, max(0.0, 0.5 * np.abs(eigs).sum())))


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    _check_capacity(a.dim * b.dim)
    return _trusted(np.kron(a.data, b.data))


def fidelity_with_pure(state: DensityMatrix, reference: Sequence[complex],
                       atol: float = ATOL) -> float:
    """<psi| state |psi> for a unit-norm reference vector."""
    vec = np.asarray(reference, dtype=complex).ravel()
    if vec.shape[0] != state.dim:
        raise ValueError("reference dimension mismatch")
    if abs(np.linalg.norm(vec) - 1.0) > atol:
        raise ValueError("reference vector is not unit norm")
    val = float(np.real(vec.conj() @ state.data @ vec))
    return min(1.0, max(0.0, val))


def measure_computational(
    state: DensityMatrix,
    qubit_subset: Sequence[int],
    rng: int | np.random.Generator,
) -> tuple[str, DensityMatrix, np.ndarray]:
    """Projective computational-basis measurement of the listed qubits.

    Returns (outcome bit-string over the subset in the order given,
    renormalized post-measurement state, full outcome distribution).
    """
    q = state.qubits
    subset = list(qubit_subset)
    if len(set(subset)) != len(subset):
        raise ValueError("qubit_subset contains duplicates")
    if any(i < 0 or i >= q for i in subset):
        raise ValueError(f"qubit index out of range for {q} qubits")
    gen = as_generator(rng)
    m = len(subset)
    idx = np.arange(state.dim)
    # outcome index of each basis state: subset bits packed in subset order
    out_of = np.zeros(state.dim, dtype=np.int64)
    for j, qb in enumerate(subset):
        out_of |= ((idx >> (q - 1 - qb)) & 1) << (m - 1 - j)
    diag = np.real(np.diag(state.data))
    dist = np.zeros(1 << m)
    np.add.at(dist, out_of, diag)
    dist = np.clip(dist, 0.0, None)
    dist = dist / dist.sum()
    o = int(gen.choice(1 << m, p=dist))
    keep = out_of == o
    post = np.where(np.outer(keep, keep), state.data, 0.0)
    post = post / np.real(np.trace(post))
    return int_to_bits(o, m), _trusted(post), dist


def random_density_matrix(
    qubits: int, rng: int | np.random.Generator, pure: bool = False
) -> DensityMatrix:
    """Random test state: Haar-ish pure state, or a Ginibre mixed state."""
    gen = as_generator(rng)
    dim = 1 << qubits
    _check_capacity(dim)
    if pure:
        vec = gen.normal(size=dim) + 1j * gen.normal(size=dim)
        vec /= np.linalg.norm(vec)
        return pure_state(vec)
    g = gen.normal(size=(dim, dim)) + 1j * gen.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return _trusted(rho / np.real(np.trace(rho)))


def as_generator(rng: int | np.random.Generator) -> np.random.Generator:
    """Accept an int seed or an existing numpy Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def spawn_generators(seed: int, count: int) -> list[np.random.Generator]:
    """Deterministic child generators for independent experiment sections."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
