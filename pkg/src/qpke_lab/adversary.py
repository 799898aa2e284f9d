"""Attacks on the key distribution and the optimal-distinguisher yardstick.

The copy attack models what happens when the one-copy rule is violated:
computational-basis measurements of repeated copies of a key state land on
the two support strings at random, and the first disagreement reveals their
XOR, which is the trapdoor. The oracle that grants repeated copies is gated
behind an explicit adversarial_mode flag so protocol code cannot reach it by
accident.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._bits import random_bits, xor_bits
from .errors import AdversarialModeError
from .qpke import PublicKey, public_key_state
from .qstate import DensityMatrix, PauliOp, apply_pauli, as_generator, measure_computational, trace_distance


def unlimited_copy_oracle(
    k: str, i: str, *, adversarial_mode: bool = False
) -> Callable[[], DensityMatrix]:
    """Source of unlimited fresh copies of one key state. Attack-only."""
    if not adversarial_mode:
        raise AdversarialModeError(
            "unlimited copies break the one-copy rule; pass adversarial_mode=True"
        )
    state = public_key_state(k, i)
    return lambda: state


def copy_attack(
    key_oracle: Callable[[], DensityMatrix], rng, max_copies: int = 64
) -> tuple[str | None, int]:
    """Measure copies until two outcomes differ; their XOR is the trapdoor.

    Returns (k estimate, copies consumed); the estimate is absent when every
    copy up to the budget gave the same string.
    """
    gen = as_generator(rng)
    state = key_oracle()
    all_qubits = list(range(state.qubits))
    first, _, _ = measure_computational(state, all_qubits, gen)
    used = 1
    while used < max_copies:
        outcome, _, _ = measure_computational(key_oracle(), all_qubits, gen)
        used += 1
        if outcome != first:
            return xor_bits(first, outcome), used
    return None, used


@dataclass
class AttackStats:
    """Empirical record of copy-attack trials."""

    trials: int
    n_samples: list[int | None] = field(default_factory=list)
    success_by_copies: dict[int, float] = field(default_factory=dict)
    k_recovered_correct: int = 0

    @property
    def found(self) -> list[int]:
        return [n for n in self.n_samples if n is not None]

    def rate(self, t: int) -> float:
        """Empirical Pr(N = t)."""
        return sum(1 for n in self.found if n == t) / self.trials

    def mean_copies(self) -> float:
        return float(np.mean(self.found))


def copy_attack_stats(n: int, trials: int, rng, max_copies: int = 64) -> AttackStats:
    """Run the copy attack on fresh random keys and tally the copy counts."""
    gen = as_generator(rng)
    stats = AttackStats(trials=trials)
    for _ in range(trials):
        while True:
            k = random_bits(gen, n)
            if k.count("1") % 2 == 1:
                break
        i = random_bits(gen, n)
        oracle = unlimited_copy_oracle(k, i, adversarial_mode=True)
        estimate, used = copy_attack(oracle, gen, max_copies=max_copies)
        if estimate is None:
            stats.n_samples.append(None)
        else:
            stats.n_samples.append(used)
            if estimate == k:
                stats.k_recovered_correct += 1
    top = max((n_ for n_ in stats.found), default=2)
    cum = 0
    counts = {t: sum(1 for n_ in stats.found if n_ == t) for t in range(1, top + 1)}
    for t in range(1, min(top, 12) + 1):
        cum += counts.get(t, 0)
        stats.success_by_copies[t] = cum / trials
    return stats


def single_copy_measure(pk: PublicKey, rng) -> str:
    """Computational-basis measurement of one key state; lands on i or
    i xor k with equal probability and reveals nothing about k alone."""
    gen = as_generator(rng)
    outcome, _, _ = measure_computational(pk.state, list(range(pk.state.qubits)), gen)
    return outcome


def pauli_tamper(state: DensityMatrix, p: PauliOp) -> DensityMatrix:
    """Tamper channel: conjugate a transmitted register by a Pauli."""
    return apply_pauli(state, p)


def optimal_distinguish_advantage(rho0: DensityMatrix, rho1: DensityMatrix) -> float:
    """Best single-shot success probability of telling the states apart,
    1/2 + D/2; no measurement strategy (hence no circuit family) beats it."""
    return 0.5 + 0.5 * trace_distance(rho0, rho1)
