"""Transmission medium: classical-equivalent qubit records, noise, and
eavesdropper models.

The four prepare-and-measure states admit an exact classical description for
the modeled attacks: a matched-basis measurement returns the prepared bit
plus accumulated flips, a mismatched one is a fair coin, and interception in
the wrong basis re-randomizes the record.  No amplitude-level state is kept;
the interceptor's re-prepared state is modeled by basis-conditional
re-randomization at measurement time, which is statistically identical.

Randomness contract (relied on for reproducibility): `attack_arrays` draws
from the supplied generator in a fixed order and with shapes that depend
only on the attack kind and transmission length, never on sampled values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError

__all__ = ["Basis", "QubitRecord", "AttackModel", "attack_arrays", "transmit", "measure"]


class Basis(IntEnum):
    Z = 0
    X = 1


@dataclass(frozen=True)
class QubitRecord:
    """One transmitted qubit, classically: its preparation and any tampering.

    Flags are set only by channel/attack operations, never by party logic.
    """

    prep_basis: Basis
    prep_bit: int
    flipped_in_prep_basis: bool = False
    eve_measured_basis: Optional[Basis] = None

    def __post_init__(self):
        if self.prep_bit not in (0, 1):
            raise ValueError(f"prep_bit must be 0 or 1, got {self.prep_bit!r}")


_KINDS = ("none", "bitflip", "intercept_resend", "correlated_positions")


@dataclass(frozen=True)
class AttackModel:
    """Channel tampering model.

    kind 'none': identity channel.
    kind 'bitflip': each position flips independently with `probability`.
    kind 'intercept_resend': each position is intercepted with
        `probability`; the interceptor measures in a uniform basis and
        forwards the collapsed state.
    kind 'correlated_positions': flips with `probability` applied only at
        the listed transmitted positions.
    """

    kind: str = "none"
    probability: float = 0.0
    positions: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r} (have {_KINDS})")
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError(f"attack probability {self.probability} outside [0, 1]")
        if self.kind == "correlated_positions":
            if any(p < 0 for p in self.positions):
                raise ConfigError("attack positions must be nonnegative")
        elif self.positions:
            raise ConfigError(f"attack kind {self.kind!r} takes no position list")

    @classmethod
    def none(cls) -> "AttackModel":
        return cls("none")

    @classmethod
    def bitflip(cls, p: float) -> "AttackModel":
        return cls("bitflip", probability=p)

    @classmethod
    def intercept_resend(cls, fraction: float) -> "AttackModel":
        return cls("intercept_resend", probability=fraction)

    @classmethod
    def correlated_positions(cls, positions: Sequence[int], flip_probability: float) -> "AttackModel":
        return cls("correlated_positions", probability=flip_probability,
                   positions=tuple(int(p) for p in positions))

    def describe(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "correlated_positions":
            return f"correlated_positions(p={self.probability}, k={len(self.positions)})"
        return f"{self.kind}(p={self.probability})"


def attack_arrays(attack: AttackModel, n: int, rng: np.random.Generator):
    """Draw the channel's tampering for one transmission of n qubits.

    Returns:
        (flip, eve_basis): uint8 flip indicators and int8 interceptor bases
        (-1 where not intercepted).
    """
    flip = np.zeros(n, dtype=np.uint8)
    eve = np.full(n, -1, dtype=np.int8)
    if attack.kind == "bitflip":
        flip[:] = rng.random(n) < attack.probability
    elif attack.kind == "intercept_resend":
        intercepted = rng.random(n) < attack.probability
        bases = rng.integers(0, 2, size=n, dtype=np.int8)
        eve[intercepted] = bases[intercepted]
    elif attack.kind == "correlated_positions":
        if any(p >= n for p in attack.positions):
            raise ConfigError(
                f"attack position {max(attack.positions)} outside transmission length {n}")
        hit = rng.random(len(attack.positions)) < attack.probability
        for pos, h in zip(attack.positions, hit):
            if h:
                flip[pos] ^= 1
    return flip, eve


def transmit(qubits: Sequence[QubitRecord], attack: AttackModel,
             rng: np.random.Generator) -> list[QubitRecord]:
    """Pass records through the channel under the given attack."""
    if attack.kind == "none":
        return list(qubits)
    flip, eve = attack_arrays(attack, len(qubits), rng)
    out = []
    for i, q in enumerate(qubits):
        new_flip = q.flipped_in_prep_basis ^ bool(flip[i])
        new_eve = Basis(int(eve[i])) if eve[i] >= 0 else q.eve_measured_basis
        if new_flip != q.flipped_in_prep_basis or new_eve != q.eve_measured_basis:
            q = replace(q, flipped_in_prep_basis=new_flip, eve_measured_basis=new_eve)
        out.append(q)
    return out


def measure(q: QubitRecord, basis: Basis, rng: np.random.Generator) -> int:
    """Measure one record in the given basis; draws a coin only when the
    outcome is genuinely random."""
    if q.eve_measured_basis is not None and q.eve_measured_basis != q.prep_basis:
        return int(rng.integers(0, 2))
    if basis == q.prep_basis:
        return q.prep_bit ^ int(q.flipped_in_prep_basis)
    return int(rng.integers(0, 2))
