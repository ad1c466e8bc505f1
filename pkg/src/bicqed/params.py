"""System parameters for an equally spaced emitter array.

Everything downstream works in units where the boson mass is 1: energies
in units of m, lengths in units of 1/m, the coupling in units of m**2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Sheet(str, enum.Enum):
    """Riemann sheet on which the self-energy is evaluated."""

    FIRST = "I"
    SECOND = "II"
    THIRD = "III"

    @classmethod
    def parse(cls, value: "Sheet | str") -> "Sheet":
        if isinstance(value, Sheet):
            return value
        key = str(value).strip().upper()
        aliases = {"1": "I", "FIRST": "I", "2": "II", "SECOND": "II", "3": "III", "THIRD": "III"}
        return cls(aliases.get(key, key))


class Sector(str, enum.Enum):
    """Reflection-parity sector of the atomic amplitudes."""

    ANTISYMMETRIC = "a"
    SYMMETRIC = "s"
    INDEFINITE = "indefinite"

    @classmethod
    def parse(cls, value: "Sector | str") -> "Sector":
        if isinstance(value, Sector):
            return value
        key = str(value).strip().lower()
        aliases = {
            "-": "a", "anti": "a", "antisymmetric": "a", "minus": "a",
            "+": "s", "sym": "s", "symmetric": "s", "plus": "s",
        }
        return cls(aliases.get(key, key))

    @property
    def sign(self) -> int:
        if self is Sector.SYMMETRIC:
            return 1
        if self is Sector.ANTISYMMETRIC:
            return -1
        raise ValueError("indefinite sector has no parity sign")


@dataclass(frozen=True)
class EmitterArrayParams:
    """Dimensionless definition of the array.

    Parameters
    ----------
    n : int
        Number of emitters (at least 2).
    epsilon : float
        Emitter excitation energy.
    d : float
        Spacing between neighbouring emitters.
    gamma : float
        Squared coupling constant.
    """

    n: int
    epsilon: float
    d: float
    gamma: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not self.d > 0:
            raise ValueError(f"spacing d must be positive, got {self.d!r}")
        if not self.gamma > 0:
            raise ValueError(f"coupling gamma must be positive, got {self.gamma!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_dimensional(cls, n: int, m: float, epsilon: float, d: float, gamma: float):
        """Rescale physical (m, epsilon, d, gamma) to units with m = 1."""
        if not m > 0:
            raise ValueError("boson mass must be positive")
        return cls(n=n, epsilon=epsilon / m, d=m * d, gamma=gamma / m**2)

    def replace(self, **changes) -> "EmitterArrayParams":
        values = dict(n=self.n, epsilon=self.epsilon, d=self.d, gamma=self.gamma)
        values.update(changes)
        return EmitterArrayParams(**values)

    def positions(self):
        """Emitter coordinates 0, d, ..., (n-1) d."""
        return [j * self.d for j in range(self.n)]
