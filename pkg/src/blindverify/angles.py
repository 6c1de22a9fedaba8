"""Grid angles: integer multiples of pi/4, reduced mod 2*pi.

All protocol arithmetic (delta = theta + phi + pi*r) happens on integer
eighths, so it is exact. Only amplitudes are floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

EIGHTH = math.pi / 4


@dataclass(frozen=True, order=True)
class Angle:
    eighths: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "eighths", int(self.eighths) % 8)

    @classmethod
    def from_radians(cls, value: float, atol: float = 1e-9) -> "Angle":
        k = round(value / EIGHTH)
        if abs(value - k * EIGHTH) > atol:
            raise ValueError(f"{value!r} rad is not on the pi/4 grid")
        return cls(k)

    @property
    def radians(self) -> float:
        return self.eighths * EIGHTH

    def __add__(self, other: "Angle | int") -> "Angle":
        return Angle(self.eighths + _eighths(other))

    def __sub__(self, other: "Angle | int") -> "Angle":
        return Angle(self.eighths - _eighths(other))

    def __neg__(self) -> "Angle":
        return Angle(-self.eighths)

    def flip(self, bit: int) -> "Angle":
        """Add pi*bit."""
        return Angle(self.eighths + 4 * (bit & 1))

    def __repr__(self) -> str:
        return f"Angle({self.eighths}π/4)"


class _ZBasis:
    """Computational-basis measurement marker (sigma_z readout)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Z"

    def __reduce__(self):
        return (_ZBasis, ())


Z_BASIS = _ZBasis()

Basis = Union[Angle, _ZBasis]


def _eighths(x: "Angle | int") -> int:
    return x.eighths if isinstance(x, Angle) else int(x)


def is_z(basis: object) -> bool:
    return basis is Z_BASIS


def as_basis(value) -> Basis:
    """Coerce an int (eighths), an Angle, or "Z" into a basis marker."""
    if isinstance(value, Angle) or value is Z_BASIS:
        return value
    if isinstance(value, str):
        if value.upper() == "Z":
            return Z_BASIS
        raise ValueError(f"unknown basis {value!r}")
    return Angle(int(value))


def basis_to_json(basis: Basis):
    return "Z" if basis is Z_BASIS else basis.eighths


def angles(*eighths: int) -> tuple[Angle, ...]:
    return tuple(Angle(e) for e in eighths)


def recover_phi(theta: Angle, delta: Angle, r: int) -> Angle:
    """Invert delta = theta + phi + pi*r."""
    return delta - theta - 4 * (r & 1)
