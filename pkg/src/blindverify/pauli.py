"""Pauli strings over {I, X, Y, Z}."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import kernels
from .states import I2, X, Y, Z, InvalidInput, PureState

_MATS = {"I": I2, "X": X, "Y": Y, "Z": Z}


@dataclass(frozen=True, order=True)
class PauliString:
    letters: str

    def __post_init__(self) -> None:
        s = str(self.letters).upper()
        if not s or set(s) - set("IXYZ"):
            raise InvalidInput(f"not a Pauli string: {self.letters!r}")
        object.__setattr__(self, "letters", s)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return self.letters

    @property
    def xmask(self) -> int:
        return self._mask("XY")

    @property
    def zmask(self) -> int:
        return self._mask("ZY")

    @property
    def flipmask(self) -> int:
        """Readout bits flipped when applied right before a Z-basis readout."""
        return self.xmask

    def _mask(self, chars: str) -> int:
        n = len(self.letters)
        return sum(1 << (n - 1 - i) for i, c in enumerate(self.letters) if c in chars)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (_MATS[c] for c in self.letters))

    def commutes_with(self, other: "PauliString") -> bool:
        if len(other) != len(self):
            raise InvalidInput("length mismatch")
        anti = sum(1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b)
        return anti % 2 == 0


def all_pauli_strings(n: int) -> list[PauliString]:
    return [PauliString("".join(p)) for p in itertools.product("IXYZ", repeat=n)]


def apply_pauli(state: PureState, p: PauliString) -> PureState:
    if len(p) != state.num_qubits:
        raise InvalidInput(f"Pauli string of length {len(p)} on {state.num_qubits} qubits")
    psi = np.array(state.amplitudes)
    kernels.apply_pauli_masks(psi, state.num_qubits, p.xmask, p.zmask)
    return PureState(state.num_qubits, psi)


def expectation(state: PureState, p: PauliString) -> float:
    if len(p) != state.num_qubits:
        raise InvalidInput(f"Pauli string of length {len(p)} on {state.num_qubits} qubits")
    psi = np.array(state.amplitudes)
    return float(kernels.pauli_expectation(psi, state.num_qubits, p.xmask, p.zmask))
