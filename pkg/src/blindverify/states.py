"""Dense state-vector simulation for small registers (n <= 16)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .angles import Angle, Basis, is_z

MAX_QUBITS = 16
NORM_TOL = 1e-12

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rz(angle: "Angle | float") -> np.ndarray:
    """Rz(a) = diag(1, e^{ia}); exp(-i a Z / 2) up to a global phase."""
    a = angle.radians if isinstance(angle, Angle) else float(angle)
    return np.array([[1, 0], [0, np.exp(1j * a)]], dtype=complex)


class InvalidInput(ValueError):
    """Rejected input: bad index, size, weights or shape."""


@dataclass(frozen=True, eq=False)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise InvalidInput(f"num_qubits must be in 1..{MAX_QUBITS}, got {self.num_qubits}")
        if amps.shape[0] != 1 << self.num_qubits:
            raise InvalidInput(f"expected {1 << self.num_qubits} amplitudes, got {amps.shape[0]}")
        if abs(np.vdot(amps, amps).real - 1) > 1e-10:
            raise InvalidInput("state is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n: int) -> "PureState":
        v = np.zeros(1 << n, dtype=complex)
        v[0] = 1
        return cls(n, v)

    @classmethod
    def from_vector(cls, vec) -> "PureState":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        n = int(round(np.log2(v.shape[0])))
        return cls(n, v / np.linalg.norm(v))

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(self.num_qubits + other.num_qubits, np.kron(self.amplitudes, other.amplitudes))

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _work(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


@dataclass(frozen=True, eq=False)
class MixedState:
    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        d = 1 << self.num_qubits
        if m.shape != (d, d):
            raise InvalidInput(f"density matrix must be {d}x{d}")
        if abs(np.trace(m).real - 1) > 1e-12 or np.abs(m - m.conj().T).max() > 1e-12:
            raise InvalidInput("density matrix must be Hermitian with unit trace")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise InvalidInput("density matrix has negative eigenvalues")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pure(cls, state: PureState) -> "MixedState":
        v = state.amplitudes
        return cls(state.num_qubits, np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "MixedState":
        d = 1 << n
        return cls(n, np.eye(d, dtype=complex) / d)

    def distance(self, other: "MixedState") -> float:
        """Largest absolute entry of the difference."""
        return float(np.abs(self.matrix - other.matrix).max())

    def trace_distance(self, other: "MixedState") -> float:
        return float(0.5 * np.abs(np.linalg.eigvalsh(self.matrix - other.matrix)).sum())


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2; global phase is ignored by construction."""
    if a.num_qubits != b.num_qubits:
        raise InvalidInput("register sizes differ")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def make_blind_state(theta: Angle) -> PureState:
    return PureState(1, np.array([1, np.exp(1j * theta.radians)]) / np.sqrt(2))


def product_state(states: Sequence[PureState]) -> PureState:
    out = states[0]
    for s in states[1:]:
        out = out.tensor(s)
    return out


_NAMED = {"H": H, "X": X, "Y": Y, "Z": Z, "I": I2}


def _check_index(state: PureState, q: int) -> int:
    if not 0 <= int(q) < state.num_qubits:
        raise InvalidInput(f"qubit index {q} out of range for {state.num_qubits} qubits")
    return int(q)


def apply_gate(state: PureState, gate, *targets: int) -> PureState:
    """Apply a gate and return a new state.

    ``gate`` is one of "H", "X", "Y", "Z", "CZ", ("RZ", angle) with the angle an
    :class:`Angle` or radians, or an explicit 2x2 unitary.
    """
    n = state.num_qubits
    psi = state._work()
    if isinstance(gate, str) and gate.upper() == "CZ":
        if len(targets) != 2:
            raise InvalidInput("CZ takes two targets")
        a, b = (_check_index(state, t) for t in targets)
        if a == b:
            raise InvalidInput("CZ targets must be distinct")
        kernels.apply_cz(psi, n, a, b)
        return PureState(n, psi)
    if isinstance(gate, tuple) and gate[0].upper() == "RZ":
        u = rz(gate[1])
    elif isinstance(gate, str):
        try:
            u = _NAMED[gate.upper()]
        except KeyError:
            raise InvalidInput(f"unknown gate {gate!r}") from None
    else:
        u = np.asarray(gate, dtype=complex)
        if u.shape != (2, 2):
            raise InvalidInput("explicit gates must be 2x2")
    if len(targets) != 1:
        raise InvalidInput("single-qubit gate takes one target")
    q = _check_index(state, targets[0])
    kernels.apply_1q(psi, n, q, np.ascontiguousarray(u))
    return PureState(n, psi)


def apply_unitary(state: PureState, u: np.ndarray) -> PureState:
    u = np.asarray(u, dtype=complex)
    d = 1 << state.num_qubits
    if u.shape != (d, d):
        raise InvalidInput(f"unitary must be {d}x{d}")
    return PureState(state.num_qubits, u @ state.amplitudes)


def readout_rotation(basis: Basis) -> np.ndarray:
    """Unitary mapping |+_delta> to |0> and |-_delta> to |1> (identity for Z)."""
    if is_z(basis):
        return I2
    return H @ rz(-basis.radians)


@dataclass(frozen=True)
class MeasurementRecord:
    qubit_index: int
    basis_angle: Basis
    outcome: int


def outcome_probability(state: PureState, qubit: int, basis: Basis) -> float:
    """P(outcome 0) for measuring ``qubit`` in ``basis``."""
    q = _check_index(state, qubit)
    n = state.num_qubits
    psi = state._work()
    kernels.apply_1q(psi, n, q, np.ascontiguousarray(readout_rotation(basis)))
    v = psi.reshape(1 << q, 2, -1)
    p0 = float(np.vdot(v[:, 0, :], v[:, 0, :]).real)
    return min(1.0, max(0.0, p0))


def measure_in_basis(state: PureState, qubit: int, basis: Basis, rand: float) -> tuple[MeasurementRecord, PureState]:
    """Projective measurement of one qubit in {|+_delta>, |-_delta>} (or Z).

    Outcome 0 when ``rand < P(0)``. The register keeps its size: the measured
    qubit is left in the projected basis state.
    """
    q = _check_index(state, qubit)
    n = state.num_qubits
    rot = readout_rotation(basis)
    psi = state._work()
    kernels.apply_1q(psi, n, q, np.ascontiguousarray(rot))
    v = psi.reshape(1 << q, 2, -1)
    p0 = min(1.0, max(0.0, float(np.vdot(v[:, 0, :], v[:, 0, :]).real)))
    outcome = 0 if rand < p0 else 1
    v[:, 1 - outcome, :] = 0
    p = p0 if outcome == 0 else 1.0 - p0
    psi /= np.sqrt(p)
    kernels.apply_1q(psi, n, q, np.ascontiguousarray(rot.conj().T))
    return MeasurementRecord(q, basis, outcome), PureState(n, psi)


def reduced_density(state: PureState, keep: Sequence[int]) -> MixedState:
    """Partial trace onto the qubits in ``keep`` (kept in the given order)."""
    n = state.num_qubits
    keep = [_check_index(state, k) for k in keep]
    rest = [k for k in range(n) if k not in keep]
    t = state.amplitudes.reshape((2,) * n).transpose(keep + rest).reshape(1 << len(keep), -1)
    return MixedState(len(keep), t @ t.conj().T)


def trace_out(state: PureState, qubit: int) -> PureState:
    """Drop a qubit that is in a product state with the rest (e.g. after measurement)."""
    q = _check_index(state, qubit)
    n = state.num_qubits
    if n == 1:
        raise InvalidInput("cannot trace out the only qubit")
    t = np.moveaxis(state.amplitudes.reshape((2,) * n), q, 0).reshape(2, -1)
    _, s, vh = np.linalg.svd(t, full_matrices=False)
    if s[1] > 1e-9:
        raise InvalidInput(f"qubit {q} is entangled with the rest of the register")
    # t = u0 (x) s0 vh0 for a product state, so the rest is vh0 up to phase
    return PureState(n - 1, vh[0])


def average_density(states: Sequence[PureState], weights=None) -> MixedState:
    if not states:
        raise InvalidInput("need at least one state")
    n = states[0].num_qubits
    w = np.full(len(states), 1 / len(states)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape[0] != len(states) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise InvalidInput("weights must be nonnegative and sum to 1")
    d = 1 << n
    rho = np.zeros((d, d), dtype=complex)
    for wk, s in zip(w, states):
        if s.num_qubits != n:
            raise InvalidInput("all states must have the same register size")
        rho += wk * np.outer(s.amplitudes, s.amplitudes.conj())
    return MixedState(n, rho)
