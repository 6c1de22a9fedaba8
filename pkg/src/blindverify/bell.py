"""Blind CHSH test on the zigzag cluster.

The pattern realizes two logical wires. Vertex 4 and its readout prepare the
lower input, vertex 2 teleports the upper wire, and vertices 1 and 3 carry the
Bell readouts. Logical outcomes are parities of decoded bits:

    b = m3 xor m4
    a = m1 xor m2   when the upper readout is Y-type (delta1 - theta1 = pi/2 mod pi)
    a = m1          for the sigma_z readout (delta1 - theta1 = 0)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .adversary import HONEST, Depolarizing, DeviationModel, FixedPauli, deviated_distribution
from .angles import Angle, Basis, Z_BASIS, angles, basis_to_json
from .mbqc import ClusterGraph, PatternSpec, sample_pattern
from .pauli import PauliString, all_pauli_strings
from .states import H, InvalidInput, PureState, rz
from .verification import ParityComputation, classify_pauli

LABELS = ("ab", "ab'", "a'b", "a'b'")
# measured values from the four-photon experiment
EXPERIMENT_S = 2.498
EXPERIMENT_S_ERR = 0.158
EXPERIMENT_E = {"ab": -0.540, "ab'": 0.634, "a'b": -0.646, "a'b'": -0.678}

# logical measurement angles: alpha = pi/2, alpha' = sigma_z, beta = -3pi/4, beta' = -pi/4
ALPHA = {"a": Angle(2), "a'": Z_BASIS}
BETA = {"b": Angle(-3), "b'": Angle(-1)}


@dataclass(frozen=True)
class BellSetting:
    label: str
    thetas: tuple[Angle, ...]
    deltas: tuple[Angle, ...]
    relabel: int = 0

    @property
    def alpha(self) -> Basis:
        return ALPHA["a'" if self.label.startswith("a'") else "a"]

    @property
    def beta(self) -> Angle:
        return BETA["b'" if self.label.endswith("b'") else "b"]

    @property
    def upper_y_type(self) -> bool:
        return (self.deltas[0] - self.thetas[0]).eighths % 4 == 2

    def pattern(self) -> PatternSpec:
        return PatternSpec(ClusterGraph.zigzag4(), self.thetas, self.deltas)

    @property
    def a_qubits(self) -> tuple[int, ...]:
        return (0, 1) if self.upper_y_type else (0,)

    @property
    def b_qubits(self) -> tuple[int, ...]:
        return (2, 3)

    def computation(self) -> ParityComputation:
        """The verified computation a xor b."""
        return ParityComputation(self.pattern(), (self.a_qubits + self.b_qubits,), name=f"bell-{self.label}")

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "thetas": [t.eighths for t in self.thetas],
            "deltas": [d.eighths for d in self.deltas],
            "alpha": basis_to_json(self.alpha),
            "beta": self.beta.eighths,
            "relabel": self.relabel,
        }


_ROWS = {
    "ab": ((0, 2, 3, 0), (2, -2, 0, -2), 0),
    "ab'": ((0, 0, 3, 0), (2, 0, -2, -2), 1),
    "a'b": ((0, 2, 1, 0), (0, -2, -2, -2), 0),
    "a'b'": ((0, 0, 1, 0), (0, 0, 0, -2), 0),
}


def bell_settings() -> dict[str, BellSetting]:
    return {k: BellSetting(k, angles(*th), angles(*de), fl) for k, (th, de, fl) in _ROWS.items()}


def logical_outcomes(setting: BellSetting, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) bits from packed decoded outcomes, relabel flag applied."""
    m = np.asarray(m, dtype=np.int64)
    bit = lambda q: (m >> (3 - q)) & 1
    a = np.zeros_like(m)
    for q in setting.a_qubits:
        a ^= bit(q)
    b = bit(2) ^ bit(3)
    return a ^ setting.relabel, b ^ setting.relabel


def _pair_distribution(setting: BellSetting, raw: np.ndarray) -> np.ndarray:
    """P(a, b) as a 2x2 array from a raw-bit distribution (r = 0 for these rows)."""
    a, b = logical_outcomes(setting, np.arange(16))
    out = np.zeros((2, 2))
    np.add.at(out, (a, b), raw)
    return out


def correlation_from_pairs(pab: np.ndarray) -> float:
    return float(pab[0, 0] - pab[0, 1] - pab[1, 0] + pab[1, 1])


def exact_correlation(setting: BellSetting, deviation: DeviationModel = HONEST) -> float:
    return correlation_from_pairs(_pair_distribution(setting, deviated_distribution(setting.pattern(), deviation)))


@dataclass(frozen=True)
class CorrelationEstimate:
    label: str
    counts: tuple[int, int, int, int]  # C00, C01, C10, C11

    @property
    def shots(self) -> int:
        return sum(self.counts)

    @property
    def E(self) -> float:
        c00, c01, c10, c11 = self.counts
        return (c00 - c01 - c10 + c11) / self.shots

    @property
    def stderr(self) -> float:
        return float(np.sqrt(max(0.0, 1 - self.E ** 2) / self.shots))

    def to_json(self) -> dict:
        return {"label": self.label, "counts": list(self.counts), "E": self.E, "stderr": self.stderr}


def estimate_correlation(setting: BellSetting, num_shots: int, deviation: DeviationModel = HONEST,
                         rng: "np.random.Generator | int | None" = None) -> CorrelationEstimate:
    if num_shots < 1:
        raise InvalidInput("need at least one shot")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    pat = setting.pattern()
    raw = sample_pattern(pat, num_shots, rng, deviation)
    a, b = logical_outcomes(setting, raw ^ pat.r_mask)
    counts = np.bincount(2 * a + b, minlength=4)
    return CorrelationEstimate(setting.label, tuple(int(c) for c in counts))


@dataclass(frozen=True)
class CHSHResult:
    E: dict
    S: float
    S_stderr: float

    def to_json(self) -> dict:
        return {"E": dict(self.E), "S": self.S, "S_stderr": self.S_stderr}


def chsh(results: Mapping[str, "CorrelationEstimate | float"]) -> CHSHResult:
    """S = |E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|."""
    missing = [k for k in LABELS if k not in results]
    if missing:
        raise InvalidInput(f"missing settings: {missing}")
    E = {k: float(results[k].E if isinstance(results[k], CorrelationEstimate) else results[k]) for k in LABELS}
    err = {k: results[k].stderr if isinstance(results[k], CorrelationEstimate) else 0.0 for k in LABELS}
    S = abs(E["ab"] - E["ab'"]) + abs(E["a'b"] + E["a'b'"])
    return CHSHResult(E, S, float(np.sqrt(sum(e ** 2 for e in err.values()))))


def exact_chsh(deviation: DeviationModel = HONEST, settings: Optional[Mapping[str, BellSetting]] = None) -> CHSHResult:
    settings = bell_settings() if settings is None else settings
    return chsh({k: exact_correlation(s, deviation) for k, s in settings.items()})


def sampled_chsh(num_shots: int, deviation: DeviationModel = HONEST, rng=None) -> tuple[CHSHResult, dict]:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    est = {k: estimate_correlation(s, num_shots, deviation, rng) for k, s in bell_settings().items()}
    return chsh(est), est


def prepared_logical_state(theta4: "Angle | int", delta4: "Angle | int") -> PureState:
    """Two-wire state (upper, lower) after the CPhase, with the lower input H Rz(theta4 - delta4)|+>."""
    t = theta4 if isinstance(theta4, Angle) else Angle(theta4)
    d = delta4 if isinstance(delta4, Angle) else Angle(delta4)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    lower = H @ rz(t - d) @ plus
    psi = np.kron(plus, lower) * np.array([1, 1, 1, -1])
    return PureState(2, psi)


def target_state() -> PureState:
    """(|+>|0> - i|->|1>)/sqrt2."""
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    return PureState(2, (np.kron(plus, [1, 0]) - 1j * np.kron(minus, [0, 1])) / np.sqrt(2))


def _observable(basis: Basis) -> np.ndarray:
    if basis is Z_BASIS:
        return np.diag([1.0, -1.0]).astype(complex)
    a = basis.radians
    return np.array([[0, np.exp(-1j * a)], [np.exp(1j * a), 0]])


def ideal_correlations(state: Optional[PureState] = None) -> dict:
    """E for the four logical settings evaluated directly on a two-qubit state."""
    psi = np.asarray((target_state() if state is None else state).amplitudes)
    out = {}
    for k in LABELS:
        A = _observable(ALPHA["a'" if k.startswith("a'") else "a"])
        B = _observable(BETA["b'" if k.endswith("b'") else "b"])
        out[k] = float(np.vdot(psi, np.kron(A, B) @ psi).real)
    return out


def acca_invariance_check(pauli: "PauliString | str", setting: Optional[BellSetting] = None, tol: float = 1e-9) -> bool:
    """True iff the exact E of ``setting`` (all four if None) is unchanged by ``pauli``."""
    pauli = pauli if isinstance(pauli, PauliString) else PauliString(pauli)
    if str(classify_pauli(pauli)) != "ACCA":
        raise InvalidInput(f"{pauli} is not in class ACCA")
    settings = bell_settings().values() if setting is None else [setting]
    dev = FixedPauli(pauli)
    return all(abs(exact_correlation(s, dev) - exact_correlation(s)) <= tol for s in settings)


def acca_strings() -> list[PauliString]:
    return [p for p in all_pauli_strings(4) if str(classify_pauli(p)) == "ACCA"]


def chsh_under_noise(q: float) -> float:
    return exact_chsh(Depolarizing(q)).S


def noise_sweep(rates: Sequence[float]) -> list[tuple[float, float]]:
    return [(float(q), chsh_under_noise(q)) for q in rates]


def calibrate_depolarizing(target_S: float = EXPERIMENT_S) -> float:
    """Per-qubit depolarizing rate whose exact S equals ``target_S``."""
    if not 0 < target_S < 2 * np.sqrt(2):
        raise InvalidInput(f"target S must be in (0, 2 sqrt2), got {target_S}")
    return float(brentq(lambda q: chsh_under_noise(q) - target_S, 0.0, 1.0, xtol=1e-12))


def random_product_settings(rng: np.random.Generator) -> dict[str, BellSetting]:
    """Four settings sharing a product lower input (theta4 - delta4 in {0, pi}).

    The two alpha settings share upper-wire angles, the two beta settings share
    the vertex-3 readout, and every remaining angle is a random grid value.
    """
    g = lambda: int(rng.integers(8))
    lower_flip = 4 * int(rng.integers(2))
    upper = {}
    for a in ("a", "a'"):
        upper[a] = (g(), g(), g(), g())  # theta1, delta1, theta2, delta2
    lower = {b: (g(), g()) for b in ("b", "b'")}  # theta3, delta3
    out = {}
    for k in LABELS:
        a = "a'" if k.startswith("a'") else "a"
        b = "b'" if k.endswith("b'") else "b"
        t1, d1, t2, d2 = upper[a]
        t3, d3 = lower[b]
        t4 = g()
        out[k] = BellSetting(k, angles(t1, t2, t3, t4), angles(d1, d2, d3, t4 - lower_flip))
    return out
