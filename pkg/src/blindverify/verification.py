"""Trap runs, the interleaved verification session and the cheat-probability bounds."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from . import kernels
from .adversary import HONEST, DeviationModel, PreMeasureUnitary, flips_from_uniforms
from .angles import Angle, angles
from .mbqc import ClusterGraph, PatternOutcome, PatternSpec, int_to_bits, pattern_distribution
from .pauli import PauliString, all_pauli_strings
from .states import H, InvalidInput, PureState, apply_unitary, rz

N_QUBITS = 4
FIXTURE_VERSION = 1

# trap index -> stabilizer measured by that trap
STABILIZER_BY_INDEX = {
    1: PauliString("XIYY"),
    2: PauliString("YXXY"),
    3: PauliString("YXXY"),
    4: PauliString("YYIX"),
}
STABILIZERS = (PauliString("XIYY"), PauliString("YXXY"), PauliString("YYIX"))

# cluster measurement angles phi (eighths of pi) per trap index
PHI_BY_INDEX = {1: (0, 0, 2, 2), 2: (2, 0, 0, 2), 3: (2, 0, 0, 2), 4: (2, 2, 0, 0)}

# sample (theta, delta) rows per trap index, eighths of pi
SAMPLE_ROWS = {
    1: ((0, 2, 3, 0), (0, -2, 5, 2)),
    2: ((0, 2, 3, 0), (2, 2, 7, 2)),
    3: ((0, 2, 3, 0), (2, 2, 7, 2)),
    4: ((0, 2, 4, 0), (-2, 0, 0, 0)),
}

# qubits (0-based) whose outcomes enter the trap parity, per trap index
OUTCOME_SUPPORT = {1: (0, 2, 3), 2: (0, 1, 2, 3), 3: (0, 1, 2, 3), 4: (0, 1, 3)}

# measurements on the non-trap qubits that isolate each trap ("s" = either),
# and the outcomes whose parity sets the trap state |+_{k pi}>
DUMMYPREP = {
    1: ("", "s", "Y", "Y"),
    2: ("Y", "", "X", "Y"),
    3: ("Y", "X", "", "Y"),
    4: ("Y", "Y", "s", ""),
}
DUMMYPREP_PARITY = {1: (2, 3), 2: (0, 2, 3), 3: (0, 1, 3), 4: (0, 1)}

ACCA_MASK = 0b1001

# commute/anticommute classes vs the three stabilizers, True = passes
_CLASS_ORDER = [
    "".join(c) for c in (
        ("C", "C", "C", "C"), ("C", "C", "C", "A"), ("C", "C", "A", "C"), ("C", "C", "A", "A"),
        ("C", "A", "C", "C"), ("C", "A", "C", "A"), ("C", "A", "A", "C"), ("C", "A", "A", "A"),
        ("A", "C", "C", "C"), ("A", "C", "C", "A"), ("A", "C", "A", "C"), ("A", "C", "A", "A"),
        ("A", "A", "C", "C"), ("A", "A", "C", "A"), ("A", "A", "A", "C"), ("A", "A", "A", "A"),
    )
]
_REFERENCE_FLAGS = [
    (1, 1, 1, 1), (0, 0, 0, 0), (0, 0, 1, 0), (1, 1, 0, 0),
    (1, 0, 0, 0), (0, 1, 1, 0), (0, 1, 0, 0), (1, 0, 1, 0),
    (0, 0, 0, 0), (1, 1, 1, 1), (1, 1, 0, 0), (0, 0, 1, 0),
    (0, 1, 1, 0), (1, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 0),
]


@dataclass(frozen=True, order=True)
class CommutationClass:
    pattern: str

    def __post_init__(self):
        if len(self.pattern) != N_QUBITS or set(self.pattern) - {"C", "A"}:
            raise InvalidInput(f"not a commutation class: {self.pattern!r}")

    @property
    def mask(self) -> int:
        return sum(1 << (N_QUBITS - 1 - i) for i, c in enumerate(self.pattern) if c == "A")

    @classmethod
    def from_mask(cls, mask: int) -> "CommutationClass":
        return cls("".join("A" if (mask >> (N_QUBITS - 1 - i)) & 1 else "C" for i in range(N_QUBITS)))

    def __str__(self) -> str:
        return self.pattern


@dataclass(frozen=True)
class DetectionRow:
    passes: tuple[bool, bool, bool]
    undetected: bool


REFERENCE_DETECTION_TABLE = {
    CommutationClass(c): DetectionRow(tuple(bool(x) for x in f[:3]), bool(f[3]))
    for c, f in zip(_CLASS_ORDER, _REFERENCE_FLAGS)
}


def classify_pauli(p: "PauliString | str") -> CommutationClass:
    p = p if isinstance(p, PauliString) else PauliString(p)
    if len(p) != N_QUBITS:
        raise InvalidInput(f"classification needs a {N_QUBITS}-letter string, got {p.letters!r}")
    return CommutationClass.from_mask(p.flipmask)


def _support_mask(p: PauliString) -> int:
    n = len(p)
    return sum(1 << (n - 1 - i) for i in p.support())


def flips_fail(flipmask: int, stabilizer: PauliString) -> bool:
    """A readout flip pattern fails a trap iff it hits the stabilizer's support an odd number of times."""
    return bool(bin(flipmask & _support_mask(stabilizer)).count("1") & 1)


def detection_table() -> dict:
    """Pass/fail of each commutation class against each stabilizer, from anticommutation parity."""
    out = {}
    for cls in map(CommutationClass, _CLASS_ORDER):
        passes = tuple(not flips_fail(cls.mask, s) for s in STABILIZERS)
        out[cls] = DetectionRow(passes, all(passes))
    return out


def undetected_strings() -> list[PauliString]:
    """Every 4-qubit Pauli string that passes all three stabilizer checks."""
    return [p for p in all_pauli_strings(N_QUBITS) if not any(flips_fail(p.flipmask, s) for s in STABILIZERS)]


@dataclass(frozen=True)
class TrapSpec:
    """One trap setting.

    ``deltas`` holds the trap vertex at r_trap = 0; ``pattern(r_trap)`` adds the
    hiding bit. The parity of the m-bits on ``support`` equals ``expected_parity``
    under honest execution.
    """

    name: str
    trap_index: int
    variant: int
    label: str
    trap_angle: Angle
    thetas: tuple[Angle, ...]
    deltas: tuple[Angle, ...]
    stabilizer: PauliString
    expected_parity: int
    graph: ClusterGraph = field(default_factory=ClusterGraph.zigzag4)

    @property
    def trap_qubit(self) -> int:
        return self.trap_index - 1

    @property
    def support(self) -> tuple[int, ...]:
        return self.stabilizer.support()

    @property
    def support_mask(self) -> int:
        return _support_mask(self.stabilizer)

    @property
    def phis(self) -> tuple[Angle, ...]:
        return tuple(d - t for t, d in zip(self.thetas, self.deltas))

    def pattern(self, r_trap: int = 0) -> PatternSpec:
        r = [0] * N_QUBITS
        r[self.trap_qubit] = r_trap & 1
        deltas = list(self.deltas)
        deltas[self.trap_qubit] = deltas[self.trap_qubit].flip(r_trap)
        return PatternSpec(self.graph, self.thetas, tuple(deltas), tuple(r))

    def parity(self, m_bits: Sequence[int]) -> int:
        return sum(m_bits[i] for i in self.support) & 1


# name, index, variant, label, trap angle, thetas, deltas (trap slot = None), realized stabilizer
_CATALOG_ROWS = [
    ("trap1-minus_i", 1, 0, "|-_i>", 6, (0, 2, 0, 0), (None, -2, 4, -2), "YXXY"),
    ("trap1-plus", 1, 1, "|+>", 0, (0, 2, 3, 0), (None, -2, 5, 2), "XIYY"),
    ("trap2-plus", 2, 0, "|+>", 0, (0, 2, 4, 0), (-2, None, 0, 0), "YYIX"),
    ("trap2-plus_i", 2, 1, "|+_i>", 2, (0, 0, 0, 0), (2, None, 0, 0), "YYIX"),
    ("trap3-rz3", 3, 0, "Rz(3pi/4)|+>", 3, (0, 2, 5, 0), (4, -2, None, 2), "XIYY"),
    ("trap3-rz1", 3, 1, "Rz(pi/4)|+>", 1, (0, 2, 7, 0), (4, 0, None, -2), "XIYY"),
    ("trap4-minus", 4, 0, "|->", 4, (0, 2, 1, 0), (2, 0, 5, None), "YYIX"),
    ("trap4-minus_i", 4, 1, "|-_i>", 6, (0, 2, 3, 0), (2, 2, 7, None), "YXXY"),
]


def _raw_catalog(parities: Optional[dict] = None) -> list[TrapSpec]:
    out = []
    for name, idx, var, label, ang, th, de, stab in _CATALOG_ROWS:
        de = tuple(ang if d is None else d for d in de)
        out.append(TrapSpec(name, idx, var, label, Angle(ang), angles(*th), angles(*de), PauliString(stab),
                            -1 if parities is None else int(parities[name])))
    return out


def derive_trap_parities() -> dict:
    """Expected parity per catalog entry from the exact honest distribution.

    Raises if any entry's parity is not deterministic.
    """
    out = {}
    for spec in _raw_catalog():
        for r_trap in (0, 1):
            pat = spec.pattern(r_trap)
            probs = pattern_distribution(pat)
            idx = np.arange(probs.shape[0])
            m = idx ^ pat.r_mask
            par = kernels.masked_parity(m, spec.support_mask)
            p1 = float(probs[par == 1].sum())
            if min(p1, 1 - p1) > 1e-12:
                raise RuntimeError(f"{spec.name}: trap parity is not deterministic (P1={p1})")
            bit = int(p1 > 0.5)
            if out.setdefault(spec.name, bit) != bit:
                raise RuntimeError(f"{spec.name}: parity depends on r_trap")
    return out


def load_trap_fixture() -> dict:
    doc = json.loads(resources.files("blindverify").joinpath("data/trap_parities.json").read_text())
    if doc.get("version") != FIXTURE_VERSION:
        raise RuntimeError(f"trap fixture version {doc.get('version')} != {FIXTURE_VERSION}")
    return doc["parities"]


def fixture_document(parities: Optional[dict] = None) -> dict:
    return {"version": FIXTURE_VERSION, "parities": derive_trap_parities() if parities is None else parities}


def check_fixture() -> list[str]:
    """Names of catalog entries whose stored parity disagrees with the oracle."""
    stored, fresh = load_trap_fixture(), derive_trap_parities()
    return sorted(k for k in fresh.keys() | stored.keys() if stored.get(k) != fresh.get(k))


_CATALOG: Optional[list[TrapSpec]] = None


def trap_catalog() -> list[TrapSpec]:
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _raw_catalog(load_trap_fixture())
    return list(_CATALOG)


def catalog_entry(name: str) -> TrapSpec:
    for spec in trap_catalog():
        if spec.name == name:
            return spec
    raise InvalidInput(f"no trap named {name!r}")


def recover_grid_phis(thetas: Sequence[Angle], deltas: Sequence[Angle]) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All grid (phi, r) with delta = theta + phi + pi r on every qubit."""
    per_qubit = []
    for t, d in zip(thetas, deltas):
        per_qubit.append([(phi, r) for phi in range(8) for r in (0, 1) if (t.eighths + phi + 4 * r - d.eighths) % 8 == 0])
    out = []
    for combo in np.ndindex(*[len(c) for c in per_qubit]):
        picks = [per_qubit[q][i] for q, i in enumerate(combo)]
        out.append((tuple(p for p, _ in picks), tuple(r for _, r in picks)))
    return out


def trap_choice_weights(mode: str = "catalog") -> dict:
    """Probability that a trap run measures each stabilizer.

    ``catalog``: uniform trap index, then uniform variant (8 entries).
    ``index``: uniform trap index with the stabilizer table per index.
    ``stabilizer``: uniform over the three distinct stabilizers.
    """
    w: dict = {s.letters: 0.0 for s in STABILIZERS}
    if mode == "catalog":
        for e in _raw_catalog():
            w[e.stabilizer.letters] += 1 / 8
    elif mode == "index":
        for s in STABILIZER_BY_INDEX.values():
            w[s.letters] += 1 / 4
    elif mode == "stabilizer":
        for s in STABILIZERS:
            w[s.letters] = 1 / 3
    else:
        raise InvalidInput(f"unknown trap choice {mode!r}")
    return w


def expected_trap_state(trap_index: int, thetas: Sequence, deltas: Sequence, m_bits: Sequence[int]) -> PureState:
    """State held by the trap vertex once the other three are measured.

    Assumes r = 0 on the measured vertices so m = b. Trap 4 follows the
    measurement chain Rz(theta4) H Rz(a3) H Rz(a2) H Rz(a1)|+> with
    a_j = theta_j - delta_j + m_j pi. Traps 1-3 use the isolating measurement
    table and need the measured vertices in its X/Y pattern.
    """
    th = [t if isinstance(t, Angle) else Angle(t) for t in thetas]
    de = [d if isinstance(d, Angle) else Angle(d) for d in deltas]
    if trap_index not in DUMMYPREP:
        raise InvalidInput(f"trap index must be 1..4, got {trap_index}")
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    if trap_index == 4:
        v = plus
        for j in range(3):
            v = H @ (rz((th[j] - de[j]).radians + m_bits[j] * np.pi) @ v)
        return PureState(1, rz(th[3]) @ v)
    ops = DUMMYPREP[trap_index]
    k = 0
    for j, op in enumerate(ops):
        if op in ("", "s"):
            continue
        phi = (de[j] - th[j]).eighths
        if phi % 4 != {"X": 0, "Y": 2}[op]:
            raise InvalidInput(f"qubit {j + 1} is not measured as {op} for trap {trap_index}")
        if j in DUMMYPREP_PARITY[trap_index]:
            k ^= m_bits[j] ^ (phi >= 4)
    return PureState(1, rz(th[trap_index - 1]) @ rz(k * np.pi) @ plus)


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "n/a"


@dataclass(frozen=True)
class RunTranscript:
    """One run: ``trap`` is None for computation runs."""

    trap: Optional[TrapSpec]
    pattern: PatternSpec
    outcome: PatternOutcome
    verdict: Verdict

    @property
    def kind(self) -> str:
        return "computation" if self.trap is None else "trap"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "trap": None if self.trap is None else self.trap.name,
            "thetas": [t.eighths for t in self.pattern.thetas],
            "deltas": self.pattern.delta_eighths().tolist(),
            "r": list(self.pattern.r_bits),
            "b": list(self.outcome.raw_bits),
            "m": list(self.outcome.decoded_bits),
            "verdict": self.verdict.value,
        }


def check_trap(transcript: RunTranscript) -> Verdict:
    if transcript.trap is None:
        return Verdict.NOT_APPLICABLE
    ok = transcript.trap.parity(transcript.outcome.decoded_bits) == transcript.trap.expected_parity
    return Verdict.PASS if ok else Verdict.FAIL


@dataclass(frozen=True)
class ParityComputation:
    """A computation whose outputs are parities of decoded bits.

    Each output must contain both or neither of qubits 1 and 4 so a joint flip
    of those two outcomes leaves it unchanged.
    """

    pattern: PatternSpec
    outputs: tuple[tuple[int, ...], ...]
    name: str = "computation"

    def __post_init__(self):
        outs = tuple(tuple(sorted(set(o))) for o in self.outputs)
        if not outs:
            raise InvalidInput("a computation needs at least one output")
        n = self.pattern.num_qubits
        for o in outs:
            if any(not 0 <= q < n for q in o):
                raise InvalidInput(f"output {o} out of range")
            if (0 in o) != (n - 1 in o):
                raise InvalidInput(f"output {tuple(q + 1 for q in o)} is not invariant under a joint flip of qubits 1 and {n}")
        object.__setattr__(self, "outputs", outs)

    @property
    def output_masks(self) -> tuple[int, ...]:
        n = self.pattern.num_qubits
        return tuple(sum(1 << (n - 1 - q) for q in o) for o in self.outputs)

    def evaluate(self, m_ints: np.ndarray) -> np.ndarray:
        m = np.ascontiguousarray(m_ints, dtype=np.int64)
        return np.stack([kernels.masked_parity(m, om) for om in self.output_masks], axis=1)


def epsilon_bound(t_upper: float, p: float = 1.0, mode: str = "mbqc", n: int = N_QUBITS) -> float:
    """min(1, 4 t / p) for MBQC traps, min(1, n t) for individual traps."""
    if not 0 <= t_upper <= 1:
        raise InvalidInput(f"t must be in [0, 1], got {t_upper}")
    if mode == "mbqc":
        if not 0 < p <= 1:
            raise InvalidInput(f"p must be in (0, 1], got {p}")
        return min(1.0, 4 * t_upper / p)
    if mode == "individual":
        return min(1.0, n * t_upper)
    raise InvalidInput(f"unknown bound mode {mode!r}")


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    ci = binomtest(int(failures), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


@dataclass(frozen=True)
class VerificationReport:
    num_runs: int
    num_traps: int
    num_trap_failures: int
    t_avg: Optional[float]
    p: float
    epsilon_bound: float
    wilson_interval: tuple[float, float]
    num_computations: int = 0
    num_computation_errors: Optional[int] = None
    empirical_epsilon: Optional[float] = None
    mode: str = "mbqc"
    trap_choice: str = "catalog"

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["wilson_interval"] = list(self.wilson_interval)
        return d


# uniform block columns used by one run
COL_TRAP, COL_ENTRY, COL_VARIANT = 0, 1, 2
COL_R = slice(3, 7)
COL_THETA = slice(7, 11)
COL_SAMPLE, COL_CHANNEL = 11, 12
COL_DEPOL = slice(13, 17)
NUM_COLS = 17


@dataclass(frozen=True)
class ScheduledRun:
    trap: Optional[TrapSpec]

    @property
    def is_trap(self) -> bool:
        return self.trap is not None


def _entry_choice(u: np.ndarray, trap_choice: str) -> np.ndarray:
    """Catalog indices from the entry/variant uniform columns."""
    cat = _raw_catalog()
    if trap_choice in ("catalog", "index"):
        idx = np.minimum((u[:, 0] * 4).astype(np.int64), 3)
        var = np.minimum((u[:, 1] * 2).astype(np.int64), 1)
        return 2 * idx + var
    if trap_choice == "stabilizer":
        groups = [[i for i, e in enumerate(cat) if e.stabilizer == s] for s in STABILIZERS]
        g = np.minimum((u[:, 0] * 3).astype(np.int64), 2)
        out = np.empty(u.shape[0], dtype=np.int64)
        for k, members in enumerate(groups):
            sel = g == k
            j = np.minimum((u[sel, 1] * len(members)).astype(np.int64), len(members) - 1)
            out[sel] = np.array(members)[j]
        return out
    raise InvalidInput(f"unknown trap choice {trap_choice!r}")


def _check_p(p: float) -> None:
    if not 0 < p <= 1:
        raise InvalidInput(f"p must be in (0, 1], got {p}")


def schedule_runs(num_total: int, p: float, rng: np.random.Generator, trap_choice: str = "catalog") -> list[ScheduledRun]:
    """I.i.d. trap/computation choices; trap runs get a catalog entry."""
    if num_total < 1:
        raise InvalidInput("need at least one run")
    _check_p(p)
    u = rng.random((num_total, NUM_COLS))
    is_trap = u[:, COL_TRAP] < p
    entry = _entry_choice(u[:, COL_ENTRY:COL_VARIANT + 1], trap_choice)
    cat = trap_catalog()
    return [ScheduledRun(cat[e] if t else None) for t, e in zip(is_trap, entry)]


@dataclass
class SessionResult:
    """Report plus the per-run arrays; transcripts are built on demand."""

    report: VerificationReport
    graph: ClusterGraph
    is_trap: np.ndarray
    entry: np.ndarray
    theta8: np.ndarray
    delta8: np.ndarray
    r_bits: np.ndarray
    raw: np.ndarray
    passed: np.ndarray

    def transcripts(self) -> list[RunTranscript]:
        cat = trap_catalog()
        out = []
        for i in range(self.raw.shape[0]):
            r = tuple(int(x) for x in self.r_bits[i])
            pat = PatternSpec(self.graph, angles(*self.theta8[i]), angles(*self.delta8[i]), r)
            outcome = PatternOutcome.from_raw(int_to_bits(int(self.raw[i]), N_QUBITS), r)
            if self.is_trap[i]:
                trap = cat[int(self.entry[i])]
                verdict = Verdict.PASS if self.passed[i] else Verdict.FAIL
            else:
                trap, verdict = None, Verdict.NOT_APPLICABLE
            out.append(RunTranscript(trap, pat, outcome, verdict))
        return out


def _unitary_samples(graph: ClusterGraph, theta8, delta8, u_sample, matrix) -> np.ndarray:
    from .mbqc import readout_register

    cache: dict = {}
    out = np.empty(theta8.shape[0], dtype=np.int64)
    for i in range(theta8.shape[0]):
        key = (tuple(theta8[i]), tuple(delta8[i]))
        if key not in cache:
            spec = PatternSpec(graph, angles(*key[0]), angles(*key[1]))
            cache[key] = np.cumsum(apply_unitary(readout_register(spec), matrix).probabilities())
        out[i] = kernels.sample_from_cdf(cache[key], u_sample[i:i + 1])[0]
    return out


def run_verified_session(
    num_runs: int,
    p: float,
    computation: ParityComputation,
    deviation: DeviationModel = HONEST,
    rng: "np.random.Generator | int | None" = None,
    trap_choice: str = "catalog",
    full_blindness: bool = False,
) -> SessionResult:
    """Interleave computation and trap runs and bound the computation error.

    Run i uses row i of a (num_runs, 17) block of uniforms. Each run is
    re-blinded: fresh r on every qubit and fresh theta on qubits 2 and 3 (all
    qubits with ``full_blindness``), with delta = theta + phi + pi r.
    """
    if num_runs < 1:
        raise InvalidInput("need at least one run")
    _check_p(p)
    if not isinstance(computation, ParityComputation):
        raise InvalidInput("sessions accept parity-invariant computations only")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    graph = computation.pattern.graph
    if graph.edges != ClusterGraph.zigzag4().edges:
        raise InvalidInput("trap catalog is defined on the 4-vertex path cluster")
    cat = trap_catalog()
    n = N_QUBITS
    u = rng.random((num_runs, NUM_COLS))
    is_trap = u[:, COL_TRAP] < p
    entry = _entry_choice(u[:, COL_ENTRY:COL_VARIANT + 1], trap_choice)

    base_theta = np.array([[t.eighths for t in e.thetas] for e in cat], dtype=np.int64)
    base_phi = np.array([[f.eighths for f in e.phis] for e in cat], dtype=np.int64)
    comp = computation.pattern
    comp_theta = comp.theta_eighths()
    comp_phi = np.array([(d - t - 4 * r) % 8 for t, d, r in zip(comp_theta, comp.delta_eighths(), comp.r_bits or (0,) * n)])
    theta8 = np.where(is_trap[:, None], base_theta[entry], comp_theta[None, :])
    phi8 = np.where(is_trap[:, None], base_phi[entry], comp_phi[None, :])

    r_bits = (u[:, COL_R] < 0.5).astype(np.int64)
    blind_cols = np.arange(n) if full_blindness else np.array([1, 2])
    fresh = np.minimum((u[:, COL_THETA] * 8).astype(np.int64), 7)
    theta8[:, blind_cols] = fresh[:, blind_cols]
    delta8 = (theta8 + phi8 + 4 * r_bits) % 8
    theta8 = np.ascontiguousarray(theta8)
    delta8 = np.ascontiguousarray(delta8)

    weights = 1 << (n - 1 - np.arange(n))
    r_mask = (r_bits * weights).sum(axis=1)
    zmask = np.zeros(n, dtype=np.bool_)
    probs = kernels.pattern_probs_batch(theta8, delta8, zmask, graph.edge_array(), n)
    honest = kernels.sample_rows(probs, np.ascontiguousarray(u[:, COL_SAMPLE]))

    if deviation.is_pauli_type:
        flips = flips_from_uniforms(deviation, np.ascontiguousarray(u[:, COL_CHANNEL]), n, u[:, COL_DEPOL])
        raw = honest ^ flips
    else:
        matrix = deviation.matrix if isinstance(deviation, PreMeasureUnitary) else None
        if matrix is None:
            raise InvalidInput("only Pauli-type and unitary deviations are supported in sessions")
        raw = _unitary_samples(graph, theta8, delta8, u[:, COL_SAMPLE], matrix)

    m = raw ^ r_mask
    support = np.array([e.support_mask for e in cat])[entry]
    expected = np.array([e.expected_parity for e in cat])[entry]
    parity = np.bitwise_count(m & support) & 1
    passed = np.where(is_trap, parity == expected, True)

    n_traps = int(is_trap.sum())
    n_fail = int((~passed & is_trap).sum())
    lo, hi = wilson_interval(n_fail, n_traps)
    bound = epsilon_bound(hi, p) if n_traps else 1.0
    n_comp = num_runs - n_traps
    errors = eps = None
    if deviation.is_pauli_type:
        comp_rows = ~is_trap
        out_dev = computation.evaluate(m[comp_rows])
        out_ref = computation.evaluate(honest[comp_rows] ^ r_mask[comp_rows])
        errors = int(np.any(out_dev != out_ref, axis=1).sum())
        eps = errors / n_comp if n_comp else None
    report = VerificationReport(
        num_runs=num_runs,
        num_traps=n_traps,
        num_trap_failures=n_fail,
        t_avg=n_fail / n_traps if n_traps else None,
        p=p,
        epsilon_bound=bound,
        wilson_interval=(lo, hi),
        num_computations=n_comp,
        num_computation_errors=errors,
        empirical_epsilon=eps,
        trap_choice=trap_choice,
    )
    return SessionResult(report, graph, is_trap, entry, theta8, delta8, r_bits, raw, passed)


@dataclass(frozen=True)
class IndividualTrapRates:
    epsilon: float
    t_avg: float
    n: int


def individual_trap_rates(model: DeviationModel, n: int = N_QUBITS) -> IndividualTrapRates:
    """Exact epsilon and <t> for the individual-trap protocol.

    Every qubit is prepared in a random computational state b; epsilon is the
    probability that any readout changes, <t> the probability that a
    uniformly chosen single qubit changes.
    """
    if model.is_pauli_type:
        masks, probs = model.flip_distribution(n)
        eps = float(probs[masks != 0].sum())
        t = float(sum(w * bin(int(mk)).count("1") for mk, w in zip(masks, probs)) / n)
        return IndividualTrapRates(eps, t, n)
    u = np.asarray(model.matrix)
    if u.shape[0] != 1 << n:
        raise InvalidInput(f"{u.shape[0]}-dim unitary for {n} qubits")
    trans = np.abs(u) ** 2  # trans[c, b] = P(read c | prepared b)
    idx = np.arange(1 << n)
    eps = float(np.mean(1 - np.diag(trans)))
    ham = np.array([[bin(int(c ^ b)).count("1") for b in idx] for c in idx])
    t = float((trans * ham).sum() / (1 << n) / n)
    return IndividualTrapRates(eps, t, n)
