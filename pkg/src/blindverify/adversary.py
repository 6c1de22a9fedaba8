"""Prover deviation models.

A deviation acts on the register immediately before computational-basis
readout, i.e. after each vertex has been rotated into its measurement frame.
In that frame X and Y flip a readout bit while I and Z leave it alone, so every
Pauli-type model reduces to a distribution over readout flip masks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .pauli import PauliString, all_pauli_strings, apply_pauli
from .states import InvalidInput, MixedState, PureState, apply_gate, apply_unitary, X, Y, Z

WEIGHT_TOL = 1e-12
UNITARY_TOL = 1e-10


class DeviationModel:
    """Base class. Subclasses are immutable values."""

    kind = "abstract"
    is_pauli_type = True

    def resolve(self, deltas=None) -> "DeviationModel":
        """The concrete model used for a run with measurement angles ``deltas``."""
        return self

    def branches(self, n: int) -> list[tuple[float, PauliString]]:
        """(weight, Pauli string) terms of the channel on ``n`` qubits."""
        raise InvalidInput(f"{self.kind} has no Pauli decomposition")

    def flip_distribution(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Readout flip masks and their probabilities, merged by mask."""
        acc: dict[int, float] = {}
        for w, p in self.branches(n):
            acc[p.flipmask] = acc.get(p.flipmask, 0.0) + w
        masks = np.array(sorted(acc), dtype=np.int64)
        return masks, np.array([acc[m] for m in masks])

    def to_json(self) -> dict:
        raise InvalidInput(f"{self.kind} is not serializable")


@dataclass(frozen=True)
class Honest(DeviationModel):
    kind = "honest"

    def branches(self, n):
        return [(1.0, PauliString("I" * n))]

    def to_json(self):
        return {"kind": self.kind}


HONEST = Honest()


@dataclass(frozen=True)
class FixedPauli(DeviationModel):
    pauli: PauliString
    kind = "fixed_pauli"

    def __post_init__(self):
        if not isinstance(self.pauli, PauliString):
            object.__setattr__(self, "pauli", PauliString(self.pauli))

    def branches(self, n):
        _check_len(self.pauli, n)
        return [(1.0, self.pauli)]

    def to_json(self):
        return {"kind": self.kind, "pauli": self.pauli.letters}


@dataclass(frozen=True)
class PauliChannel(DeviationModel):
    """Weighted Pauli strings; weights are nonnegative and sum to one."""

    terms: tuple[tuple[PauliString, float], ...]
    kind = "pauli_channel"

    def __post_init__(self):
        terms = tuple((p if isinstance(p, PauliString) else PauliString(p), float(w)) for p, w in self.terms)
        if not terms:
            raise InvalidInput("empty Pauli channel")
        if len({len(p) for p, _ in terms}) != 1:
            raise InvalidInput("Pauli strings in a channel must share a length")
        ws = np.array([w for _, w in terms])
        if np.any(ws < 0) or not np.isfinite(ws).all():
            raise InvalidInput("channel weights must be nonnegative")
        if abs(ws.sum() - 1) > WEIGHT_TOL:
            raise InvalidInput(f"channel weights sum to {ws.sum()!r}, expected 1")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, weights: dict) -> "PauliChannel":
        return cls(tuple(weights.items()))

    @classmethod
    def random(cls, rng: np.random.Generator, n: int = 4, support: int = 4, identity_weight: Optional[float] = None) -> "PauliChannel":
        """A random channel on ``support`` distinct strings, identity always included."""
        strings = all_pauli_strings(n)
        pick = rng.choice(np.arange(1, len(strings)), size=support - 1, replace=False)
        w = rng.dirichlet(np.ones(support))
        if identity_weight is not None:
            w[1:] *= (1 - identity_weight) / w[1:].sum()
            w[0] = identity_weight
        w = w / w.sum()
        return cls(tuple(zip([strings[0]] + [strings[i] for i in pick], w)))

    @property
    def num_qubits(self) -> int:
        return len(self.terms[0][0])

    def branches(self, n):
        _check_len(self.terms[0][0], n)
        return [(w, p) for p, w in self.terms]

    def to_json(self):
        return {"kind": self.kind, "terms": [[p.letters, w] for p, w in self.terms]}


@dataclass(frozen=True, eq=False)
class PreMeasureUnitary(DeviationModel):
    matrix: np.ndarray
    kind = "unitary"
    is_pauli_type = False

    def __post_init__(self):
        u = np.array(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] & (u.shape[0] - 1):
            raise InvalidInput(f"unitary must be square with power-of-two size, got {u.shape}")
        if np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() > UNITARY_TOL:
            raise InvalidInput("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @classmethod
    def from_pauli(cls, p: "PauliString | str") -> "PreMeasureUnitary":
        p = p if isinstance(p, PauliString) else PauliString(p)
        return cls(p.matrix())

    def to_json(self):
        return {"kind": self.kind, "real": self.matrix.real.tolist(), "imag": self.matrix.imag.tolist()}


@dataclass(frozen=True)
class Depolarizing(DeviationModel):
    """Per-qubit depolarizing noise rho -> (1-q) rho + q I/2.

    ``rate`` is a single q for every qubit or a tuple of per-qubit rates.
    """

    rate: "float | tuple[float, ...]"
    kind = "depolarizing"

    def __post_init__(self):
        r = self.rate
        r = tuple(float(x) for x in r) if isinstance(r, (tuple, list, np.ndarray)) else float(r)
        vals = r if isinstance(r, tuple) else (r,)
        if any(not 0.0 <= x <= 1.0 for x in vals):
            raise InvalidInput(f"depolarizing rate must be in [0, 1], got {self.rate!r}")
        object.__setattr__(self, "rate", r)

    def rates(self, n: int) -> np.ndarray:
        if isinstance(self.rate, tuple):
            if len(self.rate) != n:
                raise InvalidInput(f"{len(self.rate)} rates for {n} qubits")
            return np.array(self.rate)
        return np.full(n, self.rate)

    def branches(self, n):
        q = self.rates(n)
        out = []
        for p in all_pauli_strings(n):
            w = 1.0
            for qi, c in zip(q, p.letters):
                w *= 1 - 3 * qi / 4 if c == "I" else qi / 4
            if w > 0:
                out.append((w, p))
        return out

    def flip_distribution(self, n):
        q = self.rates(n) / 2
        masks = np.arange(1 << n, dtype=np.int64)
        probs = np.ones(1 << n)
        for k in range(n):
            bit = (masks >> (n - 1 - k)) & 1
            probs *= np.where(bit == 1, q[k], 1 - q[k])
        keep = probs > 0
        return masks[keep], probs[keep]

    def to_json(self):
        return {"kind": self.kind, "rate": list(self.rate) if isinstance(self.rate, tuple) else self.rate}


@dataclass(frozen=True)
class DeltaDependent(DeviationModel):
    """A deviation chosen as a function of the announced angles."""

    fn: Callable[[Sequence], DeviationModel]
    pauli_type: bool = True
    kind = "delta_dependent"

    @property
    def is_pauli_type(self) -> bool:  # type: ignore[override]
        return self.pauli_type

    def resolve(self, deltas=None):
        if deltas is None:
            raise InvalidInput("a delta-dependent deviation needs the measurement angles")
        model = self.fn(tuple(deltas))
        if not isinstance(model, DeviationModel) or isinstance(model, DeltaDependent):
            raise InvalidInput("delta-dependent deviation must resolve to a concrete model")
        return model


def _check_len(p: PauliString, n: int) -> None:
    if len(p) != n:
        raise InvalidInput(f"deviation acts on {len(p)} qubits, register has {n}")


def from_json(doc: dict) -> DeviationModel:
    if not isinstance(doc, dict):
        raise InvalidInput("deviation document must be a JSON object")
    try:
        return _from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed deviation document: {exc!r}") from exc


def _from_json(doc: dict) -> DeviationModel:
    kind = doc.get("kind")
    if kind == "honest":
        return HONEST
    if kind == "fixed_pauli":
        return FixedPauli(PauliString(doc["pauli"]))
    if kind == "pauli_channel":
        terms = doc["terms"]
        pairs = terms.items() if isinstance(terms, dict) else terms
        return PauliChannel(tuple((PauliString(p), float(w)) for p, w in pairs))
    if kind == "unitary":
        return PreMeasureUnitary(np.array(doc["real"]) + 1j * np.array(doc.get("imag", 0.0)))
    if kind == "depolarizing":
        r = doc["rate"]
        return Depolarizing(tuple(r) if isinstance(r, list) else r)
    raise InvalidInput(f"unknown deviation kind {kind!r}")


def load(path) -> DeviationModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read deviation file {path!r}: {exc}") from exc
    return from_json(doc)


def save(model: DeviationModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_json(), fh, indent=2)


def apply_deviation(model: DeviationModel, state: PureState, rng: np.random.Generator, deltas=None) -> PureState:
    """One unravelled application of ``model`` to a pre-readout register."""
    model = model.resolve(deltas)
    n = state.num_qubits
    if isinstance(model, Honest):
        return state
    if isinstance(model, FixedPauli):
        return apply_pauli(state, model.branches(n)[0][1])
    if isinstance(model, PauliChannel):
        br = model.branches(n)
        k = int(kernels.sample_from_cdf(np.cumsum([w for w, _ in br]), np.array([rng.random()]))[0])
        return apply_pauli(state, br[k][1])
    if isinstance(model, PreMeasureUnitary):
        if model.matrix.shape[0] != 1 << n:
            raise InvalidInput(f"{model.matrix.shape[0]}-dim unitary on a {n}-qubit register")
        return apply_unitary(state, model.matrix)
    if isinstance(model, Depolarizing):
        q = model.rates(n)
        for k in range(n):
            if rng.random() < q[k]:
                gate = (None, X, Y, Z)[rng.integers(4)]
                if gate is not None:
                    state = apply_gate(state, gate, k)
        return state
    raise InvalidInput(f"cannot apply deviation of kind {model.kind!r}")


def deviated_density(model: DeviationModel, state: PureState, deltas=None) -> MixedState:
    """Exact channel output: Pauli branches are summed, unitaries applied."""
    model = model.resolve(deltas)
    if not model.is_pauli_type:
        return MixedState.from_pure(apply_deviation(model, state, np.random.default_rng(0)))
    rho = np.zeros((1 << state.num_qubits,) * 2, dtype=complex)
    for w, p in model.branches(state.num_qubits):
        v = apply_pauli(state, p).amplitudes
        rho += w * np.outer(v, v.conj())
    return MixedState(state.num_qubits, rho)


def readout_flips(model: DeviationModel, shots: int, n: int, rng: np.random.Generator, deltas=None) -> np.ndarray:
    """Packed readout flip masks for ``shots`` independent runs."""
    model = model.resolve(deltas)
    if isinstance(model, Depolarizing):
        return kernels.depolarize_flips(rng.random((shots, n)), model.rates(n), n)
    return flips_from_uniforms(model, rng.random(shots), n)


def flips_from_uniforms(model: DeviationModel, u: np.ndarray, n: int, u_depol: Optional[np.ndarray] = None) -> np.ndarray:
    """Flip masks from caller-supplied uniforms (one per run, plus (N, n) for depolarizing)."""
    if not model.is_pauli_type:
        raise InvalidInput("readout flips exist only for Pauli-type deviations")
    if isinstance(model, Depolarizing):
        if u_depol is None:
            raise InvalidInput("depolarizing flips need per-qubit uniforms")
        return kernels.depolarize_flips(np.ascontiguousarray(u_depol), model.rates(n), n)
    masks, probs = model.flip_distribution(n)
    return kernels.sample_pauli_flips(np.ascontiguousarray(u), np.cumsum(probs), masks)


def flip_distribution_table(model: DeviationModel, n: int) -> np.ndarray:
    """Dense length-2**n vector of flip-mask probabilities."""
    masks, probs = model.flip_distribution(n)
    out = np.zeros(1 << n)
    np.add.at(out, masks, probs)
    return out


def deviated_distribution(spec, model: DeviationModel) -> np.ndarray:
    """Exact raw-bit distribution of a pattern under ``model``."""
    from .mbqc import pattern_distribution, readout_register

    model = model.resolve(spec.deltas)
    n = spec.num_qubits
    if model.is_pauli_type:
        honest = pattern_distribution(spec)
        idx = np.arange(1 << n)
        masks, probs = model.flip_distribution(n)
        out = np.zeros(1 << n)
        for m, w in zip(masks, probs):
            out += w * honest[idx ^ m]
        return out
    reg = apply_deviation(model, readout_register(spec), np.random.default_rng(0))
    return reg.probabilities()


@dataclass(frozen=True)
class ErrorRates:
    """Exact error probabilities of a Pauli-type deviation.

    ``t_by_index`` uses the stabilizer table per trap index; ``t_by_entry`` uses
    the stabilizer each catalog entry realizes; ``t_avg`` averages over the
    verifier's trap-choice distribution.
    """

    epsilon: float
    epsilon_worst: float
    t_by_index: dict
    t_by_stabilizer: dict
    t_by_entry: dict
    t_avg: float
    trap_choice: str = "catalog"
    extras: dict = field(default_factory=dict)


def exact_error_rates(model: DeviationModel, computation=None, trap_choice: str = "catalog", parity_invariant: bool = True) -> ErrorRates:
    """Exact epsilon and trap-failure probabilities for a Pauli-type model.

    Without a computation, epsilon is the weight of flip patterns outside the
    harmless set (CCCC, plus ACCA for parity-invariant computations). With a
    computation exposing ``output_masks``, epsilon is the weight of flip
    patterns that change at least one output parity.
    """
    from . import verification as ver

    if not isinstance(model, DeviationModel) or not model.is_pauli_type or isinstance(model, DeltaDependent):
        raise InvalidInput("exact error rates need a delta-independent Pauli-type model")
    n = 4
    masks, probs = model.flip_distribution(n)
    acca = ver.ACCA_MASK
    harmless = {0, acca} if parity_invariant else {0}
    worst = float(sum(w for m, w in zip(masks, probs) if int(m) not in harmless))
    if computation is not None and hasattr(computation, "output_masks"):
        eps = float(sum(w for m, w in zip(masks, probs) if any(bin(int(m) & om).count("1") & 1 for om in computation.output_masks)))
    else:
        eps = worst

    def t_of(stab: PauliString) -> float:
        return float(sum(w for m, w in zip(masks, probs) if ver.flips_fail(int(m), stab)))

    by_stab = {s.letters: t_of(s) for s in ver.STABILIZERS}
    by_index = {i: by_stab[s.letters] for i, s in ver.STABILIZER_BY_INDEX.items()}
    by_entry = {e.name: by_stab[e.stabilizer.letters] for e in ver.trap_catalog()}
    weights = ver.trap_choice_weights(trap_choice)
    t_avg = float(sum(w * by_stab[s] for s, w in weights.items()))
    return ErrorRates(eps, worst, by_index, by_stab, by_entry, t_avg, trap_choice)
