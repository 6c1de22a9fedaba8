"""Blind cluster states and non-adaptive measurement patterns.

Vertices are 0-based internally (vertex j in JSON and reports is index j-1). A pattern
measures every vertex; with no adaptivity the joint outcome distribution does
not depend on the measurement order, which is recorded only for transcripts.

Outcome vectors are packed into integers with vertex 0 as the most significant
bit, matching the amplitude ordering of :mod:`blindverify.states`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .angles import Angle, Basis, Z_BASIS, as_basis, basis_to_json, is_z, recover_phi
from .states import (
    H,
    InvalidInput,
    PureState,
    apply_gate,
    make_blind_state,
    measure_in_basis,
    product_state,
    readout_rotation,
    rz,
)

MAX_EXACT_QUBITS = 10


class Layout(enum.Enum):
    LINEAR4 = "linear4"
    HORSESHOE4 = "horseshoe4"
    ZIGZAG4 = "zigzag4"
    CUSTOM = "custom"


# All three 4-vertex layouts are the path 1-2-3-4. The horseshoe and zigzag
# drawings differ only in geometry; the trap stabilizers (XIYY, YXXY, YYIX) and
# the two-wire Bell circuit are both generated by this edge set.
_PATH4 = ((0, 1), (1, 2), (2, 3))


@dataclass(frozen=True)
class ClusterGraph:
    layout: Layout
    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise InvalidInput(f"self-loop on vertex {a}")
            if not (0 <= a < self.num_vertices and 0 <= b < self.num_vertices):
                raise InvalidInput(f"edge ({a}, {b}) out of range")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def linear4(cls) -> "ClusterGraph":
        return cls(Layout.LINEAR4, 4, _PATH4)

    @classmethod
    def horseshoe4(cls) -> "ClusterGraph":
        return cls(Layout.HORSESHOE4, 4, _PATH4)

    @classmethod
    def zigzag4(cls) -> "ClusterGraph":
        return cls(Layout.ZIGZAG4, 4, _PATH4)

    @classmethod
    def custom(cls, num_vertices: int, edges) -> "ClusterGraph":
        return cls(Layout.CUSTOM, num_vertices, tuple(edges))

    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    def to_json(self) -> dict:
        return {
            "layout": self.layout.value,
            "num_vertices": self.num_vertices,
            "edges": [[a + 1, b + 1] for a, b in self.edges],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ClusterGraph":
        return cls(
            Layout(doc.get("layout", "custom")),
            int(doc["num_vertices"]),
            tuple((int(a) - 1, int(b) - 1) for a, b in doc["edges"]),
        )


@dataclass(frozen=True)
class PatternSpec:
    graph: ClusterGraph
    thetas: tuple[Angle, ...]
    deltas: tuple[Basis, ...]
    r_bits: tuple[int, ...] = ()
    measurement_order: tuple[int, ...] = ()
    phis: Optional[tuple[Basis, ...]] = None

    def __post_init__(self) -> None:
        n = self.graph.num_vertices
        thetas = tuple(Angle(t) if not isinstance(t, Angle) else t for t in self.thetas)
        deltas = tuple(as_basis(d) for d in self.deltas)
        r = tuple(int(x) & 1 for x in self.r_bits) or (0,) * n
        order = tuple(int(x) for x in self.measurement_order) or tuple(range(n))
        if len(thetas) != n or len(deltas) != n or len(r) != n:
            raise InvalidInput(f"pattern vectors must all have length {n}")
        if sorted(order) != list(range(n)):
            raise InvalidInput("measurement_order must be a permutation of the vertices")
        for j in range(n):
            if is_z(deltas[j]) and r[j]:
                raise InvalidInput(f"vertex {j}: Z readouts cannot carry a hiding bit")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "r_bits", r)
        object.__setattr__(self, "measurement_order", order)
        if self.phis is not None:
            phis = tuple(as_basis(p) for p in self.phis)
            if len(phis) != n:
                raise InvalidInput("phis must have one entry per vertex")
            for j, (phi, got) in enumerate(zip(phis, self.implied_phis())):
                if phi != got:
                    raise InvalidInput(f"vertex {j}: delta - theta - pi*r = {got}, expected phi = {phi}")
            object.__setattr__(self, "phis", phis)

    @property
    def num_qubits(self) -> int:
        return self.graph.num_vertices

    @classmethod
    def from_phis(cls, graph: ClusterGraph, thetas, phis, r_bits=None, measurement_order=()) -> "PatternSpec":
        """delta_j = theta_j + phi_j + pi*r_j; Z entries in ``phis`` stay Z readouts."""
        n = graph.num_vertices
        thetas = tuple(Angle(t) if not isinstance(t, Angle) else t for t in thetas)
        phis = tuple(as_basis(p) for p in phis)
        r = tuple(r_bits) if r_bits is not None else (0,) * n
        deltas = tuple(Z_BASIS if is_z(p) else (t + p).flip(rj) for t, p, rj in zip(thetas, phis, r))
        return cls(graph, thetas, deltas, r, measurement_order, phis)

    def implied_phis(self) -> tuple[Basis, ...]:
        return tuple(
            Z_BASIS if is_z(d) else recover_phi(t, d, rj)
            for t, d, rj in zip(self.thetas, self.deltas, self.r_bits)
        )

    def reblind(self, thetas=None, r_bits=None) -> "PatternSpec":
        """Same computation (same phi) under fresh blind phases and hiding bits."""
        phis = self.implied_phis()
        thetas = self.thetas if thetas is None else thetas
        r = self.r_bits if r_bits is None else tuple(0 if is_z(p) else int(b) & 1 for p, b in zip(phis, r_bits))
        return PatternSpec.from_phis(self.graph, thetas, phis, r, self.measurement_order)

    @property
    def r_mask(self) -> int:
        return bits_to_int(self.r_bits)

    @property
    def z_mask(self) -> np.ndarray:
        return np.array([is_z(d) for d in self.deltas], dtype=np.bool_)

    def theta_eighths(self) -> np.ndarray:
        return np.array([t.eighths for t in self.thetas], dtype=np.int64)

    def delta_eighths(self) -> np.ndarray:
        return np.array([0 if is_z(d) else d.eighths for d in self.deltas], dtype=np.int64)

    def to_json(self) -> dict:
        doc = {
            "graph": self.graph.to_json(),
            "thetas": [t.eighths for t in self.thetas],
            "deltas": [basis_to_json(d) for d in self.deltas],
            "r_bits": list(self.r_bits),
            "measurement_order": [j + 1 for j in self.measurement_order],
        }
        if self.phis is not None:
            doc["phis"] = [basis_to_json(p) for p in self.phis]
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "PatternSpec":
        order = doc.get("measurement_order")
        return cls(
            ClusterGraph.from_json(doc["graph"]),
            tuple(Angle(t) for t in doc["thetas"]),
            tuple(as_basis(d) for d in doc["deltas"]),
            tuple(doc.get("r_bits", ())),
            tuple(j - 1 for j in order) if order else (),
            tuple(as_basis(p) for p in doc["phis"]) if "phis" in doc else None,
        )


@dataclass(frozen=True)
class PatternOutcome:
    raw_bits: tuple[int, ...]
    decoded_bits: tuple[int, ...]
    measurement_order: tuple[int, ...] = field(default=())

    @classmethod
    def from_raw(cls, raw_bits, r_bits, measurement_order=()) -> "PatternOutcome":
        raw = tuple(int(b) for b in raw_bits)
        return cls(raw, tuple(b ^ (int(r) & 1) for b, r in zip(raw, r_bits)), tuple(measurement_order))


def bits_to_int(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | (int(b) & 1)
    return out


def int_to_bits(value: int, n: int) -> tuple[int, ...]:
    return tuple((int(value) >> (n - 1 - k)) & 1 for k in range(n))


def build_cluster(graph: ClusterGraph, thetas: Sequence[Angle]) -> PureState:
    if len(thetas) != graph.num_vertices:
        raise InvalidInput(f"need {graph.num_vertices} blind phases, got {len(thetas)}")
    state = product_state([make_blind_state(t if isinstance(t, Angle) else Angle(t)) for t in thetas])
    for a, b in graph.edges:
        state = apply_gate(state, "CZ", a, b)
    return state


def readout_register(spec: PatternSpec) -> PureState:
    """The cluster rotated so every readout is a computational-basis measurement.

    This is the register a deviating prover acts on immediately before readout.
    """
    state = build_cluster(spec.graph, spec.thetas)
    for j, d in enumerate(spec.deltas):
        if not is_z(d):
            state = apply_gate(state, readout_rotation(d), j)
    return state


def execute_pattern(spec: PatternSpec, deviation=None, rng: Optional[np.random.Generator] = None) -> PatternOutcome:
    """Run one pattern shot by shot: build, deviate, measure vertex by vertex."""
    from .adversary import HONEST, apply_deviation

    rng = np.random.default_rng() if rng is None else rng
    deviation = HONEST if deviation is None else deviation
    n = spec.num_qubits
    register = apply_deviation(deviation, readout_register(spec), rng, deltas=spec.deltas)
    # undo the readout rotation so each vertex is measured in its own basis
    state = register
    for j, d in enumerate(spec.deltas):
        if not is_z(d):
            state = apply_gate(state, readout_rotation(d).conj().T, j)
    bits = [0] * n
    for j in spec.measurement_order:
        record, state = measure_in_basis(state, j, spec.deltas[j], rng.random())
        bits[j] = record.outcome
    return PatternOutcome.from_raw(bits, spec.r_bits, spec.measurement_order)


def expected_honest_distribution(spec: PatternSpec) -> np.ndarray:
    """Exact distribution of the raw bits b by recursive projection.

    Entry ``i`` is P(b = int_to_bits(i)). Follows ``measurement_order``; the
    result is order independent for these non-adaptive patterns.
    """
    n = spec.num_qubits
    if n > MAX_EXACT_QUBITS:
        raise InvalidInput(f"exact distributions are capped at {MAX_EXACT_QUBITS} qubits")
    probs = np.zeros(1 << n)
    state0 = build_cluster(spec.graph, spec.thetas)

    def recurse(vec: np.ndarray, depth: int, prefix: dict[int, int], weight: float) -> None:
        if weight < 1e-300:
            return
        if depth == n:
            probs[bits_to_int([prefix[j] for j in range(n)])] += weight
            return
        j = spec.measurement_order[depth]
        t = np.moveaxis(vec.reshape((2,) * n), j, 0)
        rot = readout_rotation(spec.deltas[j])
        t = np.tensordot(rot, t, axes=([1], [0]))
        for outcome in (0, 1):
            branch = np.zeros_like(t)
            branch[outcome] = t[outcome]
            p = float(np.vdot(branch, branch).real)
            if p <= 0:
                continue
            branch = np.tensordot(rot.conj().T, branch, axes=([1], [0])) / np.sqrt(p)
            nxt = np.moveaxis(branch, 0, j).reshape(-1)
            recurse(nxt, depth + 1, {**prefix, j: outcome}, weight * p)

    recurse(np.array(state0.amplitudes), 0, {}, 1.0)
    return probs


def pattern_distribution(spec: PatternSpec) -> np.ndarray:
    """Exact raw-bit distribution via the batch kernel (fast path)."""
    return pattern_distributions(spec.graph, spec.theta_eighths()[None, :], spec.delta_eighths()[None, :], spec.z_mask)[0]


def pattern_distributions(graph: ClusterGraph, theta8: np.ndarray, delta8: np.ndarray, zmask=None) -> np.ndarray:
    """Raw-bit distributions for many (theta, delta) rows on one graph."""
    n = graph.num_vertices
    theta8 = np.ascontiguousarray(np.atleast_2d(theta8), dtype=np.int64)
    delta8 = np.ascontiguousarray(np.atleast_2d(delta8), dtype=np.int64)
    if delta8.shape[0] == 1 and theta8.shape[0] > 1:
        delta8 = np.ascontiguousarray(np.broadcast_to(delta8, theta8.shape))
    zmask = np.zeros(n, dtype=np.bool_) if zmask is None else np.asarray(zmask, dtype=np.bool_)
    return kernels.pattern_probs_batch(theta8, delta8, zmask, graph.edge_array(), n)


def decoded_distribution(spec: PatternSpec, raw: Optional[np.ndarray] = None) -> np.ndarray:
    """Distribution of m = b xor r."""
    raw = pattern_distribution(spec) if raw is None else raw
    idx = np.arange(raw.shape[0])
    return raw[idx ^ spec.r_mask]


def sample_pattern(spec: PatternSpec, shots: int, rng: np.random.Generator, deviation=None) -> np.ndarray:
    """``shots`` raw outcomes (packed ints) drawn from the exact distribution.

    Pauli-type deviations are applied as readout flips of honest samples; other
    deviations sample the exact deviated distribution.
    """
    from .adversary import HONEST, deviated_distribution, readout_flips

    deviation = HONEST if deviation is None else deviation
    raw = pattern_distribution(spec)
    cdf = np.cumsum(raw)
    u = rng.random(shots)
    if deviation.is_pauli_type:
        b = kernels.sample_from_cdf(cdf, u)
        return b ^ readout_flips(deviation, shots, spec.num_qubits, rng, deltas=spec.deltas)
    dev = deviated_distribution(spec, deviation)
    return kernels.sample_from_cdf(np.cumsum(dev), u)


@dataclass(frozen=True)
class ZigzagCircuitResult:
    """Output of the two-wire circuit realized by the zigzag pattern.

    ``logical_state`` is the upper/lower wire state with both teleportation
    outcomes zero, just before the two Bell readouts. ``distribution`` is over
    the four pattern bits (b1..b4), packed as in :func:`bits_to_int`.
    """

    logical_state: PureState
    distribution: np.ndarray


def _wire_states(th: np.ndarray, de: np.ndarray, b2: int, b4: int) -> np.ndarray:
    """Two-wire state (upper, lower) for byproduct outcomes b2, b4, before readout."""
    z = np.diag([1.0, -1.0]).astype(complex)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    w = np.pi / 4
    lower = H @ np.linalg.matrix_power(z, b4) @ rz(w * (th[3] - de[3])) @ plus
    psi = np.kron(plus, lower)
    psi = psi * np.array([1, 1, 1, -1])  # CPhase between the wires
    upper_op = rz(w * th[0]) @ H @ np.linalg.matrix_power(z, b2) @ rz(w * (th[1] - de[1]))
    return np.kron(upper_op, rz(w * th[2])) @ psi


def zigzag_circuit(thetas: Sequence[Angle], deltas: Sequence[Angle]) -> ZigzagCircuitResult:
    """Evaluate the two-wire circuit of the zigzag pattern.

    Lower wire: Rz(theta4 - delta4), H, CPhase, Rz(theta3), readout at delta3.
    Upper wire: CPhase, Rz(theta2 - delta2), H, Rz(theta1), readout at delta1.
    The teleportation outcomes b2 and b4 are uniform and enter as Z byproducts
    before the H of their wire.
    """
    th = np.array([Angle(t).eighths if not isinstance(t, Angle) else t.eighths for t in thetas])
    de = np.array([Angle(d).eighths if not isinstance(d, Angle) else d.eighths for d in deltas])
    if th.shape != (4,) or de.shape != (4,):
        raise InvalidInput("zigzag circuit takes four thetas and four deltas")
    ro = np.kron(readout_rotation(Angle(int(de[0]))), readout_rotation(Angle(int(de[2]))))
    dist = np.zeros(16)
    for b2 in (0, 1):
        for b4 in (0, 1):
            p13 = np.abs(ro @ _wire_states(th, de, b2, b4)) ** 2
            for b1 in (0, 1):
                for b3 in (0, 1):
                    dist[bits_to_int((b1, b2, b3, b4))] += 0.25 * p13[2 * b1 + b3]
    return ZigzagCircuitResult(PureState(2, _wire_states(th, de, 0, 0)), dist)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return float(0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum())
