"""Simulation and analysis of verifiable blind measurement-based quantum computing.

A verifier that can only prepare single qubits |theta> = (|0> + e^{i theta}|1>)/sqrt2
delegates 4-qubit cluster computations to an untrusted prover, hides trap runs
among them, and bounds the probability that a cheating prover corrupts the
result. The modules cover the state-vector core (:mod:`states`, :mod:`pauli`),
blind patterns (:mod:`mbqc`), prover deviations (:mod:`adversary`), traps and
sessions (:mod:`verification`), the blind CHSH test (:mod:`bell`) and the
command-line runner (:mod:`cli`).
"""
from .angles import Angle, Z_BASIS, angles
from .kernels import BACKEND
from .states import InvalidInput, MixedState, PureState

__version__ = "0.1.0"

__all__ = ["Angle", "Z_BASIS", "angles", "BACKEND", "InvalidInput", "MixedState", "PureState", "__version__"]
