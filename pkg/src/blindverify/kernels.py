"""Kernel dispatch.

Numba kernels are used when numba imports cleanly and the environment variable
``BLINDVERIFY_DISABLE_NUMBA`` is unset or "0". Both backends stay importable so
tests and the benchmark can compare them directly.
"""
import os

from . import _kernels_numpy as numpy_backend

_disabled = os.environ.get("BLINDVERIFY_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

numba_backend = None
if not _disabled:
    try:
        from . import _kernels_numba as numba_backend
    except ImportError:  # pragma: no cover - numba missing
        numba_backend = None

active = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if active is numba_backend else "numpy"

apply_1q = active.apply_1q
apply_cz = active.apply_cz
apply_pauli_masks = active.apply_pauli_masks
pauli_expectation = active.pauli_expectation
masked_parity = active.masked_parity
sample_from_cdf = active.sample_from_cdf
pattern_probs_batch = active.pattern_probs_batch
sample_pauli_flips = active.sample_pauli_flips
depolarize_flips = active.depolarize_flips
sample_rows = active.sample_rows
