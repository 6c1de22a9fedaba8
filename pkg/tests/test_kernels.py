"""Both kernel backends against each other and against dense linear algebra."""
import itertools
import os
import subprocess
import sys

import numpy as np
from hypothesis import given, strategies as st

from blindverify import _kernels_numpy as ref
from blindverify.pauli import PauliString
from blindverify.states import H, rz

from conftest import random_state


def dense_1q(n, q, u):
    ops = [np.eye(2)] * n
    ops[q] = u
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


def test_apply_1q_matches_kron(backend, rng):
    for n in (1, 3, 5):
        for q in range(n):
            psi = random_state(rng, n)
            u = rz(0.7) @ H
            got = backend.apply_1q(psi.copy(), n, q, np.ascontiguousarray(u))
            assert np.allclose(got, dense_1q(n, q, u) @ psi, atol=1e-12)


def test_apply_cz_matches_diagonal(backend, rng):
    n = 4
    psi = random_state(rng, n)
    for a, b in itertools.permutations(range(n), 2):
        diag = np.array([-1 if (j >> (n - 1 - a)) & 1 and (j >> (n - 1 - b)) & 1 else 1 for j in range(1 << n)])
        assert np.allclose(backend.apply_cz(psi.copy(), n, a, b), diag * psi)


@given(st.text(alphabet="IXYZ", min_size=1, max_size=4))
def test_pauli_masks_match_matrix(letters):
    p = PauliString(letters)
    n = len(p)
    psi = random_state(np.random.default_rng(len(letters)), n)
    for be in _backends():
        got = be.apply_pauli_masks(psi.copy(), n, p.xmask, p.zmask)
        assert np.allclose(got, p.matrix() @ psi, atol=1e-12)
        exp = np.vdot(psi, p.matrix() @ psi).real
        assert abs(be.pauli_expectation(psi.copy(), n, p.xmask, p.zmask) - exp) < 1e-12


def _backends():
    try:
        from blindverify import _kernels_numba
        return [ref, _kernels_numba]
    except ImportError:  # pragma: no cover
        return [ref]


def test_pattern_probs_backends_agree(backend, rng):
    n = 4
    theta = rng.integers(0, 8, size=(50, n))
    delta = rng.integers(0, 8, size=(50, n))
    zmask = np.array([False, True, False, False])
    edges = np.array([[0, 1], [1, 2], [2, 3]], dtype=np.int64)
    want = ref.pattern_probs_batch(theta, delta, zmask, edges, n)
    got = backend.pattern_probs_batch(theta, delta, zmask, edges, n)
    assert np.allclose(got, want, atol=1e-12)
    assert np.allclose(got.sum(axis=1), 1)


def test_sampling_kernels_agree(backend, rng):
    cdf = np.cumsum(rng.dirichlet(np.ones(16)))
    u = rng.random(2000)
    assert np.array_equal(backend.sample_from_cdf(cdf, u), ref.sample_from_cdf(cdf, u))
    probs = rng.dirichlet(np.ones(16), size=300)
    u = rng.random(300)
    assert np.array_equal(backend.sample_rows(probs, u), ref.sample_rows(probs, u))
    masks = np.array([0, 9, 3, 15], dtype=np.int64)
    cumw = np.cumsum([0.4, 0.3, 0.2, 0.1])
    u = rng.random(1000)
    assert np.array_equal(backend.sample_pauli_flips(u, cumw, masks), ref.sample_pauli_flips(u, cumw, masks))
    ud = rng.random((500, 4))
    q = np.array([0.1, 0.5, 0.0, 1.0])
    assert np.array_equal(backend.depolarize_flips(ud, q, 4), ref.depolarize_flips(ud, q, 4))


def test_masked_parity(backend):
    vals = np.arange(16, dtype=np.int64)
    got = backend.masked_parity(vals, 0b1011)
    assert got.tolist() == [bin(v & 0b1011).count("1") % 2 for v in range(16)]


def test_sample_rows_frequencies(backend, rng):
    p = np.array([[0.1, 0.2, 0.3, 0.4]])
    probs = np.repeat(p, 40000, axis=0)
    draws = backend.sample_rows(probs, rng.random(40000))
    freq = np.bincount(draws, minlength=4) / 40000
    assert np.abs(freq - p[0]).max() < 0.01


def test_env_flag_selects_numpy():
    code = "from blindverify import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, BLINDVERIFY_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
