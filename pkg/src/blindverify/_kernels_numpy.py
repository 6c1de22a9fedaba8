"""Pure-numpy implementations of the hot kernels.

Every function here has a loop-level twin in ``_kernels_numba`` with the same
signature; ``kernels`` picks one at import time. Qubit 0 is the most
significant bit of the amplitude index.
"""
import numpy as np


def apply_1q(psi, n, q, u):
    """Apply the 2x2 matrix ``u`` to qubit ``q`` of ``psi`` in place."""
    v = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    v[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return psi


def apply_cz(psi, n, a, b):
    idx = np.arange(psi.shape[0])
    both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
    psi[both == 1] *= -1
    return psi


def apply_pauli_masks(psi, n, xmask, zmask):
    """Apply the Pauli string with X on ``xmask`` bits and Z on ``zmask`` bits.

    Y positions are set in both masks; the i factor per Y is applied here so the
    result equals the tensor product of the letters exactly (Y = iXZ).
    """
    idx = np.arange(psi.shape[0])
    ny = bin(xmask & zmask).count("1")
    signs = 1 - 2 * (_popcount(idx & zmask) & 1)
    # (X^x Z^z)|j> = (-1)^{j.z}|j^x>: gather with the sign of the source index
    out = (psi * signs)[idx ^ xmask]
    psi[:] = out * (1j ** ny)
    return psi


def pauli_expectation(psi, n, xmask, zmask):
    tmp = psi.copy()
    apply_pauli_masks(tmp, n, xmask, zmask)
    return np.vdot(psi, tmp).real


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x = x >> 1
    return c


def masked_parity(values, mask):
    return (_popcount(np.asarray(values, dtype=np.int64) & mask) & 1).astype(np.int64)


def sample_from_cdf(cdf, u):
    out = np.searchsorted(cdf, u, side="right")
    return np.minimum(out, cdf.shape[0] - 1).astype(np.int64)


def pattern_probs_batch(theta8, delta8, zmeas, edges, n):
    """Exact outcome distributions for a batch of blind cluster patterns.

    theta8: (N, n) int eighths; delta8: (N, n) int eighths; zmeas: (n,) bool
    marks computational-basis readouts. Returns (N, 2**n) probabilities.
    """
    N = theta8.shape[0]
    dim = 1 << n
    idx = np.arange(dim)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1  # (dim, n)
    cz = np.ones(dim)
    for a, b in edges:
        cz = cz * (1 - 2 * (bits[:, a] & bits[:, b]))
    # |cluster> amplitude on |j>: 2^{-n/2} * cz[j] * exp(i pi/4 * sum_k theta_k j_k)
    phase8 = theta8 @ bits.T  # (N, dim)
    amps = cz[None, :] * np.exp(1j * np.pi / 4 * phase8) / np.sqrt(dim)
    # readout amplitude <b|: XY-plane qubits contribute (1 + (-1)^b e^{-i delta} ...)/sqrt2
    # build the product of single-qubit bras and contract qubit by qubit
    state = amps.reshape((N,) + (2,) * n)
    for q in range(n):
        if zmeas[q]:
            bra = np.broadcast_to(np.eye(2, dtype=complex), (N, 2, 2))
        else:
            e = np.exp(-1j * np.pi / 4 * delta8[:, q])
            bra = np.empty((N, 2, 2), dtype=complex)
            bra[:, 0, 0] = 1
            bra[:, 0, 1] = e
            bra[:, 1, 0] = 1
            bra[:, 1, 1] = -e
            bra /= np.sqrt(2)
        state = np.moveaxis(np.einsum("nbk,nk...->nb...", bra, np.moveaxis(state, q + 1, 1)), 1, q + 1)
    return (np.abs(state) ** 2).reshape(N, dim)


def sample_pauli_flips(u, cumw, flipmasks):
    k = np.searchsorted(cumw, u, side="right")
    k = np.minimum(k, cumw.shape[0] - 1)
    return flipmasks[k]


def depolarize_flips(u, q, n):
    """Per-qubit readout flips of a depolarizing channel.

    u: (N, n) uniforms. A qubit is hit with probability q; a hit picks I/X/Y/Z
    uniformly, and X or Y flips the readout, so flip iff u < q/2.
    """
    hit = u < np.asarray(q)[None, :] / 2
    weights = 1 << (n - 1 - np.arange(n))
    return (hit * weights[None, :]).sum(axis=1).astype(np.int64)


def sample_rows(probs, u):
    """One categorical draw per row of ``probs`` using the uniforms ``u``."""
    cdf = np.cumsum(probs, axis=1)
    out = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(out, probs.shape[1] - 1).astype(np.int64)
