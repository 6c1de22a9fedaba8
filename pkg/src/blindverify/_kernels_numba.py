"""Loop-level kernels compiled with numba. Same contracts as ``_kernels_numpy``."""
import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def apply_1q(psi, n, q, u):
    stride = 1 << (n - 1 - q)
    dim = psi.shape[0]
    u00, u01, u10, u11 = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
    for base in range(0, dim, 2 * stride):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = u00 * a0 + u01 * a1
            psi[i1] = u10 * a0 + u11 * a1
    return psi


@njit(**_OPTS)
def apply_cz(psi, n, a, b):
    ma = 1 << (n - 1 - a)
    mb = 1 << (n - 1 - b)
    for i in range(psi.shape[0]):
        if (i & ma) and (i & mb):
            psi[i] = -psi[i]
    return psi


@njit(**_OPTS)
def _popcount1(x):
    c = 0
    while x:
        c += x & 1
        x >>= 1
    return c


@njit(**_OPTS)
def apply_pauli_masks(psi, n, xmask, zmask):
    dim = psi.shape[0]
    out = np.empty_like(psi)
    phase = 1j ** _popcount1(xmask & zmask)
    for j in range(dim):
        s = -1.0 if _popcount1(j & zmask) & 1 else 1.0
        out[j ^ xmask] = s * phase * psi[j]
    psi[:] = out
    return psi


@njit(**_OPTS)
def pauli_expectation(psi, n, xmask, zmask):
    acc = 0.0 + 0.0j
    phase = 1j ** _popcount1(xmask & zmask)
    for j in range(psi.shape[0]):
        s = -1.0 if _popcount1(j & zmask) & 1 else 1.0
        acc += np.conj(psi[j ^ xmask]) * s * phase * psi[j]
    return acc.real


@njit(**_OPTS)
def masked_parity(values, mask):
    out = np.empty(values.shape[0], dtype=np.int64)
    for i in range(values.shape[0]):
        out[i] = _popcount1(values[i] & mask) & 1
    return out


@njit(**_OPTS)
def sample_from_cdf(cdf, u):
    out = np.empty(u.shape[0], dtype=np.int64)
    last = cdf.shape[0] - 1
    for i in range(u.shape[0]):
        lo, hi = 0, last
        x = u[i]
        while lo < hi:
            mid = (lo + hi) // 2
            if cdf[mid] > x:
                hi = mid
            else:
                lo = mid + 1
        out[i] = lo
    return out


@njit(**_OPTS)
def pattern_probs_batch(theta8, delta8, zmeas, edges, n):
    N = theta8.shape[0]
    dim = 1 << n
    probs = np.empty((N, dim))
    amps = np.empty(dim, dtype=np.complex128)
    norm = 1.0 / np.sqrt(dim)
    inv2 = 1.0 / np.sqrt(2.0)
    w = np.pi / 4
    for s in range(N):
        for j in range(dim):
            ph = 0
            sign = 1.0
            for k in range(n):
                if (j >> (n - 1 - k)) & 1:
                    ph += theta8[s, k]
            for e in range(edges.shape[0]):
                a = edges[e, 0]
                b = edges[e, 1]
                if ((j >> (n - 1 - a)) & 1) and ((j >> (n - 1 - b)) & 1):
                    sign = -sign
            amps[j] = sign * norm * np.exp(1j * w * ph)
        # rotate each qubit to its readout frame: row b of the bra is
        # (1, (-1)^b e^{-i delta})/sqrt2, or the identity for Z readout
        for q in range(n):
            if zmeas[q]:
                continue
            e_ = np.exp(-1j * w * delta8[s, q])
            stride = 1 << (n - 1 - q)
            for base in range(0, dim, 2 * stride):
                for off in range(stride):
                    i0 = base + off
                    i1 = i0 + stride
                    a0 = amps[i0]
                    a1 = amps[i1]
                    amps[i0] = (a0 + e_ * a1) * inv2
                    amps[i1] = (a0 - e_ * a1) * inv2
        for j in range(dim):
            probs[s, j] = amps[j].real ** 2 + amps[j].imag ** 2
    return probs


@njit(**_OPTS)
def sample_pauli_flips(u, cumw, flipmasks):
    out = np.empty(u.shape[0], dtype=np.int64)
    last = cumw.shape[0] - 1
    for i in range(u.shape[0]):
        k = 0
        while k < last and cumw[k] <= u[i]:
            k += 1
        out[i] = flipmasks[k]
    return out


@njit(**_OPTS)
def depolarize_flips(u, q, n):
    out = np.zeros(u.shape[0], dtype=np.int64)
    for i in range(u.shape[0]):
        m = 0
        for k in range(n):
            if u[i, k] < q[k] / 2:
                m |= 1 << (n - 1 - k)
        out[i] = m
    return out


@njit(**_OPTS)
def sample_rows(probs, u):
    N, d = probs.shape
    out = np.empty(N, dtype=np.int64)
    for i in range(N):
        acc = 0.0
        k = 0
        while k < d - 1:
            acc += probs[i, k]
            if acc > u[i]:
                break
            k += 1
        out[i] = k
    return out
