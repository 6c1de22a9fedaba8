"""Compare the numba and numpy kernel backends on the hot paths.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once on both backends first, which checks that they agree and
keeps numba's compile time out of the timings. The reported time is the best
of ``--repeat`` runs.
"""
import argparse
import itertools
import timeit

import numpy as np

from blindverify import kernels
from blindverify.bell import bell_settings
from blindverify.mbqc import ClusterGraph


def cases(rng):
    g = ClusterGraph.zigzag4()
    theta8 = np.array(list(itertools.product(range(8), repeat=4)), dtype=np.int64)
    delta8 = np.broadcast_to(np.array([d.eighths for d in bell_settings()["ab"].deltas]), theta8.shape).copy()
    zmeas = np.zeros(4, dtype=np.bool_)
    probs = rng.dirichlet(np.ones(16), size=1_000_000)
    u = rng.random(1_000_000)
    ud = rng.random((1_000_000, 4))
    q = np.full(4, 0.035)
    psi = rng.normal(size=1 << 12) + 1j * rng.normal(size=1 << 12)
    psi /= np.linalg.norm(psi)
    return {
        "pattern_probs_batch (4096 zigzag patterns)": lambda k: k.pattern_probs_batch(theta8, delta8, zmeas, g.edge_array(), 4),
        "sample_rows (1e6 rows x 16)": lambda k: k.sample_rows(probs, u),
        "depolarize_flips (1e6 runs x 4 qubits)": lambda k: k.depolarize_flips(ud, q, 4),
        "pauli_expectation (12 qubits)": lambda k: k.pauli_expectation(psi, 12, 0b101010101010, 0b110011001100),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.numba_backend is None:
        raise SystemExit("numba backend unavailable (BLINDVERIFY_DISABLE_NUMBA set or numba missing)")
    backends = {"numpy": kernels.numpy_backend, "numba": kernels.numba_backend}
    print(f"{'kernel':<45}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in cases(np.random.default_rng(0)).items():
        ref, got = fn(backends["numpy"]), fn(backends["numba"])
        assert np.allclose(ref, got), f"backends disagree on {name}"
        t = {b: 1e3 * min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for b, k in backends.items()}
        print(f"{name:<45}{t['numpy']:>12.2f}{t['numba']:>12.2f}{t['numpy'] / t['numba']:>9.1f}x")


if __name__ == "__main__":
    main()
