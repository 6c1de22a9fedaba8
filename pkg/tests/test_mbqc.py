from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blindverify.adversary import FixedPauli
from blindverify.angles import Angle, Z_BASIS, angles
from blindverify.mbqc import (
    ClusterGraph, Layout, PatternSpec, bits_to_int, build_cluster, decoded_distribution, execute_pattern,
    expected_honest_distribution, int_to_bits, pattern_distribution, sample_pattern, total_variation, zigzag_circuit,
)
from blindverify.states import InvalidInput, fidelity

grid4 = st.tuples(*[st.integers(0, 7)] * 4)
bits4 = st.tuples(*[st.integers(0, 1)] * 4)


def test_layouts_share_path_edges():
    for g in (ClusterGraph.linear4(), ClusterGraph.horseshoe4(), ClusterGraph.zigzag4()):
        assert g.edges == ((0, 1), (1, 2), (2, 3))
    assert ClusterGraph.zigzag4().layout is Layout.ZIGZAG4


def test_graph_validation_and_json():
    with pytest.raises(InvalidInput):
        ClusterGraph.custom(3, [(0, 0)])
    with pytest.raises(InvalidInput):
        ClusterGraph.custom(3, [(0, 3)])
    g = ClusterGraph.custom(3, [(2, 1), (0, 1)])
    assert ClusterGraph.from_json(g.to_json()) == g


def test_pattern_validation():
    g = ClusterGraph.zigzag4()
    with pytest.raises(InvalidInput):
        PatternSpec(g, angles(0, 0, 0), angles(0, 0, 0, 0))
    with pytest.raises(InvalidInput):
        PatternSpec(g, angles(0, 0, 0, 0), angles(0, 0, 0, 0), measurement_order=(0, 0, 1, 2))
    with pytest.raises(InvalidInput):
        PatternSpec(g, angles(0, 0, 0, 0), (Z_BASIS,) + angles(0, 0, 0), r_bits=(1, 0, 0, 0))
    with pytest.raises(InvalidInput):
        PatternSpec(g, angles(0, 0, 0, 0), angles(1, 0, 0, 0), phis=angles(0, 0, 0, 0))


@given(grid4, grid4, bits4)
def test_delta_relation(thetas, phis, r):
    spec = PatternSpec.from_phis(ClusterGraph.zigzag4(), thetas, phis, r)
    assert spec.implied_phis() == angles(*phis)
    for t, f, d, rb in zip(thetas, phis, spec.deltas, r):
        assert d == Angle(t + f + 4 * rb)


def test_json_round_trip():
    spec = PatternSpec(ClusterGraph.zigzag4(), angles(0, 2, 3, 0), (Angle(2), Z_BASIS, Angle(0), Angle(6)),
                       r_bits=(1, 0, 0, 1), measurement_order=(3, 2, 1, 0))
    back = PatternSpec.from_json(spec.to_json())
    assert back == spec
    assert spec.to_json()["measurement_order"] == [4, 3, 2, 1]


def test_bit_packing():
    for v in range(16):
        assert bits_to_int(int_to_bits(v, 4)) == v
    assert bits_to_int((1, 0, 0, 0)) == 8


def test_edge_order_independence():
    th = angles(1, 3, 5, 7)
    a = build_cluster(ClusterGraph.custom(4, [(0, 1), (1, 2), (2, 3)]), th)
    b = build_cluster(ClusterGraph.custom(4, [(3, 2), (0, 1), (2, 1)]), th)
    assert fidelity(a, b) > 1 - 1e-12


def test_single_vertex_pattern():
    spec = PatternSpec(ClusterGraph.custom(1, []), angles(0), angles(0))
    assert np.allclose(expected_honest_distribution(spec), [1, 0])


@given(grid4, grid4, st.permutations(range(4)))
def test_exact_paths_agree_and_order_free(thetas, deltas, order):
    g = ClusterGraph.zigzag4()
    spec = PatternSpec(g, thetas, deltas, measurement_order=tuple(order))
    rec = expected_honest_distribution(spec)
    assert total_variation(rec, pattern_distribution(spec)) < 1e-12
    assert total_variation(rec, expected_honest_distribution(PatternSpec(g, thetas, deltas))) < 1e-12


@given(grid4, grid4)
def test_zigzag_circuit_equivalence(thetas, deltas):
    spec = PatternSpec(ClusterGraph.zigzag4(), thetas, deltas)
    assert total_variation(zigzag_circuit(angles(*thetas), angles(*deltas)).distribution, expected_honest_distribution(spec)) < 1e-9


def test_z_readout_in_kernel_path():
    g = ClusterGraph.zigzag4()
    spec = PatternSpec(g, angles(0, 3, 0, 5), (Angle(1), Z_BASIS, Angle(6), Z_BASIS))
    assert total_variation(pattern_distribution(spec), expected_honest_distribution(spec)) < 1e-12


def test_size_cap():
    g = ClusterGraph.custom(11, [(i, i + 1) for i in range(10)])
    with pytest.raises(InvalidInput):
        expected_honest_distribution(PatternSpec(g, angles(*[0] * 11), angles(*[0] * 11)))


def test_decoded_bits_are_raw_xor_r():
    spec = PatternSpec(ClusterGraph.zigzag4(), angles(0, 2, 3, 0), angles(2, 6, 0, 2), r_bits=(0, 1, 0, 1))
    rng = np.random.default_rng(3)
    for _ in range(20):
        out = execute_pattern(spec, rng=rng)
        assert out.decoded_bits == tuple(b ^ r for b, r in zip(out.raw_bits, spec.r_bits))
    dec = decoded_distribution(spec)
    raw = pattern_distribution(spec)
    assert dec[0] == raw[spec.r_mask]


def test_execute_pattern_matches_exact_distribution():
    spec = PatternSpec(ClusterGraph.zigzag4(), angles(0, 2, 3, 0), angles(2, -2, 0, -2), measurement_order=(3, 1, 0, 2))
    rng = np.random.default_rng(11)
    n = 3000
    counts = Counter(bits_to_int(execute_pattern(spec, rng=rng).raw_bits) for _ in range(n))
    emp = np.array([counts[i] for i in range(16)]) / n
    assert total_variation(emp, expected_honest_distribution(spec)) < 0.05


def test_zzzz_deviation_is_invisible():
    spec = PatternSpec(ClusterGraph.zigzag4(), angles(0, 2, 3, 0), angles(2, -2, 0, -2))
    rng = np.random.default_rng(5)
    a = sample_pattern(spec, 5000, np.random.default_rng(9))
    b = sample_pattern(spec, 5000, np.random.default_rng(9), FixedPauli("ZZZZ"))
    assert np.array_equal(a, b)
    out = execute_pattern(spec, FixedPauli("ZZZZ"), rng)
    assert len(out.raw_bits) == 4


def test_product_branch_lower_input():
    # theta4 - delta4 = 0 puts |0> on the lower wire: no entanglement
    res = zigzag_circuit(angles(0, 0, 0, 3), angles(0, 0, 0, 3))
    psi = res.logical_state.amplitudes.reshape(2, 2)
    assert np.linalg.matrix_rank(psi, tol=1e-9) == 1
    with pytest.raises(InvalidInput):
        zigzag_circuit(angles(0, 0, 0), angles(0, 0, 0, 0))
