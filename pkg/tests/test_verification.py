import itertools
import json
from collections import Counter
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from blindverify import verification as ver
from blindverify.adversary import HONEST, FixedPauli, PauliChannel, PreMeasureUnitary, deviated_distribution
from blindverify.angles import Angle, angles
from blindverify.bell import bell_settings
from blindverify.mbqc import ClusterGraph, PatternSpec, build_cluster, execute_pattern
from blindverify.pauli import PauliString, all_pauli_strings, expectation
from blindverify.states import InvalidInput

COMP = bell_settings()["ab"].computation()


def pass_probability(spec, model):
    total = 0.0
    for r_trap in (0, 1):
        pat = spec.pattern(r_trap)
        dist = deviated_distribution(pat, model)
        m = np.arange(16) ^ pat.r_mask
        ok = (np.bitwise_count(m & spec.support_mask) & 1) == spec.expected_parity
        total += 0.5 * dist[ok].sum()
    return total


def test_catalog_shape():
    cat = ver.trap_catalog()
    assert len(cat) == 8
    assert [e.trap_index for e in cat] == [1, 1, 2, 2, 3, 3, 4, 4]
    e = ver.catalog_entry("trap2-plus_i")
    assert e.thetas == angles(0, 0, 0, 0) and e.deltas == angles(2, 2, 0, 0)
    e = ver.catalog_entry("trap3-rz3")
    assert e.thetas[2] == Angle(5) and (e.deltas[0], e.deltas[1], e.deltas[3]) == angles(4, -2, 2)
    with pytest.raises(InvalidInput):
        ver.catalog_entry("trap9")


def test_fixture_matches_oracle():
    assert ver.check_fixture() == []
    doc = json.loads(resources.files("blindverify").joinpath("data/trap_parities.json").read_text())
    assert doc == ver.fixture_document()


def test_catalog_honest_pass_is_exact():
    for spec in ver.trap_catalog():
        assert pass_probability(spec, HONEST) == pytest.approx(1, abs=1e-12)


def test_honest_shot_by_shot_never_fails():
    rng = np.random.default_rng(1)
    for spec in ver.trap_catalog():
        for _ in range(40):
            pat = spec.pattern(int(rng.integers(2)))
            out = execute_pattern(pat, rng=rng)
            t = ver.RunTranscript(spec, pat, out, ver.Verdict.NOT_APPLICABLE)
            assert ver.check_trap(t) is ver.Verdict.PASS


def test_first_trap_row_over_1000_runs():
    spec = ver.catalog_entry("trap1-minus_i")
    assert spec.thetas == angles(0, 2, 0, 0) and spec.deltas[1:] == angles(-2, 4, -2)
    rng = np.random.default_rng(77)
    for _ in range(1000):
        pat = spec.pattern(int(rng.integers(2)))
        out = execute_pattern(pat, rng=rng)
        assert spec.parity(out.decoded_bits) == spec.expected_parity


def test_check_trap_on_computation_is_na():
    out = execute_pattern(COMP.pattern, rng=np.random.default_rng(0))
    t = ver.RunTranscript(None, COMP.pattern, out, ver.Verdict.NOT_APPLICABLE)
    assert ver.check_trap(t) is ver.Verdict.NOT_APPLICABLE
    assert t.kind == "computation"


def test_deviation_examples():
    t4 = ver.catalog_entry("trap4-minus")
    assert pass_probability(t4, FixedPauli("XIII")) == pytest.approx(0)
    for spec in ver.trap_catalog():
        assert pass_probability(spec, FixedPauli("XIIX")) == pytest.approx(1)


def test_trap_support_matches_outcome_table():
    # every realized stabilizer support is one of the table's trap-outcome sets
    table_sets = set(ver.OUTCOME_SUPPORT.values())
    for spec in ver.trap_catalog():
        assert spec.support in table_sets
        assert spec.trap_qubit in spec.support
    assert ver.OUTCOME_SUPPORT[4] == (0, 1, 3)


def test_catalog_delta_relation_and_phi_table():
    phi_rows = {s.letters: ver.PHI_BY_INDEX[i] for i, s in ver.STABILIZER_BY_INDEX.items()}
    for spec in ver.trap_catalog():
        sols = ver.recover_grid_phis(spec.thetas, spec.deltas)
        assert sols
        want = phi_rows[spec.stabilizer.letters]
        for q in spec.support:
            if q == spec.trap_qubit:
                continue
            assert spec.phis[q].eighths % 4 == want[q] % 4


def test_sample_rows_realize_their_stabilizers():
    """Sample (theta, delta) rows: deterministic parity on the listed outcome set."""
    g = ClusterGraph.zigzag4()
    for idx, (th, de) in ver.SAMPLE_ROWS.items():
        pat = PatternSpec(g, angles(*th), angles(*de))
        dist = deviated_distribution(pat, HONEST)
        mask = sum(1 << (3 - q) for q in ver.OUTCOME_SUPPORT[idx])
        par = np.bitwise_count(np.arange(16) & mask) & 1
        p1 = dist[par == 1].sum()
        assert min(p1, 1 - p1) < 1e-12
        phis = [(d - t) % 8 for t, d in zip(th, de)]
        assert [p % 4 for p in phis] == [p % 4 for p in ver.PHI_BY_INDEX[idx]]


def test_stabilizers_of_path_cluster():
    g = ClusterGraph.zigzag4()
    cluster = build_cluster(g, angles(0, 0, 0, 0))
    for s in ver.STABILIZERS:
        assert expectation(cluster, s) == pytest.approx(1, abs=1e-10)


def test_dummyprep_matches_stabilizer():
    """Isolating measurements on the theta=0 cluster measure the table stabilizer."""
    cluster = build_cluster(ClusterGraph.zigzag4(), angles(0, 0, 0, 0))
    letter_for = {"X": "X", "Y": "Y", "s": "I", "": None}
    for idx, ops in ver.DUMMYPREP.items():
        stab = ver.STABILIZER_BY_INDEX[idx]
        # the trap qubit is then read out in its own prepared basis; the stabilizer's
        # letter there is what the trap state's phase encodes
        letters = "".join(stab.letters[q] if ops[q] == "" else letter_for[ops[q]] for q in range(4))
        assert letters == stab.letters
        assert expectation(cluster, PauliString(letters)) == pytest.approx(1, abs=1e-10)


def _projected_trap_state(thetas, deltas, trap, m):
    from blindverify.states import readout_rotation
    st_ = build_cluster(ClusterGraph.zigzag4(), angles(*thetas))
    t = np.array(st_.amplitudes).reshape(2, 2, 2, 2)
    for j in range(4):
        if j == trap:
            continue
        rot = readout_rotation(Angle(deltas[j]))
        t = np.moveaxis(np.tensordot(rot, np.moveaxis(t, j, 0), axes=([1], [0])), 0, j)
        sl = [slice(None)] * 4
        sl[j] = slice(m[j], m[j] + 1)
        t = t[tuple(sl)]
    v = t.reshape(-1)
    return v / np.linalg.norm(v)


def test_expected_trap_state_formula_and_table():
    th, de = (0, 2, 4, 0), (-2, 0, 0, 0)
    for m in itertools.product((0, 1), repeat=3):
        got = ver.expected_trap_state(4, angles(*th), angles(*de), m + (0,))
        want = _projected_trap_state(th, de, 3, m + (0,))
        assert abs(np.vdot(got.amplitudes, want)) ** 2 == pytest.approx(1, abs=1e-12)
    ops_delta = {"X": 0, "Y": 2, "s": 0}
    for idx, ops in ver.DUMMYPREP.items():
        de = tuple(0 if o == "" else ops_delta[o] for o in ops)
        for m in itertools.product((0, 1), repeat=4):
            got = ver.expected_trap_state(idx, angles(0, 0, 0, 0), angles(*de), m)
            want = _projected_trap_state((0, 0, 0, 0), de, idx - 1, m)
            assert abs(np.vdot(got.amplitudes, want)) ** 2 == pytest.approx(1, abs=1e-12)


def test_expected_trap_state_first_row_sign():
    # trap 1 with sigma, Y, Y: |+_{(m3 xor m4) pi}>
    s = ver.expected_trap_state(1, angles(0, 0, 0, 0), angles(0, 0, 2, 2), (0, 0, 1, 0))
    assert np.allclose(s.amplitudes, np.array([1, -1]) / np.sqrt(2))
    with pytest.raises(InvalidInput):
        ver.expected_trap_state(2, angles(0, 0, 0, 0), angles(0, 0, 2, 2), (0, 0, 0, 0))
    with pytest.raises(InvalidInput):
        ver.expected_trap_state(5, angles(0, 0, 0, 0), angles(0, 0, 0, 0), (0, 0, 0, 0))


def test_classify():
    assert str(ver.classify_pauli("IIII")) == "CCCC"
    assert str(ver.classify_pauli("XIIX")) == "ACCA"
    assert str(ver.classify_pauli("ZXYI")) == "CAAC"
    with pytest.raises(InvalidInput):
        ver.classify_pauli("XI")
    counts = Counter(str(ver.classify_pauli(p)) for p in all_pauli_strings(4))
    assert len(counts) == 16 and set(counts.values()) == {16}


def test_detection_table_equals_reference():
    table = ver.detection_table()
    assert table == ver.REFERENCE_DETECTION_TABLE
    C = ver.CommutationClass
    assert table[C("CCCC")].passes == (True, True, True)
    assert table[C("ACCA")].passes == (True, True, True)
    assert table[C("CCCA")].passes == (False, False, False)


def test_detection_matches_stabilizer_commutation():
    """Readout-flip parity equals Pauli anticommutation with the Z-rotated stabilizer frame."""
    for p in all_pauli_strings(4):
        cls = ver.classify_pauli(p)
        for s in ver.STABILIZERS:
            # a deviation letter anticommutes with the Z readout iff it is X or Y
            zframe = PauliString("".join("Z" if c != "I" else "I" for c in s.letters))
            assert ver.flips_fail(p.flipmask, s) == (not p.commutes_with(zframe))
            assert ver.flips_fail(cls.mask, s) == ver.flips_fail(p.flipmask, s)


def test_undetected_set():
    und = ver.undetected_strings()
    assert len(und) == 32
    assert {str(ver.classify_pauli(p)) for p in und} == {"CCCC", "ACCA"}


def test_epsilon_bound_examples():
    assert ver.epsilon_bound(0.0, 0.5) == 0
    assert ver.epsilon_bound(0.05, 0.5) == pytest.approx(0.4)
    assert ver.epsilon_bound(0.3, mode="individual", n=4) == 1.0
    with pytest.raises(InvalidInput):
        ver.epsilon_bound(0.1, 0.0)
    with pytest.raises(InvalidInput):
        ver.epsilon_bound(0.1, 0.5, mode="other")


def test_wilson_interval():
    lo, hi = ver.wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    assert ver.wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = ver.wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_schedule_runs():
    rng = np.random.default_rng(4)
    assert all(r.is_trap for r in ver.schedule_runs(200, 1.0, rng))
    runs = ver.schedule_runs(10_000, 0.5, np.random.default_rng(5))
    k = sum(r.is_trap for r in runs)
    assert abs(k - 5000) < 3 * np.sqrt(2500)
    idx = np.bincount([r.trap.trap_index for r in runs if r.is_trap], minlength=5)[1:]
    assert chisquare(idx).pvalue > 0.05
    a = [r.trap.name if r.trap else None for r in ver.schedule_runs(50, 0.5, np.random.default_rng(9))]
    b = [r.trap.name if r.trap else None for r in ver.schedule_runs(50, 0.5, np.random.default_rng(9))]
    assert a == b
    with pytest.raises(InvalidInput):
        ver.schedule_runs(10, 0.0, rng)
    with pytest.raises(InvalidInput):
        ver.schedule_runs(0, 0.5, rng)


def test_stabilizer_trap_choice_is_uniform_over_stabilizers():
    w = ver.trap_choice_weights("stabilizer")
    assert all(v == pytest.approx(1 / 3) for v in w.values())
    runs = ver.schedule_runs(30_000, 1.0, np.random.default_rng(1), trap_choice="stabilizer")
    c = Counter(r.trap.stabilizer.letters for r in runs)
    assert chisquare(list(c.values())).pvalue > 0.01
    assert sum(ver.trap_choice_weights("catalog").values()) == pytest.approx(1)
    assert min(ver.trap_choice_weights("catalog").values()) >= 0.25


def test_parity_computation_validation():
    pat = COMP.pattern
    with pytest.raises(InvalidInput):
        ver.ParityComputation(pat, ((0, 1),))
    with pytest.raises(InvalidInput):
        ver.ParityComputation(pat, ())
    ok = ver.ParityComputation(pat, ((0, 3), (1,)))
    assert ok.output_masks == (0b1001, 0b0100)


def test_honest_session():
    res = ver.run_verified_session(2000, 0.5, COMP, HONEST, rng=3)
    rep = res.report
    assert rep.num_trap_failures == 0 and rep.t_avg == 0
    assert rep.epsilon_bound == pytest.approx(4 * ver.wilson_interval(0, rep.num_traps)[1] / 0.5)
    assert rep.empirical_epsilon == 0
    trs = res.transcripts()
    assert len(trs) == 2000
    for t in trs[:200]:
        assert t.outcome.decoded_bits == tuple(b ^ r for b, r in zip(t.outcome.raw_bits, t.pattern.r_bits))
        assert ver.check_trap(t) == t.verdict
        if t.trap is not None:
            assert t.pattern.implied_phis() == t.trap.phis


def test_session_reblinding_keeps_phi():
    res = ver.run_verified_session(500, 1.0, COMP, HONEST, rng=8, full_blindness=True)
    thetas = {tuple(t.eighths for t in tr.pattern.thetas) for tr in res.transcripts()}
    assert len(thetas) > 100
    for tr in res.transcripts()[:100]:
        assert tr.pattern.implied_phis() == tr.trap.phis


def test_session_examples():
    ch = PauliChannel.from_dict({"XIII": 0.1, "IIII": 0.9})
    ok = 0
    for seed in range(100):
        rep = ver.run_verified_session(2000, 0.5, COMP, ch, rng=seed).report
        ok += rep.empirical_epsilon <= rep.epsilon_bound
    assert ok >= 95
    rep = ver.run_verified_session(3000, 0.5, COMP, FixedPauli("XIIX"), rng=1).report
    assert rep.t_avg == 0 and rep.num_computation_errors == 0


def test_session_unitary_and_errors():
    rep = ver.run_verified_session(300, 0.5, COMP, PreMeasureUnitary.from_pauli("XIII"), rng=2).report
    assert rep.t_avg == 1.0 and rep.empirical_epsilon is None
    with pytest.raises(InvalidInput):
        ver.run_verified_session(10, 0.5, COMP.pattern, HONEST)
    rep = ver.run_verified_session(5, 1e-9, COMP, HONEST, rng=0).report
    assert rep.num_traps == 0 and rep.t_avg is None and rep.epsilon_bound == 1.0


def test_session_seed_determinism():
    ch = PauliChannel.from_dict({"YIII": 0.2, "IIII": 0.8})
    a = ver.run_verified_session(1000, 0.5, COMP, ch, rng=42)
    b = ver.run_verified_session(1000, 0.5, COMP, ch, rng=42)
    assert a.report == b.report and np.array_equal(a.raw, b.raw)


def test_transcript_json():
    res = ver.run_verified_session(20, 0.5, COMP, HONEST, rng=3)
    for t in res.transcripts():
        doc = t.to_json()
        assert set(doc) >= {"kind", "thetas", "deltas", "r", "b", "m", "verdict"}
        assert all(0 <= x < 8 for x in doc["thetas"] + doc["deltas"])


@given(st.integers(0, 2 ** 32 - 1))
def test_individual_trap_bound(seed):
    rng = np.random.default_rng(seed)
    ch = PauliChannel.random(rng, support=int(rng.integers(2, 9)))
    r = ver.individual_trap_rates(ch)
    assert r.epsilon <= r.n * r.t_avg + 1e-12
    q, _ = np.linalg.qr(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    r = ver.individual_trap_rates(PreMeasureUnitary(q))
    assert r.epsilon <= r.n * r.t_avg + 1e-12


def test_individual_trap_rates_agree_for_pauli_unitary():
    a = ver.individual_trap_rates(FixedPauli("XYII"))
    b = ver.individual_trap_rates(PreMeasureUnitary.from_pauli("XYII"))
    assert a.epsilon == pytest.approx(b.epsilon) and a.t_avg == pytest.approx(b.t_avg)
    assert a.t_avg == pytest.approx(0.5)
