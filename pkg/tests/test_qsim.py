import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ospsim import gf2, qsim
from ospsim.qsim import (
    AffineBranchState,
    Basis,
    DenseState,
    TwoBranchState,
    collapse_affine,
    collapse_two_branch,
    fidelity,
    measure,
    projection_norm,
    trace_distance,
)

RS = math.sqrt(0.5)


def test_h_on_zero():
    out = DenseState.from_bits((0,)).apply("H", 0)
    assert np.allclose(out.amplitudes, [RS, RS])


def test_cnot_on_bell_precursor():
    state = DenseState([RS, 0, RS, 0])  # (|00> + |10>)/sqrt2
    out = state.apply("CNOT", 0, 1)
    assert np.allclose(out.amplitudes, [RS, 0, 0, RS])


def test_p_on_plus():
    plus = DenseState([RS, RS])
    out = plus.apply("P", 0)
    assert np.allclose(out.amplitudes, [RS, RS * 1j])


def test_sqrtx_squares_to_x():
    m = qsim.GATES["SQRTX"]
    assert np.allclose(m @ m, qsim.GATES["X"])


def test_gate_errors():
    state = DenseState.from_bits((0, 0))
    with pytest.raises(ValueError):
        state.apply("H", 5)
    with pytest.raises(ValueError):
        state.apply("CNOT", 1, 1)
    with pytest.raises(ValueError):
        state.apply("NOPE", 0)


def test_dense_limit_is_hard():
    with pytest.raises(ValueError):
        DenseState(np.ones(1 << 21) / math.sqrt(1 << 21))


def test_measure_plus_in_z_frequencies():
    rng = np.random.default_rng(11)
    plus = DenseState([RS, RS])
    zeros = 0
    shots = 100_000
    for _ in range(shots):
        bits, _ = measure(plus, (0,), Basis.Z, rng)
        zeros += bits[0] == 0
    assert abs(zeros / shots - 0.5) < 0.01


def test_measure_zero_in_xplusz():
    # Exact Born probability first, then a sampled sanity check.
    v0 = qsim.basis_vector(Basis.XPLUSZ, 0)
    assert abs(abs(v0[0]) ** 2 - math.cos(math.pi / 8) ** 2) < 1e-12
    rng = np.random.default_rng(5)
    hits = 0
    shots = 20_000
    state = DenseState.from_bits((0,))
    for _ in range(shots):
        bits, _ = measure(state, (0,), Basis.XPLUSZ, rng)
        hits += bits[0] == 0
    p = math.cos(math.pi / 8) ** 2
    sigma = math.sqrt(p * (1 - p) / shots)
    assert abs(hits / shots - p) < 4 * sigma


def test_measure_one_in_z_is_deterministic():
    rng = np.random.default_rng(0)
    state = DenseState.from_bits((1,))
    bits, post = measure(state, (0,), Basis.Z, rng)
    assert bits == (1,)
    assert np.allclose(post.amplitudes, [0, 1])


def test_basis_consistency():
    # Measuring H^b|s> in basis b returns s with probability 1.
    rng = np.random.default_rng(3)
    for b in (0, 1):
        for s in (0, 1):
            state = DenseState.from_bits((s,))
            if b:
                state = state.apply("H", 0)
            basis = Basis.X if b else Basis.Z
            for _ in range(20):
                bits, _ = measure(state, (0,), basis, rng)
                assert bits == (s,)


def test_xpz_statistics_on_h_r_s():
    # Measuring H^r|s> in XplusZ returns s with frequency cos^2(pi/8).
    rng = np.random.default_rng(17)
    p = math.cos(math.pi / 8) ** 2
    shots = 100_000
    hits = 0
    for i in range(shots):
        r, s = i & 1, (i >> 1) & 1
        state = DenseState.from_bits((s,))
        if r:
            state = state.apply("H", 0)
        vec = qsim._basis_rotation(Basis.XPLUSZ) @ state.amplitudes
        hits += rng.random() < abs(vec[s]) ** 2
    sigma = math.sqrt(p * (1 - p) / shots)
    assert abs(hits / shots - p) < 3 * sigma


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(sorted(set(qsim.GATES) - {"CNOT"})), st.integers(0, 2)
        ),
        max_size=12,
    )
)
def test_unitarity(word):
    state = DenseState.uniform(3)
    for gate, q in word:
        state = state.apply(gate, q)
    assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-12


# ---------------------------------------------------------------- two-branch


def test_two_branch_basics():
    tb = TwoBranchState(2, (0, 1), (1, 0), -1)
    dense = tb.densify()
    assert abs(np.linalg.norm(dense.amplitudes) - 1) < 1e-12
    assert np.allclose(dense.amplitudes, [0, RS, -RS, 0])
    collapsed = TwoBranchState(2, (1, 1), (1, 1), 1j)
    assert collapsed.is_basis and collapsed.phase == 1


def test_two_branch_rejects_offgrid_phase():
    with pytest.raises(ValueError):
        TwoBranchState(1, (0,), (1,), complex(0.6, 0.8))


def test_collapse_differing_keep_matches_contract():
    # u=(0,0,0), v=(1,1,1), keep last: residual Z^{d.(1,1)}|+>, d uniform.
    rng = np.random.default_rng(123)
    state = TwoBranchState(3, (0, 0, 0), (1, 1, 1), 1)
    seen = set()
    for _ in range(200):
        d, residual = collapse_two_branch(state, 2, rng)
        seen.add(d)
        expected_phase = (-1) ** gf2.dot(d, (1, 1))
        assert residual == qsim.plane_descriptor(expected_phase)
    assert seen == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_collapse_agreeing_keep_factors_out():
    # u=(0,0,1), v=(1,1,1), keep last: residual |1>, d with d.(1,1)=0.
    rng = np.random.default_rng(77)
    state = TwoBranchState(3, (0, 0, 1), (1, 1, 1), 1)
    seen = set()
    for _ in range(100):
        d, residual = collapse_two_branch(state, 2, rng)
        seen.add(d)
        assert residual == qsim.basis_descriptor((1,))
        assert gf2.dot(d, (1, 1)) == 0
    assert seen == {(0, 0), (1, 1)}


def test_collapse_negative_phase_flips_parity():
    rng = np.random.default_rng(78)
    state = TwoBranchState(3, (0, 0, 1), (1, 1, 1), -1)
    for _ in range(50):
        d, _ = collapse_two_branch(state, 2, rng)
        assert gf2.dot(d, (1, 1)) == 1


def test_collapse_basis_state_uniform():
    rng = np.random.default_rng(9)
    state = TwoBranchState(3, (0, 1, 0), (0, 1, 0), 1)
    seen = set()
    for _ in range(200):
        d, residual = collapse_two_branch(state, 0, rng)
        seen.add(d)
        assert residual == qsim.basis_descriptor((0,))
    assert len(seen) == 4


def test_collapse_width_error():
    with pytest.raises(ValueError):
        collapse_two_branch(TwoBranchState(1, (0,), (1,), 1), 0, np.random.default_rng(0))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 5),
    st.integers(0, 2**31 - 1),
    st.sampled_from([1, -1, 1j, -1j]),
)
def test_collapse_two_branch_matches_dense(width, seed, phase):
    rng = np.random.default_rng(seed)
    u = tuple(rng.integers(0, 2, width))
    v = tuple(rng.integers(0, 2, width))
    keep = int(rng.integers(0, width))
    state = TwoBranchState(width, u, v, phase if u != v else 1)
    # Structured sample.
    d, residual = collapse_two_branch(state, keep, np.random.default_rng(seed + 1))
    # The dense reference must assign the observed (d, residual) a positive
    # probability with exactly the claimed residual.
    others = [i for i in range(width) if i != keep]
    dense = state.densify()
    # Project others onto the X-basis outcome d by hand and compare.
    vec = dense.amplitudes.reshape((2,) * width)
    proj = np.zeros(2, dtype=complex)
    for idx in range(1 << width):
        bits = gf2.int_to_bits(idx, width)
        amp = vec[bits]
        if abs(amp) < 1e-12:
            continue
        other_bits = tuple(bits[i] for i in others)
        sign = (-1) ** gf2.dot(other_bits, d)
        proj[bits[keep]] += amp * sign
    norm = np.linalg.norm(proj)
    assert norm > 1e-9, "structured sampler produced a zero-probability d"
    assert fidelity(DenseState(proj / norm), residual) > 1 - 1e-9


# ------------------------------------------------------------------- affine


def test_affine_product_case():
    state = AffineBranchState(2, (), (1, 0), (1, 0))
    rng = np.random.default_rng(1)
    seen = set()
    for _ in range(100):
        d, bit = collapse_affine(state, rng)
        seen.add(d)
        assert bit == 0
    assert len(seen) == 4  # uniform over all strings


def test_affine_span_example():
    state = AffineBranchState(2, ((1, 1),), (0, 0), (1, 0))
    rng = np.random.default_rng(2)
    seen = set()
    for _ in range(100):
        d, bit = collapse_affine(state, rng)
        seen.add(d)
        assert bit == gf2.dot(d, (1, 0))
    assert seen == {(0, 0), (1, 1)}


def test_affine_three_bit_example():
    state = AffineBranchState(3, ((1, 0, 0), (0, 1, 0)), (0, 0, 0), (0, 0, 1))
    rng = np.random.default_rng(3)
    seen = set()
    for _ in range(100):
        d, bit = collapse_affine(state, rng)
        seen.add(d)
        assert bit == d[2]
    assert seen == {(0, 0, 0), (0, 0, 1)}


def test_affine_dependent_rows_normalized():
    state = AffineBranchState(3, ((1, 1, 0), (1, 1, 0)), (0,) * 3, (1, 1, 1))
    assert state.dimension == 1


def test_affine_densify_matches_definition():
    state = AffineBranchState(2, ((0, 1),), (1, 0), (0, 0))
    dense = state.densify()
    # branch 0: |1,10>,|1,11> ... branch qubit first then 2-bit register
    expected = np.zeros(8)
    for bits in [(0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 0, 1)]:
        expected[gf2.bits_to_int(bits)] = 0.5
    assert np.allclose(dense.amplitudes, expected)


def test_affine_matches_dense_oracle():
    rng = np.random.default_rng(10)
    state = AffineBranchState(3, ((1, 1, 0),), (0, 0, 1), (1, 0, 0))
    # Exact outcome set from dense Hadamard measurement of the register part.
    dense = state.densify()  # 4 qubits, branch first
    counts = {}
    for _ in range(400):
        d, bit = collapse_affine(state, rng)
        counts[(d, bit)] = counts.get((d, bit), 0) + 1
        # residual claim: register measurement of densified state in X basis
        # can produce d, and the branch qubit is then Z^bit|+>.
        vec = dense.amplitudes.reshape((2,) * 4)
        proj = np.zeros(2, dtype=complex)
        for idx in range(16):
            bits = gf2.int_to_bits(idx, 4)
            amp = vec[bits]
            if abs(amp) < 1e-12:
                continue
            sign = (-1) ** gf2.dot(bits[1:], d)
            proj[bits[0]] += amp * sign
        norm = np.linalg.norm(proj)
        assert norm > 1e-9
        target = qsim.plane_descriptor(-1 if bit else 1)
        assert fidelity(DenseState(proj / norm), target) > 1 - 1e-9
    # d uniform over the dual set {d : d.(1,1,0)=0}, 4 elements
    assert len({d for d, _ in counts}) == 4


# ---------------------------------------------------------------- distances


def test_trace_distance_identical():
    z = DenseState.from_bits((0,))
    assert trace_distance(z, z) < 1e-12


def test_trace_distance_orthogonal():
    a = DenseState.from_bits((0,))
    b = DenseState.from_bits((1,))
    assert abs(trace_distance(a, b) - 1) < 1e-12


def test_trace_distance_zero_plus():
    a = DenseState.from_bits((0,))
    b = DenseState([RS, RS])
    assert abs(trace_distance(a, b) - RS) < 1e-12
    # closed form sqrt(1 - |<a|b>|^2)
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    assert abs(trace_distance(a, b) - math.sqrt(1 - overlap)) < 1e-12


def test_trace_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        trace_distance(DenseState.from_bits((0,)), DenseState.from_bits((0, 0)))


# ----------------------------------------------------------- projection norm


def test_projection_norm_osp_eigenstate():
    rec = SimpleNamespace(s=0, b=1, receiver_state=DenseState([RS, RS]))
    assert abs(projection_norm(rec, "OSP") - 1.0) < 1e-12


def test_projection_norm_osp_partial():
    rec = SimpleNamespace(s=0, b=1, receiver_state=DenseState.from_bits((0,)))
    assert abs(projection_norm(rec, "OSP") - RS) < 1e-12


def test_projection_norm_csg_exact():
    claw = TwoBranchState(3, (0, 1, 0), (1, 1, 1), 1)
    rec = SimpleNamespace(x0=(0, 1, 0), x1=(1, 1, 1), z=0, receiver_state=claw)
    assert abs(projection_norm(rec, "CSG") - 1.0) < 1e-12
    rec_z = SimpleNamespace(
        x0=(0, 1, 0),
        x1=(1, 1, 1),
        z=1,
        receiver_state=TwoBranchState(3, (0, 1, 0), (1, 1, 1), -1),
    )
    assert abs(projection_norm(rec_z, "CSG") - 1.0) < 1e-12


def test_projection_norm_dbcsg():
    claw = TwoBranchState(3, (0, 0, 1), (1, 1, 0), 1)
    rec = SimpleNamespace(x0=(0, 1), x1=(1, 0), z=0, receiver_state=claw)
    assert abs(projection_norm(rec, "DBCSG") - 1.0) < 1e-12


def test_projection_norm_degenerate_claw_is_zero():
    claw = TwoBranchState(2, (0, 1), (0, 1), 1)
    rec = SimpleNamespace(x0=(0, 1), x1=(0, 1), z=0, receiver_state=claw)
    assert projection_norm(rec, "CSG") == 0.0


# ------------------------------------------------------------------ helpers


def test_apply_bit_function():
    state = DenseState.uniform(2)
    out = qsim.apply_bit_function(state, (0, 1), lambda bits: bits[0] ^ bits[1], 1)
    for idx in range(8):
        b = gf2.int_to_bits(idx, 3)
        expected = 0.5 if b[2] == b[0] ^ b[1] else 0.0
        assert abs(abs(out.amplitudes[idx]) - expected) < 1e-12


def test_drop_qubits():
    state = DenseState.from_bits((1, 0, 1))
    out = qsim.drop_qubits(state, (0, 2), (1, 1))
    assert out.num_qubits == 1
    assert np.allclose(out.amplitudes, [1, 0])
    with pytest.raises(ValueError):
        qsim.drop_qubits(DenseState.uniform(2), (0,), (0,))


def test_dense_to_two_branch_roundtrip():
    tb = TwoBranchState(3, (0, 0, 1), (1, 1, 0), 1j)
    back = qsim.dense_to_two_branch(tb.densify())
    assert back == tb
    with pytest.raises(ValueError):
        qsim.dense_to_two_branch(DenseState.uniform(2))


def test_apply_1q_descriptor():
    assert qsim.apply_1q(qsim.basis_descriptor((0,)), "H") == qsim.plane_descriptor(1)
    assert qsim.apply_1q(qsim.basis_descriptor((1,)), "H") == qsim.plane_descriptor(-1)
    assert qsim.apply_1q(qsim.plane_descriptor(1), "H") == qsim.basis_descriptor((0,))
    # sqrtX fixes the X-plane and maps |0>,|1> to the Y-plane
    assert qsim.apply_1q(qsim.basis_descriptor((0,)), "SQRTX") == qsim.plane_descriptor(1j)
    assert qsim.apply_1q(qsim.basis_descriptor((1,)), "SQRTX") == qsim.plane_descriptor(-1j)
    assert qsim.apply_1q(qsim.plane_descriptor(1), "SQRTX") == qsim.plane_descriptor(1)


def test_measure_descriptor():
    rng = np.random.default_rng(4)
    assert qsim.measure_descriptor(qsim.basis_descriptor((1,)), Basis.Z, rng) == 1
    assert qsim.measure_descriptor(qsim.plane_descriptor(-1), Basis.X, rng) == 1
    assert qsim.measure_descriptor(qsim.plane_descriptor(1j), Basis.Y, rng) == 0
