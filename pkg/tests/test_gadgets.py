"""Tests for the teleported phase and switchable-CNOT gadgets."""

import numpy as np
import pytest

from ospsim import gadgets, gf2, osp, qsim


def rng_for(seed):
    return np.random.default_rng(seed)


def random_state(num_qubits, rng):
    vec = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return qsim.DenseState(vec / np.linalg.norm(vec))


SINGLE_QUBIT_PROBES = (
    qsim.DenseState.from_bits((0,)),
    qsim.DenseState.from_bits((1,)),
    qsim.DenseState(np.array([1, 1]) / np.sqrt(2)),
    qsim.DenseState(np.array([1, -1]) / np.sqrt(2)),
    qsim.DenseState(np.array([1, 1j]) / np.sqrt(2)),
    qsim.DenseState(np.array([1, -1j]) / np.sqrt(2)),
)


def expected_phase_result(state, target, b, z_key):
    out = state
    if b:
        out = qsim.apply_gate(out, "P", [target])
    if z_key:
        out = qsim.apply_gate(out, "Z", [target])
    return out


# ------------------------------------------------------------- phase gadget


def test_phase_gadget_single_qubit_probes():
    rng = rng_for(1)
    for b in (0, 1):
        for probe in SINGLE_QUBIT_PROBES:
            res = gadgets.encrypted_phase(probe, 0, b, rng)
            assert res.x_key == 0
            want = expected_phase_result(probe, 0, b, res.z_key)
            assert qsim.fidelity(res.state, want) >= 1 - 1e-9


def test_phase_gadget_entangled_targets():
    rng = rng_for(2)
    for b in (0, 1):
        for _ in range(20):
            probe = random_state(3, rng)
            target = int(rng.integers(0, 3))
            res = gadgets.encrypted_phase(probe, target, b, rng)
            want = expected_phase_result(probe, target, b, res.z_key)
            assert qsim.fidelity(res.state, want) >= 1 - 1e-9


def test_phase_gadget_with_protocol_source():
    rng = rng_for(3)
    src = osp.tcf_two_round_source(n=3)
    for b in (0, 1):
        for _ in range(5):
            probe = random_state(2, rng)
            res = gadgets.encrypted_phase(probe, 1, b, rng, source=src)
            want = expected_phase_result(probe, 1, b, res.z_key)
            assert qsim.fidelity(res.state, want) >= 1 - 1e-9


def test_phase_gadget_key_rule():
    # With b=0 the measured bit never touches the key; with b=1 it does.
    class Recorder:
        def __init__(self, s):
            self.s = s

        def __call__(self, b, rng):
            return self.s, (qsim.basis_descriptor((self.s,)) if b == 0
                            else qsim.plane_descriptor(-1 if self.s else 1))

    for s in (0, 1):
        for seed in range(8):
            rng = rng_for(40 + seed)
            probe = qsim.DenseState(np.array([1, 1j]) / np.sqrt(2))
            res = gadgets.encrypted_phase(probe, 0, 0, rng, source=Recorder(s))
            assert res.z_key == s
            rng = rng_for(40 + seed)
            res = gadgets.encrypted_phase(probe, 0, 1, rng, source=Recorder(s))
            assert res.z_key == s ^ res.outcome_bit


def test_phase_gadget_rejects_bad_power():
    with pytest.raises(ValueError):
        gadgets.encrypted_phase(SINGLE_QUBIT_PROBES[0], 0, 2, rng_for(0))


# ------------------------------------------------------------- CNOT gadget


def undo_pauli_keys(state, qubits, x_keys, z_keys):
    out = state
    for q, z in zip(qubits, z_keys):
        if z:
            out = qsim.apply_gate(out, "Z", [q])
    for q, x in zip(qubits, x_keys):
        if x:
            out = qsim.apply_gate(out, "X", [q])
    return out


def test_ecnot_identity_and_cnot_branches():
    rng = rng_for(5)
    for b in (0, 1):
        for _ in range(25):
            probe = random_state(2, rng)
            res = gadgets.ecnot_run(probe, 0, 1, b, rng)
            plain = undo_pauli_keys(res.state, (0, 1), res.x_keys, res.z_keys)
            want = qsim.apply_gate(probe, "CNOT", [0, 1]) if b else probe
            assert qsim.fidelity(plain, want) >= 1 - 1e-9


def test_ecnot_on_larger_register():
    rng = rng_for(6)
    for b in (0, 1):
        probe = random_state(3, rng)
        res = gadgets.ecnot_run(probe, 2, 0, b, rng)
        plain = undo_pauli_keys(res.state, (2, 0), res.x_keys, res.z_keys)
        want = qsim.apply_gate(probe, "CNOT", [2, 0]) if b else probe
        assert qsim.fidelity(plain, want) >= 1 - 1e-9


def test_ecnot_with_protocol_source():
    rng = rng_for(7)
    src = osp.tcf_two_round_source(n=3)
    for b in (0, 1):
        probe = random_state(2, rng)
        res = gadgets.ecnot_run(probe, 0, 1, b, rng, source=src)
        plain = undo_pauli_keys(res.state, (0, 1), res.x_keys, res.z_keys)
        want = qsim.apply_gate(probe, "CNOT", [0, 1]) if b else probe
        assert qsim.fidelity(plain, want) >= 1 - 1e-9


def test_ecnot_decode_table():
    for t0 in (0, 1):
        for t1 in (0, 1):
            for m0 in (0, 1):
                for m1 in (0, 1):
                    assert gadgets.ecnot_dec(0, t0, t1, m0, m1) == ((0, t0), (t1, 0))
                    assert gadgets.ecnot_dec(1, t0, t1, m0, m1) == (
                        (0, m1 ^ t1),
                        (m0 ^ t0, 0),
                    )


def test_ecnot_one_message_each_way():
    res = gadgets.ecnot_run(random_state(2, rng_for(8)), 0, 1, 1, rng_for(9))
    assert [m["role"] for m in res.transcript] == ["client", "server"]


def test_ecnot_key_marginals():
    # Over many runs both X and Z keys should take both values.
    rng = rng_for(10)
    seen = {("x", 0): 0, ("x", 1): 0, ("z", 0): 0, ("z", 1): 0}
    probe = random_state(2, rng)
    for _ in range(80):
        res = gadgets.ecnot_run(probe, 0, 1, 1, rng)
        seen[("x", res.x_keys[1])] += 1
        seen[("z", res.z_keys[0])] += 1
    assert all(v > 0 for v in seen.values())


# -------------------------------------------------- claw states from gadgets


def test_csg_from_ecnot_structure():
    rng = rng_for(11)
    for _ in range(25):
        out = gadgets.csg_from_ecnot(3, rng)
        assert out.differentiated and not out.aborted
        assert out.x0 != out.x1
        state = out.receiver_state
        assert state.width == 4
        assert state.u[0] == 0 and state.v[0] == 1
        assert qsim.projection_norm(out, "DBCSG") == pytest.approx(1.0, abs=1e-9)


def test_csg_from_ecnot_difference_never_zero():
    rng = rng_for(12)
    for _ in range(40):
        out = gadgets.csg_from_ecnot(2, rng)
        assert any(gf2.xor_vec(out.x0, out.x1))


def test_csg_from_ecnot_feeds_osp():
    rng = rng_for(13)
    for want in (0, 1):
        out = osp.osp_from_csg(lambda r: gadgets.csg_from_ecnot(3, r), want, rng)
        assert out.b == want
        assert qsim.projection_norm(out, "OSP") == pytest.approx(1.0, abs=1e-9)


def test_csg_from_ecnot_validation():
    with pytest.raises(ValueError):
        gadgets.csg_from_ecnot(0, rng_for(0))
    with pytest.raises(ValueError):
        gadgets.csg_from_ecnot(18, rng_for(0))
