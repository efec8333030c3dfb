"""Teleported gate gadgets driven by obliviously prepared qubits.

The sender picks which gate actually happens (a phase power, or whether a
CNOT fires at all); the receiver executes a fixed circuit on its own data
plus the prepared qubits and reports measurement bits.  The sender then
knows the Pauli correction keys while the receiver holds the corrected
state none the wiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import osp, qsim


@dataclass
class PhaseGadgetResult:
    """Server state after the phase-power gadget plus the client's keys."""

    state: qsim.DenseState
    x_key: int
    z_key: int
    outcome_bit: int
    transcript: list = field(default_factory=list)


def encrypted_phase(state: qsim.DenseState, target: int, b: int, rng,
                    source=None) -> PhaseGadgetResult:
    """Apply the b-th power of the phase gate to `target` under Pauli keys.

    The prepared qubit H^b|s> is twisted into Z^s P^b |+>, appended, hit by
    a CNOT from the data qubit, and read out in the Z basis.  The data
    qubit ends as Z^{z_key} P^b (data); the X key is always zero.
    """
    if b not in (0, 1):
        raise ValueError("phase power must be 0 or 1")
    if source is None:
        source = osp.ideal_stub_source
    s, descr = source(b, rng)
    helper = qsim.apply_1q(qsim.apply_1q(descr, "H"), "SQRTX")

    n = state.num_qubits
    work = state.tensor(helper.densify())
    work = qsim.apply_gate(work, "CNOT", [target, n])
    (m,), work = qsim.measure(work, [n], qsim.Basis.Z, rng)
    work = qsim.drop_qubits(work, [n], (m,))
    z_key = s ^ (m & b)
    transcript = [
        {"role": "client", "kind": "prepared-qubit", "payload": {}},
        {"role": "server", "kind": "phase-outcome", "payload": {"m": m}},
    ]
    return PhaseGadgetResult(work, 0, z_key, m, transcript)


# ---------------------------------------------------------- encrypted CNOT


@dataclass
class EcnotClient:
    """Client secrets for one switchable-CNOT gadget."""

    b: int
    t0: int
    t1: int


def ecnot_gen(b: int, rng, source=None):
    """Prepare the two helper qubits: H^b|t0> and H^{1-b}|t1>."""
    if b not in (0, 1):
        raise ValueError("switch bit must be 0 or 1")
    if source is None:
        source = osp.ideal_stub_source
    t0, helper0 = source(b, rng)
    t1, helper1 = source(1 - b, rng)
    return EcnotClient(b, t0, t1), (helper0, helper1)


def ecnot_apply(state: qsim.DenseState, v0: int, v1: int, helpers, rng):
    """Server circuit: three CNOTs through the helpers, then read them out.

    Helper 0 is consumed in the X basis (bit m0), helper 1 in the Z basis
    (bit m1).  Returns the remaining state and (m0, m1).
    """
    h0, h1 = helpers
    n = state.num_qubits
    work = state.tensor(h0.densify()).tensor(h1.densify())
    q0, q1 = n, n + 1
    work = qsim.apply_gate(work, "CNOT", [v0, q1])
    work = qsim.apply_gate(work, "CNOT", [q0, q1])
    work = qsim.apply_gate(work, "CNOT", [q0, v1])
    (m0,), work = qsim.measure(work, [q0], qsim.Basis.X, rng)
    work = qsim.apply_gate(work, "H", [q0])
    work = qsim.drop_qubits(work, [q0], (m0,))
    (m1,), work = qsim.measure(work, [q1 - 1], qsim.Basis.Z, rng)
    work = qsim.drop_qubits(work, [q1 - 1], (m1,))
    return work, (m0, m1)


def ecnot_dec(b: int, t0: int, t1: int, m0: int, m1: int):
    """Pauli keys (x_keys, z_keys) ordered (control, target)."""
    if b == 0:
        return (0, t0), (t1, 0)
    return (0, m1 ^ t1), (m0 ^ t0, 0)


@dataclass
class EcnotResult:
    state: qsim.DenseState
    x_keys: tuple
    z_keys: tuple
    transcript: list = field(default_factory=list)


def ecnot_run(state: qsim.DenseState, v0: int, v1: int, b: int, rng,
              source=None) -> EcnotResult:
    """One full switchable-CNOT exchange: one message out, one back.

    Afterwards the server state equals X^{x} Z^{z} CNOT^b applied to the
    inputs, with the keys known only to the client.
    """
    client, helpers = ecnot_gen(b, rng, source)
    out_state, (m0, m1) = ecnot_apply(state, v0, v1, helpers, rng)
    x_keys, z_keys = ecnot_dec(client.b, client.t0, client.t1, m0, m1)
    transcript = [
        {"role": "client", "kind": "helper-qubits", "payload": {}},
        {"role": "server", "kind": "cnot-outcomes", "payload": {"m0": m0, "m1": m1}},
    ]
    return EcnotResult(out_state, x_keys, z_keys, transcript)


# ------------------------------------------- claw states from switched CNOTs


def csg_from_ecnot(n: int, rng, source=None) -> osp.CsgOutcome:
    """Differentiated claw generation out of n switchable CNOTs.

    The client picks a nonzero difference vector and fires one gadget per
    output qubit from a shared |+> control.  Undoing nothing, the server
    ends in a two-branch state whose claw and phase the client computes
    from its keys alone.
    """
    if n < 1:
        raise ValueError("need at least one target qubit")
    if n + 3 > qsim.MAX_DENSE_QUBITS:
        raise ValueError("claw width exceeds the dense simulation budget")
    delta = tuple(int(t) for t in rng.integers(0, 2, n))
    while not any(delta):
        delta = tuple(int(t) for t in rng.integers(0, 2, n))

    state = qsim.DenseState.from_bits((0,) * (n + 1))
    state = qsim.apply_gate(state, "H", [0])
    x_acc = [0] * (n + 1)
    z_acc = [0] * (n + 1)
    transcript = []
    for i in range(n):
        res = ecnot_run(state, 0, 1 + i, delta[i], rng, source)
        state = res.state
        x_acc[0] ^= res.x_keys[0]
        x_acc[1 + i] ^= res.x_keys[1]
        z_acc[0] ^= res.z_keys[0]
        z_acc[1 + i] ^= res.z_keys[1]
        transcript.extend(res.transcript)

    r0 = x_acc[0]
    r = tuple(x_acc[1:])
    x0 = tuple(r[i] ^ (r0 & delta[i]) for i in range(n))
    x1 = tuple(r[i] ^ ((1 ^ r0) & delta[i]) for i in range(n))
    z = z_acc[0]
    for i in range(n):
        z ^= z_acc[1 + i] & delta[i]
    receiver = qsim.dense_to_two_branch(state)
    return osp.CsgOutcome(x0, x1, z, receiver, transcript, differentiated=True)
