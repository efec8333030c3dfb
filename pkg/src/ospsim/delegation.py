"""Blind delegation of Clifford-plus-T circuits over one-time Pauli pads.

The client hides its input under a random X pad and tracks how the pad
propagates through the circuit.  Clifford gates update the pad keys by
simple rules; each adjoint-T gate leaks a phase-gate correction whose
power equals the current X key, which the client fixes up remotely with
the teleported phase gadget.  The server only ever sees padded bits and
uniformly random measurement outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import gadgets, osp, qsim

CLIFFORD_GATES = ("H", "X", "Z", "P", "PDG", "CNOT")
NON_CLIFFORD_GATES = ("T", "TDG")
TWO_QUBIT_GATES = ("CNOT",)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        checked = []
        for name, qubits in self.gates:
            name = name.upper()
            qubits = tuple(int(q) for q in qubits)
            if name not in CLIFFORD_GATES + NON_CLIFFORD_GATES:
                raise ValueError("unsupported gate %r" % name)
            want = 2 if name in TWO_QUBIT_GATES else 1
            if len(qubits) != want:
                raise ValueError("%s takes %d qubit(s)" % (name, want))
            if len(set(qubits)) != len(qubits):
                raise ValueError("%s qubits must be distinct" % name)
            if any(not 0 <= q < self.num_qubits for q in qubits):
                raise ValueError("qubit index out of range in %s" % name)
            checked.append((name, qubits))
        object.__setattr__(self, "gates", tuple(checked))

    @property
    def t_count(self) -> int:
        return sum(1 for name, _ in self.gates if name in NON_CLIFFORD_GATES)


def parse_circuit(text: str) -> Circuit:
    """Read the line format: a QUBITS header, then one gate per line."""
    num_qubits = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0].upper() == "QUBITS":
            if num_qubits is not None:
                raise ValueError("line %d: duplicate QUBITS header" % lineno)
            if len(parts) != 2:
                raise ValueError("line %d: QUBITS takes one count" % lineno)
            num_qubits = int(parts[1])
            continue
        if num_qubits is None:
            raise ValueError("line %d: gate before QUBITS header" % lineno)
        gates.append((parts[0], tuple(int(p) for p in parts[1:])))
    if num_qubits is None:
        raise ValueError("missing QUBITS header")
    return Circuit(num_qubits, tuple(gates))


def format_circuit(circuit: Circuit) -> str:
    lines = ["QUBITS %d" % circuit.num_qubits]
    for name, qubits in circuit.gates:
        lines.append(" ".join([name] + [str(q) for q in qubits]))
    return "\n".join(lines) + "\n"


def apply_circuit(state: qsim.DenseState, circuit: Circuit) -> qsim.DenseState:
    """Reference execution: apply every gate directly."""
    for name, qubits in circuit.gates:
        state = qsim.apply_gate(state, name, qubits)
    return state


def classical_eval(circuit: Circuit, bits) -> tuple:
    """Evaluate a measurement-stable circuit on a bit string.

    X and CNOT permute basis states; pure-phase gates cannot change a
    Z-basis readout.  Anything else (H) has no classical meaning here.
    """
    out = [int(b) for b in bits]
    if len(out) != circuit.num_qubits:
        raise ValueError("input width mismatch")
    for name, qubits in circuit.gates:
        if name == "X":
            out[qubits[0]] ^= 1
        elif name == "CNOT":
            out[qubits[1]] ^= out[qubits[0]]
        elif name in ("Z", "P", "PDG", "T", "TDG"):
            pass
        else:
            raise ValueError("%s has no classical evaluation" % name)
    return tuple(out)


def compile_alternating(circuit: Circuit):
    """Split into Clifford segments separated by adjoint-T gates.

    T is rewritten as adjoint-T followed by a phase gate, so the output is
    (segments, targets) with len(segments) == len(targets) + 1.
    """
    segments = [[]]
    targets = []
    for name, qubits in circuit.gates:
        if name == "T":
            targets.append(qubits[0])
            segments.append([("P", qubits)])
        elif name == "TDG":
            targets.append(qubits[0])
            segments.append([])
        else:
            segments[-1].append((name, qubits))
    return [tuple(seg) for seg in segments], targets


class PauliFrame:
    """Client-side X and Z pad keys, one pair per qubit."""

    def __init__(self, r, s):
        self.r = [int(b) for b in r]
        self.s = [int(b) for b in s]
        if len(self.r) != len(self.s):
            raise ValueError("key vectors must have equal length")

    def copy(self) -> "PauliFrame":
        return PauliFrame(self.r, self.s)

    def apply_clifford(self, name, qubits):
        name = name.upper()
        if name == "H":
            q = qubits[0]
            self.r[q], self.s[q] = self.s[q], self.r[q]
        elif name in ("P", "PDG"):
            q = qubits[0]
            self.s[q] ^= self.r[q]
        elif name == "CNOT":
            c, t = qubits
            self.r[t] ^= self.r[c]
            self.s[c] ^= self.s[t]
        elif name in ("X", "Z"):
            pass
        else:
            raise ValueError("%s is not a tracked Clifford gate" % name)


@dataclass
class DelegationResult:
    circuit: Circuit
    state: qsim.DenseState
    frame: PauliFrame
    transcript: list = field(default_factory=list)


def delegate(circuit: Circuit, input_bits, rng, source=None,
             pad_override=None) -> DelegationResult:
    """Run the padded delegation protocol on a classical input.

    pad_override fixes the input pad instead of sampling it, which lets
    tests couple two runs into identical server views.
    """
    if source is None:
        source = osp.ideal_stub_source
    n = circuit.num_qubits
    bits = tuple(int(b) for b in input_bits)
    if len(bits) != n:
        raise ValueError("input width mismatch")
    if pad_override is None:
        pad = tuple(int(t) for t in rng.integers(0, 2, n))
    else:
        pad = tuple(int(t) for t in pad_override)
        if len(pad) != n:
            raise ValueError("pad width mismatch")

    frame = PauliFrame(pad, [0] * n)
    padded = tuple(b ^ p for b, p in zip(bits, pad))
    state = qsim.DenseState.from_bits(padded)
    transcript = [
        {"role": "client", "kind": "padded-input",
         "payload": {"bits": list(padded)}},
    ]

    segments, targets = compile_alternating(circuit)
    for i, segment in enumerate(segments):
        for name, qubits in segment:
            state = qsim.apply_gate(state, name, qubits)
            frame.apply_clifford(name, qubits)
        if i < len(targets):
            q = targets[i]
            state = qsim.apply_gate(state, "TDG", [q])
            res = gadgets.encrypted_phase(state, q, frame.r[q], rng, source)
            state = res.state
            frame.s[q] ^= res.z_key
            transcript.append(
                {"role": "server", "kind": "phase-outcome",
                 "payload": {"m": res.outcome_bit}}
            )
    return DelegationResult(circuit, state, frame, transcript)


def _factored_gate(state, name, qubits, split, bits):
    """One gate on a register split into dense wires and classical bits.

    Wires below the split are dense; wires at or above it are tracked as
    bits and may only see diagonal gates, bit permutations, or serve as
    CNOT controls.  Diagonal gates on a basis-state wire contribute a
    global phase, which is dropped.
    """
    hi = [q for q in qubits if q >= split]
    if not hi:
        return qsim.apply_gate(state, name, qubits)
    if len(hi) == len(qubits):
        if name == "X":
            bits[qubits[0] - split] ^= 1
        elif name == "CNOT":
            bits[qubits[1] - split] ^= bits[qubits[0] - split]
        elif name not in ("Z", "P", "PDG", "T", "TDG"):
            raise ValueError("%s would leave the classical wires" % name)
        return state
    if name != "CNOT" or qubits[0] < split:
        raise ValueError("%s entangles a classical wire" % name)
    if bits[qubits[0] - split]:
        return qsim.apply_gate(state, "X", [qubits[1]])
    return state


def delegate_on_state(circuit: Circuit, state: qsim.DenseState, input_bits,
                      rng, source=None, pad_override=None,
                      factor_classical=True) -> DelegationResult:
    """Delegate a circuit whose leading wires hold an existing register.

    The quantum register enters with zero pad keys; only the trailing
    classical wires are hidden under a fresh X pad.  Wires the circuit
    never touches keep zero keys throughout, so their reduced state needs
    no correction afterwards.

    With factor_classical the classical wires are simulated symbolically;
    they stay basis states, so this consumes the same randomness and
    returns the same result (up to a global phase) as the dense run while
    keeping the state vector small.
    """
    if source is None:
        source = osp.ideal_stub_source
    n = circuit.num_qubits
    k = state.num_qubits
    bits = tuple(int(b) for b in input_bits)
    if k + len(bits) != n:
        raise ValueError("register plus classical input must fill the circuit")
    if pad_override is None:
        pad = tuple(int(t) for t in rng.integers(0, 2, len(bits)))
    else:
        pad = tuple(int(t) for t in pad_override)
        if len(pad) != len(bits):
            raise ValueError("pad width mismatch")

    frame = PauliFrame([0] * k + list(pad), [0] * n)
    padded = list(b ^ p for b, p in zip(bits, pad))
    full = state
    if bits and not factor_classical:
        full = full.tensor(qsim.DenseState.from_bits(padded))
    transcript = [
        {"role": "client", "kind": "padded-input",
         "payload": {"bits": list(padded), "register": k}},
    ]

    segments, targets = compile_alternating(circuit)
    for i, segment in enumerate(segments):
        for name, qubits in segment:
            if factor_classical:
                full = _factored_gate(full, name, qubits, k, padded)
            else:
                full = qsim.apply_gate(full, name, qubits)
            frame.apply_clifford(name, qubits)
        if i < len(targets):
            q = targets[i]
            if factor_classical and q >= k:
                tiny = qsim.DenseState.from_bits((padded[q - k],))
                tiny = qsim.apply_gate(tiny, "TDG", [0])
                res = gadgets.encrypted_phase(tiny, 0, frame.r[q], rng, source)
            else:
                full = qsim.apply_gate(full, "TDG", [q])
                res = gadgets.encrypted_phase(full, q, frame.r[q], rng, source)
                full = res.state
            frame.s[q] ^= res.z_key
            transcript.append(
                {"role": "server", "kind": "phase-outcome",
                 "payload": {"m": res.outcome_bit}}
            )
    if bits and factor_classical:
        full = full.tensor(qsim.DenseState.from_bits(tuple(padded)))
    return DelegationResult(circuit, full, frame, transcript)


def unpad_state(result: DelegationResult) -> qsim.DenseState:
    """Strip the Pauli pad, recovering the true circuit output."""
    state = result.state
    for q, bit in enumerate(result.frame.s):
        if bit:
            state = qsim.apply_gate(state, "Z", [q])
    for q, bit in enumerate(result.frame.r):
        if bit:
            state = qsim.apply_gate(state, "X", [q])
    return state


def classical_output_round(result: DelegationResult, rng, wires=None) -> tuple:
    """Server measures the named wires; client strips their X pads.

    With wires=None every wire is read out.  The post-measurement state is
    kept on the result so the remaining wires stay usable.
    """
    if wires is None:
        qubits = list(range(result.circuit.num_qubits))
    else:
        qubits = [int(q) for q in wires]
    raw, post = qsim.measure(result.state, qubits, qsim.Basis.Z, rng)
    result.state = post
    result.transcript.append(
        {"role": "server", "kind": "readout",
         "payload": {"wires": qubits, "bits": list(raw)}}
    )
    return tuple(b ^ result.frame.r[q] for b, q in zip(raw, qubits))


def random_circuit(rng, max_qubits: int = 4, max_gates: int = 24,
                   max_t: int = 12) -> Circuit:
    """Random Clifford-plus-T circuit within the given budget."""
    n = int(rng.integers(1, max_qubits + 1))
    count = int(rng.integers(1, max_gates + 1))
    pool = list(CLIFFORD_GATES + NON_CLIFFORD_GATES)
    gates = []
    t_used = 0
    for _ in range(count):
        name = pool[int(rng.integers(0, len(pool)))]
        if name in NON_CLIFFORD_GATES:
            if t_used >= max_t:
                name = "H"
            else:
                t_used += 1
        if name == "CNOT":
            if n < 2:
                name = "X"
            else:
                c, t = rng.choice(n, size=2, replace=False)
                gates.append((name, (int(c), int(t))))
                continue
        gates.append((name, (int(rng.integers(0, n)),)))
    return Circuit(n, tuple(gates))
