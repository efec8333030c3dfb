"""Exact simulation of small qubit registers.

Dense state vectors are the ground truth representation.  Two structured
representations cover the protocol-critical special cases without paying the
exponential cost: an equal superposition of two basis strings, and an affine
coset pair hanging off a single branch qubit.  Structured collapse rules are
checked against dense simulation in the test-suite; the dense path is the
oracle, the structured path is what the protocols run on.

Conventions
-----------
* Qubit 0 is the leftmost ket symbol; bit strings read MSB first, so the
  amplitude index of |b_0 b_1 ... b_{n-1}> is int(bits, 2).
* States are value objects.  Operations return new states.
* Dense states refuse to exceed 20 qubits.
* Structured phases live on the 8th roots of unity.  Anything richer must be
  densified first.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import gf2

MAX_DENSE_QUBITS = 20
ATOL = 1e-9

_SQ2 = math.sqrt(0.5)

GATES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "P": np.array([[1, 0], [0, 1j]], dtype=complex),
    "PDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=complex),
    "TDG": np.array([[1, 0], [0, cmath.exp(-1j * math.pi / 4)]], dtype=complex),
    # The root of X that sends |0> to |+i> and |1> to |-i|.  The other root
    # flips the Y orientation and breaks the phase-teleportation bookkeeping
    # downstream, so the choice is load-bearing.
    "SQRTX": 0.5 * np.array([[1 - 1j, 1 + 1j], [1 + 1j, 1 - 1j]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}

# Eighth roots of unity, the only phases structured states may carry.  The
# four cardinal roots are exact literals so phase comparisons stay clean.
_HALF_ROOT = math.sqrt(0.5)
PHASE_GRID = (
    complex(1),
    complex(_HALF_ROOT, _HALF_ROOT),
    1j,
    complex(-_HALF_ROOT, _HALF_ROOT),
    complex(-1),
    complex(-_HALF_ROOT, -_HALF_ROOT),
    -1j,
    complex(_HALF_ROOT, -_HALF_ROOT),
)


class Basis(str, Enum):
    """Single-qubit measurement bases."""

    Z = "Z"
    X = "X"
    Y = "Y"
    XPLUSZ = "X+Z"
    XMINUSZ = "X-Z"


_ROTATION_CACHE = {}


def _basis_rotation(basis) -> np.ndarray:
    """Unitary sending the basis eigenvectors to |0>, |1>."""
    basis = Basis(basis)
    cached = _ROTATION_CACHE.get(basis)
    if cached is not None:
        return cached
    if basis == Basis.Z:
        rot = np.eye(2, dtype=complex)
    elif basis == Basis.X:
        rot = GATES["H"]
    elif basis == Basis.Y:
        rot = np.array([[1, -1j], [1, 1j]], dtype=complex) * _SQ2
    else:
        theta = math.pi / 8 if basis == Basis.XPLUSZ else -math.pi / 8
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, s], [-s, c]], dtype=complex)
    rot.flags.writeable = False
    _ROTATION_CACHE[basis] = rot
    return rot


def basis_vector(basis, outcome: int) -> np.ndarray:
    """The eigenvector of the given basis labelled by outcome bit."""
    rot = _basis_rotation(basis)
    return rot.conj().T[:, outcome].copy()


def snap_phase(value: complex) -> complex:
    """Round a unit complex to the nearest 8th root of unity or raise."""
    for p in PHASE_GRID:
        if abs(value - p) <= 1e-7:
            return p
    raise ValueError("phase %r is not an 8th root of unity" % (value,))


def _check_bits(bits, width):
    bits = tuple(int(b) for b in bits)
    if len(bits) != width:
        raise ValueError("expected %d bits, got %d" % (width, len(bits)))
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0/1")
    return bits


class DenseState:
    """Immutable dense state vector over num_qubits qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def __init__(self, amplitudes, registers=None):
        vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(vec.size).bit_length() - 1
        if 1 << n != vec.size:
            raise ValueError("amplitude vector length must be a power of two")
        if n > MAX_DENSE_QUBITS:
            raise ValueError(
                "dense state of %d qubits exceeds the %d-qubit limit"
                % (n, MAX_DENSE_QUBITS)
            )
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError("state vector is not normalized (norm %g)" % norm)
        vec = vec / norm
        vec.flags.writeable = False
        self.num_qubits = n
        self.amplitudes = vec
        self.registers = dict(registers) if registers else None

    @classmethod
    def from_bits(cls, bits) -> "DenseState":
        bits = tuple(int(b) for b in bits)
        vec = np.zeros(1 << len(bits), dtype=complex)
        vec[gf2.bits_to_int(bits)] = 1.0
        return cls(vec)

    @classmethod
    def uniform(cls, num_qubits: int) -> "DenseState":
        vec = np.full(1 << num_qubits, 2 ** (-num_qubits / 2), dtype=complex)
        return cls(vec)

    def tensor(self, other: "DenseState") -> "DenseState":
        return DenseState(np.kron(self.amplitudes, other.amplitudes))

    def apply(self, gate, *qubits) -> "DenseState":
        return apply_gate(self, gate, qubits)

    def measure(self, qubits, basis, rng):
        return measure(self, qubits, basis, rng)

    def probability(self, bits) -> float:
        bits = _check_bits(bits, self.num_qubits)
        return float(abs(self.amplitudes[gf2.bits_to_int(bits)]) ** 2)

    def __repr__(self):
        return "DenseState(%d qubits)" % self.num_qubits


def apply_gate(state: DenseState, gate, qubits) -> DenseState:
    """Apply a named gate or explicit unitary to the listed qubits."""
    if isinstance(gate, str):
        mat = GATES.get(gate.upper())
        if mat is None:
            raise ValueError("unknown gate %r" % gate)
    else:
        mat = np.asarray(gate, dtype=complex)
    qubits = tuple(int(q) for q in qubits)
    k = len(qubits)
    if mat.shape != (1 << k, 1 << k):
        raise ValueError("gate shape %s does not fit %d qubits" % (mat.shape, k))
    if len(set(qubits)) != k:
        raise ValueError("duplicate target qubit")
    n = state.num_qubits
    if any(q < 0 or q >= n for q in qubits):
        raise ValueError("qubit index out of range")
    arr = state.amplitudes.reshape((2,) * n)
    arr = np.moveaxis(arr, qubits, range(k))
    shaped = arr.reshape(1 << k, -1)
    shaped = mat @ shaped
    arr = shaped.reshape((2,) * n)
    arr = np.moveaxis(arr, range(k), qubits)
    return DenseState(arr.reshape(-1), registers=state.registers)


def measure(state: DenseState, qubits, basis, rng):
    """Projectively measure each listed qubit in the given basis.

    Returns (outcome bits, post-measurement DenseState).  The collapsed
    qubits are left in the corresponding basis eigenvector.
    """
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError("duplicate measurement qubit")
    basis = Basis(basis)
    rot = _basis_rotation(basis)
    work = state
    if basis != Basis.Z:
        for q in qubits:
            work = apply_gate(work, rot, (q,))
    n = work.num_qubits
    k = len(qubits)
    arr = work.amplitudes.reshape((2,) * n)
    arr = np.moveaxis(arr, qubits, range(k))
    block = arr.reshape(1 << k, -1)
    probs = np.sum(np.abs(block) ** 2, axis=1)
    probs = probs / probs.sum()
    outcome = int(rng.choice(1 << k, p=probs))
    post = np.zeros_like(block)
    post[outcome] = block[outcome] / math.sqrt(probs[outcome])
    arr = post.reshape((2,) * n)
    arr = np.moveaxis(arr, range(k), qubits)
    result = DenseState(arr.reshape(-1), registers=state.registers)
    if basis != Basis.Z:
        inv = rot.conj().T
        for q in qubits:
            result = apply_gate(result, inv, (q,))
    return gf2.int_to_bits(outcome, k), result


@dataclass(frozen=True)
class TwoBranchState:
    """(|u> + phase |v>)/sqrt(2), or |u> when the branches coincide."""

    width: int
    u: tuple
    v: tuple
    phase: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "u", _check_bits(self.u, self.width))
        object.__setattr__(self, "v", _check_bits(self.v, self.width))
        if self.u == self.v:
            object.__setattr__(self, "phase", 1.0 + 0j)
        else:
            object.__setattr__(self, "phase", snap_phase(complex(self.phase)))

    @property
    def is_basis(self) -> bool:
        return self.u == self.v

    def densify(self) -> DenseState:
        vec = np.zeros(1 << self.width, dtype=complex)
        if self.is_basis:
            vec[gf2.bits_to_int(self.u)] = 1.0
        else:
            vec[gf2.bits_to_int(self.u)] = _SQ2
            vec[gf2.bits_to_int(self.v)] += self.phase * _SQ2
        return DenseState(vec)

    def __repr__(self):
        if self.is_basis:
            return "TwoBranchState(|%s>)" % "".join(map(str, self.u))
        return "TwoBranchState((|%s> + (%s)|%s>)/sqrt2)" % (
            "".join(map(str, self.u)),
            _phase_label(self.phase),
            "".join(map(str, self.v)),
        )


def _phase_label(p: complex) -> str:
    names = {0: "1", 1: "e^{ipi/4}", 2: "i", 3: "e^{i3pi/4}",
             4: "-1", 5: "e^{-i3pi/4}", 6: "-i", 7: "e^{-ipi/4}"}
    for k, root in enumerate(PHASE_GRID):
        if abs(p - root) <= 1e-9:
            return names[k]
    return repr(p)


def basis_descriptor(bits) -> TwoBranchState:
    bits = tuple(int(b) for b in bits)
    return TwoBranchState(len(bits), bits, bits)


def plane_descriptor(phase) -> TwoBranchState:
    """Single-qubit (|0> + phase|1>)/sqrt(2)."""
    return TwoBranchState(1, (0,), (1,), phase)


@dataclass(frozen=True)
class AffineBranchState:
    """(|0>|shift0 + A> + |1>|shift1 + A>)/norm over 1 + width qubits.

    A is the span of basis rows; the branch qubit comes first.  Dependent
    basis rows are normalized away on construction.
    """

    width: int
    basis: tuple
    shift0: tuple
    shift1: tuple

    def __post_init__(self):
        rows = [_check_bits(r, self.width) for r in self.basis]
        packed = gf2.row_reduce([gf2.bits_to_int(r) for r in rows], self.width)
        norm_rows = tuple(gf2.int_to_bits(p, self.width) for p in packed)
        object.__setattr__(self, "basis", norm_rows)
        object.__setattr__(self, "shift0", _check_bits(self.shift0, self.width))
        object.__setattr__(self, "shift1", _check_bits(self.shift1, self.width))

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def span(self):
        """All 2^dim elements of A, in index order of coefficient vectors."""
        out = []
        for coeffs in range(1 << self.dimension):
            acc = (0,) * self.width
            for i, row in enumerate(self.basis):
                if (coeffs >> (self.dimension - 1 - i)) & 1:
                    acc = gf2.xor_vec(acc, row)
            out.append(acc)
        return out

    def branch_support(self, branch: int):
        shift = self.shift1 if branch else self.shift0
        return sorted(gf2.xor_vec(shift, a) for a in self.span())

    def densify(self) -> DenseState:
        vec = np.zeros(1 << (self.width + 1), dtype=complex)
        amp = 1.0 / math.sqrt(2 * (1 << self.dimension))
        for branch in (0, 1):
            for bits in self.branch_support(branch):
                vec[(branch << self.width) | gf2.bits_to_int(bits)] += amp
        return DenseState(vec)


@dataclass(frozen=True)
class UniformRegister:
    """Uniform superposition over all bit strings of the given width."""

    width: int

    def densify(self) -> DenseState:
        return DenseState.uniform(self.width)


def densify(state) -> DenseState:
    if isinstance(state, DenseState):
        return state
    return state.densify()


def collapse_two_branch(state: TwoBranchState, keep: int, rng):
    """Hadamard-measure every qubit except `keep`.

    Returns (outcome bits d over the measured qubits in order, residual
    single-qubit TwoBranchState).  Exact sampling from the structured form;
    equivalent to densify + measure, which the tests check.
    """
    if state.width < 2:
        raise ValueError("collapse needs at least one qubit besides keep")
    if not 0 <= keep < state.width:
        raise ValueError("keep index out of range")
    others = [i for i in range(state.width) if i != keep]
    u_rest = tuple(state.u[i] for i in others)
    v_rest = tuple(state.v[i] for i in others)
    diff = gf2.xor_vec(u_rest, v_rest)
    w = len(others)

    if state.is_basis:
        d = tuple(int(rng.integers(0, 2)) for _ in range(w))
        return d, basis_descriptor((state.u[keep],))

    if state.u[keep] == state.v[keep]:
        # Branches agree on the kept qubit: it comes out classical and the
        # measured pattern is biased by |1 + phase*(-1)^{d.diff}|^2.
        w_even = abs(1 + state.phase) ** 2
        w_odd = abs(1 - state.phase) ** 2
        if w_even <= ATOL:
            parity = 1
        elif w_odd <= ATOL:
            parity = 0
        else:
            parity = int(rng.random() < w_odd / (w_even + w_odd))
        d = gf2.sample_solution([(diff, parity)], w, rng)
        if d is None:  # diff == 0 with parity 1 cannot happen for u != v
            raise AssertionError("unsatisfiable collapse constraint")
        return d, basis_descriptor((state.u[keep],))

    # Branches differ on the kept qubit: every d is equally likely and the
    # kept qubit keeps a (possibly phase-twisted) superposition.
    d = tuple(int(rng.integers(0, 2)) for _ in range(w))
    q = state.phase * (-1) ** gf2.dot(d, diff)
    if state.u[keep] == 0:
        residual = plane_descriptor(q)
    else:
        residual = plane_descriptor(1 / q)
    return d, residual


def collapse_affine(state: AffineBranchState, rng):
    """Hadamard-measure the width-register of an affine branch pair.

    Returns (outcome bits d, residual phase bit).  The residual branch qubit
    is Z^bit |+>.
    """
    dual = gf2.nullspace(state.basis, state.width)
    if dual:
        d = gf2.sample_span(dual, rng)
    else:
        d = (0,) * state.width
    bit = gf2.dot(d, gf2.xor_vec(state.shift0, state.shift1))
    return d, bit


def fidelity(a, b) -> float:
    """|<a|b>|^2 for pure states (global-phase invariant)."""
    va = densify(a).amplitudes
    vb = densify(b).amplitudes
    if va.size != vb.size:
        raise ValueError("state sizes differ")
    return float(abs(np.vdot(va, vb)) ** 2)


def trace_distance(a, b) -> float:
    """Trace distance between two pure states given as vectors."""
    va = densify(a).amplitudes
    vb = densify(b).amplitudes
    if va.size != vb.size:
        raise ValueError("state sizes differ")
    rho = np.outer(va, va.conj()) - np.outer(vb, vb.conj())
    eigs = np.linalg.eigvalsh(rho)
    return float(0.5 * np.sum(np.abs(eigs)))


def projection_norm(outcome, protocol: str) -> float:
    """Norm of the correctness projector applied to an outcome's state.

    `outcome` carries the classical fields and the receiver state; the
    protocol tag picks which projector family applies:

    * "OSP": fields (b, s), single-qubit state; target H^b|s>.
    * "CSG": fields (x0, x1, z), n-qubit state; target the claw pair
      superposition, with no projector term when x0 == x1.
    * "DBCSG": same with a leading tag qubit on each branch.
    """
    tag = protocol.upper()
    state = densify(outcome.receiver_state)
    vec = state.amplitudes
    if tag == "OSP":
        s, b = int(outcome.s), int(outcome.b)
        target = np.zeros(2, dtype=complex)
        target[s] = 1.0
        if b:
            target = GATES["H"] @ target
        if vec.size != 2:
            raise ValueError("OSP projector expects a single qubit")
        return float(abs(np.vdot(target, vec)))
    if tag in ("CSG", "DBCSG"):
        x0 = tuple(outcome.x0)
        x1 = tuple(outcome.x1)
        z = int(outcome.z)
        if x0 == x1:
            return 0.0
        if tag == "DBCSG":
            u, v = (0,) + x0, (1,) + x1
        else:
            u, v = x0, x1
        target = TwoBranchState(len(u), u, v, -1.0 if z else 1.0)
        tvec = target.densify().amplitudes
        if tvec.size != vec.size:
            raise ValueError("state width mismatch for %s projector" % tag)
        return float(abs(np.vdot(tvec, vec)))
    raise ValueError("unknown protocol tag %r" % protocol)


def apply_bit_function(state: DenseState, input_qubits, fn, out_width: int):
    """|x>|0^k> -> |x>|f(x)>: append out_width qubits holding fn of the bits.

    fn receives the bit tuple of the listed input qubits and returns either
    an int below 2^out_width or a bit tuple.
    """
    n = state.num_qubits
    input_qubits = tuple(int(q) for q in input_qubits)
    if n + out_width > MAX_DENSE_QUBITS:
        raise ValueError("bit function output exceeds the dense qubit limit")
    new = np.zeros(1 << (n + out_width), dtype=complex)
    amps = state.amplitudes
    for idx in np.flatnonzero(np.abs(amps) > 0):
        bits = gf2.int_to_bits(int(idx), n)
        val = fn(tuple(bits[q] for q in input_qubits))
        if not isinstance(val, int):
            val = gf2.bits_to_int(val)
        if not 0 <= val < (1 << out_width):
            raise ValueError("bit function value out of range")
        new[(int(idx) << out_width) | val] = amps[idx]
    return DenseState(new, registers=state.registers)


def drop_qubits(state: DenseState, qubits, expected_bits) -> DenseState:
    """Remove qubits known to sit in a basis state (e.g. after measurement)."""
    qubits = tuple(int(q) for q in qubits)
    expected_bits = tuple(int(b) for b in expected_bits)
    n = state.num_qubits
    arr = state.amplitudes.reshape((2,) * n)
    index = [slice(None)] * n
    for q, b in zip(qubits, expected_bits):
        index[q] = b
    sub = np.asarray(arr[tuple(index)]).reshape(-1)
    norm = np.linalg.norm(sub)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError("dropped qubits were not classical (mass %g)" % norm**2)
    return DenseState(sub)


def dense_to_two_branch(state: DenseState) -> TwoBranchState:
    """Recognize a dense state as a TwoBranchState; error if it is not one."""
    vec = state.amplitudes
    hot = np.flatnonzero(np.abs(vec) > 1e-7)
    if hot.size == 1:
        return basis_descriptor(gf2.int_to_bits(int(hot[0]), state.num_qubits))
    if hot.size == 2:
        a, b = (int(h) for h in hot)
        amp_a, amp_b = vec[a], vec[b]
        if abs(abs(amp_a) - _SQ2) > 1e-7 or abs(abs(amp_b) - _SQ2) > 1e-7:
            raise ValueError("branch weights are not 1/2")
        phase = snap_phase(amp_b / amp_a)
        return TwoBranchState(
            state.num_qubits,
            gf2.int_to_bits(a, state.num_qubits),
            gf2.int_to_bits(b, state.num_qubits),
            phase,
        )
    raise ValueError("state has %d-point support, not a branch pair" % hot.size)


def apply_1q(descriptor: TwoBranchState, gate) -> TwoBranchState:
    """Apply a named single-qubit gate to a 1-qubit descriptor exactly."""
    if descriptor.width != 1:
        raise ValueError("descriptor must be a single qubit")
    mat = GATES[gate.upper()] if isinstance(gate, str) else np.asarray(gate)
    vec = mat @ descriptor.densify().amplitudes
    # Normalize global phase so the first significant amplitude is positive.
    ref = vec[0] if abs(vec[0]) > 1e-7 else vec[1]
    vec = vec * (abs(ref) / ref)
    return dense_to_two_branch(DenseState(vec))


def measure_descriptor(descriptor: TwoBranchState, basis, rng) -> int:
    """Measure a 1-qubit descriptor in the given basis, returning the bit."""
    if descriptor.width != 1:
        raise ValueError("descriptor must be a single qubit")
    amps = [0j, 0j]
    if descriptor.is_basis:
        amps[descriptor.u[0]] = 1.0
    else:
        amps[descriptor.u[0]] = _SQ2
        amps[descriptor.v[0]] += descriptor.phase * _SQ2
    rot = _basis_rotation(basis)
    p1 = float(abs(rot[1, 0] * amps[0] + rot[1, 1] * amps[1]) ** 2)
    return int(rng.random() < p1)
