"""Single-round energy test for two-local XZ Hamiltonians.

A classical referee plays one round against two isolated provers who share
EPR pairs plus a low-energy state of the Hamiltonian.  Three question
types are mixed: a CHSH round and a commutation round certify that the
provers really measure anticommuting (resp. commuting) Pauli parities,
and a teleport round extracts an energy estimate by having one prover
teleport the data register through the shared pairs while the other reads
it out in a random Pauli basis.  The honest strategy is implemented both
with direct projective measurements and as a padded delegated circuit,
so the two can be compared round for round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import delegation, qsim

REJECTION_LIMIT = 10 ** 4
HONEST_CHSH = math.cos(math.pi / 8) ** 2
_SQRT2 = math.sqrt(2.0)

_EYE2 = np.eye(2, dtype=complex)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Hamiltonian:
    """Normalized two-local Hamiltonian: terms are (axis, i, j, weight)."""

    num_qubits: int
    terms: tuple

    def __post_init__(self):
        if self.num_qubits < 2:
            raise ValueError("need at least two qubits")
        checked = []
        total = 0.0
        for axis, i, j, weight in self.terms:
            axis = str(axis).upper()
            i, j, weight = int(i), int(j), float(weight)
            if axis not in _PAULI:
                raise ValueError("axis must be X or Z, got %r" % axis)
            if i == j:
                raise ValueError("term acts on two distinct qubits")
            if not (0 <= i < self.num_qubits and 0 <= j < self.num_qubits):
                raise ValueError("qubit index out of range")
            if weight < 0:
                raise ValueError("weights must be nonnegative")
            total += weight
            checked.append((axis, i, j, weight))
        if abs(total - 1.0) > 1e-9:
            raise ValueError("weights must sum to one, got %r" % total)
        object.__setattr__(self, "terms", tuple(checked))

    @property
    def x_terms(self):
        return tuple(t for t in self.terms if t[0] == "X")

    @property
    def z_terms(self):
        return tuple(t for t in self.terms if t[0] == "Z")

    @property
    def x_weight(self) -> float:
        return sum(t[3] for t in self.x_terms)

    @property
    def z_weight(self) -> float:
        return sum(t[3] for t in self.z_terms)


def parse_hamiltonian(text: str) -> Hamiltonian:
    """Read the line format: a QUBITS header, then one term per line."""
    num_qubits = None
    terms = []
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
            raise ValueError("line %d: term before QUBITS header" % lineno)
        if len(parts) != 4:
            raise ValueError("line %d: want AXIS i j weight" % lineno)
        terms.append((parts[0], int(parts[1]), int(parts[2]), float(parts[3])))
    if num_qubits is None:
        raise ValueError("missing QUBITS header")
    return Hamiltonian(num_qubits, tuple(terms))


def format_hamiltonian(ham: Hamiltonian) -> str:
    lines = ["QUBITS %d" % ham.num_qubits]
    for axis, i, j, weight in ham.terms:
        lines.append("%s %d %d %r" % (axis, i, j, weight))
    return "\n".join(lines) + "\n"


@lru_cache(maxsize=4096)
def _pauli_string_cached(axis: str, support: tuple) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    single = _PAULI[axis]
    for bit in support:
        out = np.kron(out, single if bit else _EYE2)
    out.setflags(write=False)
    return out


def pauli_string(axis: str, support) -> np.ndarray:
    """Tensor product with the named Pauli on every set bit of support.

    The returned array is cached and read only.
    """
    if axis not in _PAULI:
        raise ValueError("axis must be X or Z")
    return _pauli_string_cached(axis, tuple(int(b) for b in support))


def _indicator(i: int, j: int, width: int) -> tuple:
    return tuple(1 if q in (i, j) else 0 for q in range(width))


def hamiltonian_matrix(ham: Hamiltonian) -> np.ndarray:
    dim = 1 << ham.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for axis, i, j, weight in ham.terms:
        out += weight * pauli_string(axis, _indicator(i, j, ham.num_qubits))
    return out


def min_eigenvalue(ham: Hamiltonian) -> float:
    if ham.num_qubits > 4:
        raise ValueError("dense diagonalization is capped at four qubits")
    return float(np.linalg.eigvalsh(hamiltonian_matrix(ham))[0])


def ground_state(ham: Hamiltonian) -> np.ndarray:
    """Lowest-index eigenvector of the smallest eigenvalue (deterministic)."""
    if ham.num_qubits > 4:
        raise ValueError("dense diagonalization is capped at four qubits")
    _, vecs = np.linalg.eigh(hamiltonian_matrix(ham))
    return np.array(vecs[:, 0], dtype=complex)


@dataclass(frozen=True)
class GameParams:
    """Round mix and the promised energy window (alpha, beta)."""

    kappa: float
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if not self.beta > self.alpha:
            raise ValueError("the energy window needs beta > alpha")


@dataclass(frozen=True)
class Question:
    kind: str
    y: int
    a: tuple = None
    b: tuple = None
    x: int = None


def _weighted_pair(terms, rng):
    if len(terms) == 1:
        return terms[0]
    weights = np.array([t[3] for t in terms])
    idx = int(rng.choice(len(terms), p=weights / weights.sum()))
    return terms[idx]


def sample_question(ham: Hamiltonian, params: GameParams, rng) -> Question:
    """Draw a question: CHSH and commutation rounds split 1 - kappa evenly."""
    u = float(rng.random())
    if u < (1.0 - params.kappa) / 2.0:
        kind = "chsh"
    elif u < 1.0 - params.kappa:
        kind = "commutation"
    else:
        kind = "teleport"
    y = int(rng.integers(0, 2))
    if kind == "teleport":
        return Question("teleport", y)
    if not ham.x_terms:
        raise ValueError("correlation rounds need at least one X term")
    need = 1 if kind == "chsh" else 0
    for _ in range(REJECTION_LIMIT):
        a = tuple(int(t) for t in rng.integers(0, 2, ham.num_qubits))
        _, i, j, _ = _weighted_pair(ham.x_terms, rng)
        if (a[i] ^ a[j]) == need:
            break
    else:
        raise RuntimeError(
            "no admissible question after %d rejections" % REJECTION_LIMIT
        )
    b = _indicator(i, j, ham.num_qubits)
    if kind == "chsh":
        return Question("chsh", y, a, b, int(rng.integers(0, 2)))
    return Question("commutation", y, a, b)


def _dot(u, v) -> int:
    return sum(x & y for x, y in zip(u, v)) & 1


def verify(question: Question, answers, ham: Hamiltonian, rng) -> bool:
    """Referee predicate.  Teleport rounds sample a display term here."""
    s_a, s_b = answers
    s_a = tuple(int(t) for t in s_a)
    s_b = tuple(int(t) for t in s_b)
    lam = ham.num_qubits
    if len(s_b) != lam:
        raise ValueError("second answer must carry one bit per qubit")
    if question.kind in ("chsh", "commutation"):
        side = question.a if question.y == 0 else question.b
        z = _dot(side, s_b)
        if question.kind == "chsh":
            if len(s_a) != 1:
                raise ValueError("CHSH answer is a single bit")
            return (s_a[0] ^ z) == (question.x & question.y)
        if len(s_a) != 2:
            raise ValueError("commutation answer is two bits")
        return s_a[question.y] == z
    if question.kind != "teleport":
        raise ValueError("unknown question kind %r" % question.kind)
    if len(s_a) != 2 * lam:
        raise ValueError("teleport answer is two bits per qubit")
    axis = "X" if float(rng.random()) < ham.x_weight else "Z"
    if axis != ("X" if question.y == 1 else "Z"):
        return True
    terms = ham.x_terms if axis == "X" else ham.z_terms
    _, i, j, _ = _weighted_pair(terms, rng)
    if axis == "Z":
        parity = s_b[i] ^ s_b[j] ^ s_a[i] ^ s_a[j]
    else:
        parity = s_b[i] ^ s_b[j] ^ s_a[lam + i] ^ s_a[lam + j]
    return parity == 1


def prepared_state(ham: Hamiltonian, prepare=None) -> qsim.DenseState:
    """Shared state: EPR pairs on [helper | prover] wires, then the data.

    Wire layout: the co-prover holds [0, n), the measuring prover holds
    [n, 2n), and the data register sits on [2n, 3n).  The data state comes
    from prepare(ham) when given, otherwise the exact ground state.
    """
    lam = ham.num_qubits
    vec = np.asarray(prepare(ham) if prepare else ground_state(ham),
                     dtype=complex)
    if vec.size != 1 << lam:
        raise ValueError("prepared register has the wrong dimension")
    epr = qsim.DenseState.from_bits((0,) * (2 * lam))
    for i in range(lam):
        epr = epr.apply("H", lam + i).apply("CNOT", lam + i, i)
    return epr.tensor(qsim.DenseState(vec))


def _measure_observable(state, mat, wires, rng):
    """Two-outcome measurement of an involution; bit 0 means outcome +1."""
    n = state.num_qubits
    k = len(wires)
    arr = np.moveaxis(state.amplitudes.reshape((2,) * n), wires, range(k))
    block = arr.reshape(1 << k, -1)
    plus = 0.5 * (block + mat @ block)
    p_plus = float(np.vdot(plus, plus).real)
    bit = 0 if rng.random() < p_plus else 1
    chosen = plus if bit == 0 else block - plus
    chosen = chosen / np.linalg.norm(chosen)
    out = np.moveaxis(chosen.reshape((2,) * k + (2,) * (n - k)),
                      range(k), wires)
    return bit, qsim.DenseState(out.reshape(-1))


def _direct_answers(ham, question, state, rng):
    lam = ham.num_qubits
    alice = list(range(lam, 2 * lam))
    if question.kind == "chsh":
        sign = -1.0 if question.x else 1.0
        mat = (pauli_string("Z", question.a)
               + sign * pauli_string("X", question.b)) / _SQRT2
        bit, state = _measure_observable(state, mat, alice, rng)
        s_a = (bit,)
    elif question.kind == "commutation":
        za, state = _measure_observable(
            state, pauli_string("Z", question.a), alice, rng)
        xb, state = _measure_observable(
            state, pauli_string("X", question.b), alice, rng)
        s_a = (za, xb)
    else:
        for i in range(lam):
            state = state.apply("CNOT", 2 * lam + i, lam + i)
            state = state.apply("H", 2 * lam + i)
        xkeys, state = qsim.measure(state, alice, qsim.Basis.Z, rng)
        zkeys, state = qsim.measure(
            state, [2 * lam + i for i in range(lam)], qsim.Basis.Z, rng)
        s_a = tuple(xkeys) + tuple(zkeys)
    basis = qsim.Basis.Z if question.y == 0 else qsim.Basis.X
    s_b, _ = qsim.measure(state, list(range(lam)), basis, rng)
    return s_a, tuple(s_b)


# Clifford+T gate strings, applied left to right.  _RY_MINUS is the y-axis
# rotation by -pi/4 up to global phase; it maps Z to (Z + X)/sqrt(2) under
# conjugation.  _RY_PLUS is its inverse.
_RY_MINUS = ("PDG", "H", "TDG", "H", "P")
_RY_PLUS = ("PDG", "H", "T", "H", "P")


def _on(wire, names):
    return [(name, (wire,)) for name in names]


def _toffoli(c1, c2, t):
    """Doubly controlled X over the Clifford+T set (T-count seven)."""
    return [
        ("H", (t,)), ("CNOT", (c2, t)), ("TDG", (t,)), ("CNOT", (c1, t)),
        ("T", (t,)), ("CNOT", (c2, t)), ("TDG", (t,)), ("CNOT", (c1, t)),
        ("T", (c2,)), ("T", (t,)), ("H", (t,)), ("CNOT", (c1, c2)),
        ("T", (c1,)), ("TDG", (c2,)), ("CNOT", (c1, c2)),
    ]


def _controlled_h(c, t):
    return _on(t, _RY_PLUS) + [("CNOT", (c, t))] + _on(t, _RY_MINUS)


@lru_cache(maxsize=None)
def _collection_circuit(lam: int, kind: str):
    """Delegatable circuit for one question type.

    Wires [0, 3*lam) mirror prepared_state; answer parities are folded
    onto fresh ancillas by question-controlled Toffolis, so one circuit
    per kind serves every concrete question.  Returns the circuit, the
    wires carrying the answer, and the classical input width.
    """
    alice = lam
    data = 2 * lam
    if kind == "teleport":
        gates = []
        for i in range(lam):
            gates.append(("CNOT", (data + i, alice + i)))
            gates.append(("H", (data + i,)))
        wires = tuple(range(alice, alice + lam)) + tuple(range(data, data + lam))
        return delegation.Circuit(3 * lam, tuple(gates)), wires, 0
    e = 3 * lam
    f = 3 * lam + 1
    a0 = 3 * lam + 2
    b0 = a0 + lam
    gates = [("H", (f,))]
    for i in range(lam):
        gates += _toffoli(a0 + i, alice + i, e)
    for i in range(lam):
        gates += _toffoli(b0 + i, f, alice + i)
    if kind == "commutation":
        gates.append(("H", (f,)))
        return delegation.Circuit(b0 + lam, tuple(gates)), (e, f), 2 * lam
    if kind != "chsh":
        raise ValueError("unknown question kind %r" % kind)
    xw = b0 + lam
    gates.append(("CNOT", (e, f)))
    gates += _on(e, _RY_MINUS)
    gates += [("H", (e,)), ("CNOT", (xw, e)), ("H", (e,))]
    gates += _controlled_h(xw, e)
    return delegation.Circuit(xw + 1, tuple(gates)), (e,), 2 * lam + 1


def _delegated_answers(ham, question, state, rng, source):
    lam = ham.num_qubits
    circuit, answer_wires, input_width = _collection_circuit(
        lam, question.kind)
    if question.kind == "chsh":
        bits = question.a + question.b + (question.x,)
    elif question.kind == "commutation":
        bits = question.a + question.b
    else:
        bits = ()
    if input_width != len(bits):
        raise RuntimeError("question width mismatch")
    register = state
    if question.kind != "teleport":
        register = register.tensor(qsim.DenseState.from_bits((0, 0)))
    result = delegation.delegate_on_state(circuit, register, bits, rng, source)
    if any(result.frame.r[i] or result.frame.s[i] for i in range(lam)):
        raise RuntimeError("helper wires picked up pad keys")
    s_a = delegation.classical_output_round(result, rng, wires=answer_wires)
    basis = qsim.Basis.Z if question.y == 0 else qsim.Basis.X
    s_b, _ = qsim.measure(result.state, list(range(lam)), basis, rng)
    return tuple(s_a), tuple(s_b)


def honest_round(ham: Hamiltonian, params: GameParams, rng, delegated=False,
                 source=None, prepare=None, base=None):
    """Play one round honestly; returns (question, answers, accept).

    base short-circuits state preparation so a caller looping over many
    rounds can share one prepared state.
    """
    question = sample_question(ham, params, rng)
    state = base if base is not None else prepared_state(ham, prepare)
    if delegated:
        answers = _delegated_answers(ham, question, state, rng, source)
    else:
        answers = _direct_answers(ham, question, state, rng)
    return question, answers, verify(question, answers, ham, rng)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return center - half / denom, center + half / denom


def estimate_value(ham: Hamiltonian, params: GameParams, rounds: int, rng,
                   delegated=False, source=None, prepare=None) -> dict:
    """Monte-Carlo acceptance estimate with a 95 percent Wilson interval."""
    if rounds < 1:
        raise ValueError("need at least one round")
    base = prepared_state(ham, prepare)
    accepted = 0
    for _ in range(rounds):
        _, _, ok = honest_round(ham, params, rng, delegated=delegated,
                                source=source, base=base)
        accepted += int(ok)
    low, high = wilson_interval(accepted, rounds)
    return {"rounds": rounds, "accepted": accepted,
            "value": accepted / rounds, "low": low, "high": high}


def target_rate(params: GameParams) -> float:
    """Benchmark completeness rate for a prover holding energy alpha.

    The teleport clause is an idealization: it credits the full energy
    deficit, while measurement statistics only ever show half of it (see
    physical_rate).  The benchmark is kept as stated so the gap stays
    visible instead of being papered over.
    """
    kappa = params.kappa
    return (0.5 * (1.0 - kappa) * (1.0 + HONEST_CHSH)
            + kappa * (1.0 - params.alpha / 4.0))


def physical_rate(params: GameParams) -> float:
    """Exact honest acceptance when the data register has energy alpha.

    Teleport rounds auto-accept on a basis mismatch (probability one half)
    and otherwise display a sampled term, giving (3 - alpha)/4 overall.
    """
    kappa = params.kappa
    return (0.5 * (1.0 - kappa) * (1.0 + HONEST_CHSH)
            + kappa * (3.0 - params.alpha) / 4.0)


def anticommutator_norm(a, b) -> float:
    """Spectral norm of {Z-parity(a), X-parity(b)}: 0 when the overlap is
    odd, 2 when it is even."""
    a = tuple(int(t) for t in a)
    b = tuple(int(t) for t in b)
    if len(a) != len(b):
        raise ValueError("support vectors must have equal length")
    za = pauli_string("Z", a)
    xb = pauli_string("X", b)
    return float(np.linalg.norm(za @ xb + xb @ za, 2))
