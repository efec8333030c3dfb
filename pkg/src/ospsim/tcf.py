"""Toy claw-free function families with trapdoor decoders.

Two families over n input bits, both built from an explicit random
permutation pi of the output space:

* plain: F(x) = pi(fold(x)) with fold(x) = min(x, x xor shift), an exactly
  2-to-1 function whose claws are the pairs {x, x xor shift}.
* dual: F(b, x) over a branch bit and n input bits.  In lossy mode inputs
  whose k-bit prefix lands in a chosen set S collide across branches
  (F(0, x) = F(1, x xor shift)); everything else, and all of disjoint mode,
  is tagged injectively by branch.

No hardness is claimed anywhere.  The public object carries the full
function table; decoding without the secret is easy by design.  What the
toy families provide is the exact combinatorial structure the protocols
need: balanced claws, a claw fraction of exactly delta, and a branch parity
decodable from the trapdoor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gf2, qsim


@dataclass(frozen=True)
class TcfPublic:
    """Public parameters. The function table is carried but never serialized."""

    n: int
    m: int
    mode: str  # plain | disjoint | lossy
    k: int
    perm_seed: int
    table: np.ndarray = field(repr=False, compare=False)

    def serialize(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "mode": self.mode,
            "k": self.k,
            "perm_seed": self.perm_seed,
        }


@dataclass(frozen=True)
class TcfSecret:
    shift: tuple
    prefix_set: frozenset
    perm_inverse: np.ndarray = field(repr=False, compare=False)
    delta_param: Fraction = Fraction(1)
    public: TcfPublic = field(repr=False, compare=False, default=None)

    def serialize(self) -> dict:
        return {
            "shift": gf2.bits_to_text(self.shift),
            "prefix_set": sorted(gf2.bits_to_text(p) for p in self.prefix_set),
            "perm_inverse": [int(v) for v in self.perm_inverse],
            "delta_param": "%d/%d" % (
                self.delta_param.numerator,
                self.delta_param.denominator,
            ),
        }


@dataclass(frozen=True)
class DecodeQuery:
    variant: str  # ClawInvert | PartialInvert | PhaseInvert
    y: tuple
    d: tuple | None = None


def _permutation(perm_seed: int, m: int) -> np.ndarray:
    """Explicit Fisher-Yates table over 2^m entries from a dedicated stream."""
    if m > 20:
        raise ValueError("permutation table limited to m <= 20")
    stream = np.random.Generator(np.random.PCG64(perm_seed))
    table = np.arange(1 << m, dtype=np.int64)
    for i in range(len(table) - 1, 0, -1):
        j = int(stream.integers(0, i + 1))
        table[i], table[j] = table[j], table[i]
    return table


def gen(family: str, mu: int, n: int, k: int, delta, seed: int):
    """Generate a (TcfPublic, TcfSecret) pair.

    family "plain" ignores mu and requires k=0, delta=1.  family "dual"
    produces the lossy map when mu=1 and the branch-disjoint map when mu=0.
    """
    delta = Fraction(delta)
    if n + 2 > 20:
        raise ValueError("n + 2 must stay within the 20-qubit dense budget")
    if n < 1:
        raise ValueError("need at least one input bit")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if (delta * (1 << k)).denominator != 1:
        raise ValueError("delta * 2^k must be integral")
    rng = np.random.default_rng(seed)
    perm_seed = int(rng.integers(0, 1 << 63))

    if family == "plain":
        if k != 0 or delta != 1:
            raise ValueError("plain family supports only k=0, delta=1")
        m = n
        shift_int = int(rng.integers(1, 1 << n))
        perm = _permutation(perm_seed, m)
        xs = np.arange(1 << n, dtype=np.int64)
        folded = np.minimum(xs, xs ^ shift_int)
        table = perm[folded]
        pp = TcfPublic(n=n, m=m, mode="plain", k=0, perm_seed=perm_seed, table=table)
        sp = TcfSecret(
            shift=gf2.int_to_bits(shift_int, n),
            prefix_set=frozenset({()}),
            perm_inverse=_invert_perm(perm),
            delta_param=Fraction(1),
            public=pp,
        )
        return pp, sp

    if family != "dual":
        raise ValueError("family must be 'plain' or 'dual'")
    if k >= n and mu:
        raise ValueError("lossy mode needs at least one non-prefix bit")
    m = n + 2
    mode = "lossy" if mu else "disjoint"
    # Shift is zero on the k prefix bits and nonzero on the rest.
    suffix = int(rng.integers(1, 1 << (n - k))) if mu else int(rng.integers(0, 1 << (n - k)))
    shift_int = suffix  # prefix bits are the high bits; suffix occupies the low ones
    size = int(delta * (1 << k))
    prefixes = rng.permutation(1 << k)[:size]
    prefix_set = frozenset(gf2.int_to_bits(int(p), k) for p in prefixes)
    perm = _permutation(perm_seed, m)

    xs = np.arange(1 << n, dtype=np.int64)
    table = np.empty((2, 1 << n), dtype=np.int64)
    if mode == "lossy":
        if k == 0:
            in_s = np.full(1 << n, bool(prefix_set))
        else:
            shifted = xs >> (n - k)
            in_s = np.zeros(1 << n, dtype=bool)
            for p in prefix_set:
                in_s |= shifted == gf2.bits_to_int(p)
        for b in (0, 1):
            branch_code = (1 << (n + 1)) | (xs << 1) | b
            claw_code = xs ^ (shift_int if b else 0)
            table[b] = np.where(in_s, perm[claw_code], perm[branch_code])
    else:
        for b in (0, 1):
            table[b] = perm[(1 << (n + 1)) | (xs << 1) | b]
    pp = TcfPublic(n=n, m=m, mode=mode, k=k, perm_seed=perm_seed, table=table)
    sp = TcfSecret(
        shift=gf2.int_to_bits(shift_int, n),
        prefix_set=prefix_set,
        perm_inverse=_invert_perm(perm),
        delta_param=delta,
        public=pp,
    )
    return pp, sp


def _invert_perm(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm), dtype=perm.dtype)
    return inv


def eval(pp: TcfPublic, b: int, x) -> tuple:
    """Evaluate the family map; b is ignored for the plain family."""
    x = tuple(int(v) for v in x)
    if len(x) != pp.n:
        raise ValueError("input must have %d bits" % pp.n)
    xi = gf2.bits_to_int(x)
    if pp.mode == "plain":
        y = int(pp.table[xi])
    else:
        y = int(pp.table[int(b) & 1][xi])
    return gf2.int_to_bits(y, pp.m)


def _prefix_in_set(sp: TcfSecret, x_int: int) -> bool:
    pp = sp.public
    prefix = gf2.int_to_bits(x_int >> (pp.n - pp.k), pp.k) if pp.k else ()
    return prefix in sp.prefix_set


def decode(sp: TcfSecret, query: DecodeQuery):
    """Trapdoor decode. Returns the variant's value, or None for bottom."""
    pp = sp.public
    y = tuple(int(v) for v in query.y)
    if len(y) != pp.m:
        raise ValueError("y must have %d bits" % pp.m)
    w = int(sp.perm_inverse[gf2.bits_to_int(y)])
    shift_int = gf2.bits_to_int(sp.shift)

    if query.variant == "ClawInvert":
        if pp.mode == "plain":
            if w < (w ^ shift_int):
                return (gf2.int_to_bits(w, pp.n), gf2.int_to_bits(w ^ shift_int, pp.n))
            return None
        if pp.mode == "lossy" and w < (1 << pp.n) and _prefix_in_set(sp, w):
            return (gf2.int_to_bits(w, pp.n), gf2.int_to_bits(w ^ shift_int, pp.n))
        return None

    if pp.mode == "plain":
        raise ValueError("%s is undefined for the plain family" % query.variant)

    if query.variant == "PartialInvert":
        out = set()
        if w >= (1 << (pp.n + 1)):  # branch-tagged image 1||x||b
            out.add(w & 1)
        elif pp.mode == "lossy" and w < (1 << pp.n) and _prefix_in_set(sp, w):
            out = {0, 1}
        return frozenset(out)

    if query.variant == "PhaseInvert":
        if query.d is None or len(query.d) != pp.n:
            raise ValueError("PhaseInvert needs an n-bit d")
        if pp.mode == "lossy" and w < (1 << pp.n) and _prefix_in_set(sp, w):
            return gf2.dot(tuple(query.d), sp.shift)
        return None

    raise ValueError("unknown decode variant %r" % query.variant)


def claw_invert(sp, y):
    return decode(sp, DecodeQuery("ClawInvert", tuple(y)))


def partial_invert(sp, y):
    return decode(sp, DecodeQuery("PartialInvert", tuple(y)))


def phase_invert(sp, y, d):
    return decode(sp, DecodeQuery("PhaseInvert", tuple(y), tuple(d)))


def superposition_descriptor(pp: TcfPublic, with_bit_register: bool = False):
    """Descriptor of the uniform input superposition over the family domain."""
    if with_bit_register:
        basis = [gf2.int_to_bits(1 << (pp.n - 1 - i), pp.n) for i in range(pp.n)]
        zero = (0,) * pp.n
        return qsim.AffineBranchState(pp.n, tuple(basis), zero, zero)
    return qsim.UniformRegister(pp.n)


def claw_oracle(pp: TcfPublic) -> dict:
    """Brute-force map from image int to the tuple of its preimages.

    Preimages are x tuples for the plain family and (b, x) pairs for the
    dual family. Ground truth for all decode tests; n <= 12 only.
    """
    if pp.n > 12:
        raise ValueError("claw_oracle limited to n <= 12")
    out: dict = {}
    if pp.mode == "plain":
        for xi in range(1 << pp.n):
            y = int(pp.table[xi])
            out.setdefault(y, []).append(gf2.int_to_bits(xi, pp.n))
    else:
        for b in (0, 1):
            for xi in range(1 << pp.n):
                y = int(pp.table[b][xi])
                out.setdefault(y, []).append((b, gf2.int_to_bits(xi, pp.n)))
    return {y: tuple(v) for y, v in out.items()}


# Uniform "plain view" used by the claw-state generator: the plain family is
# itself, the dual lossy family is read as a 2-to-1-or-1-to-1 function over
# n+1 input bits (branch bit joined in front of x).


def plain_view_width(pp: TcfPublic) -> int:
    return pp.n if pp.mode == "plain" else pp.n + 1


def plain_view_eval(pp: TcfPublic, u) -> tuple:
    if pp.mode == "plain":
        return eval(pp, 0, u)
    u = tuple(int(v) for v in u)
    if len(u) != pp.n + 1:
        raise ValueError("plain view input must have %d bits" % (pp.n + 1))
    return eval(pp, u[0], u[1:])


def plain_view_claw_invert(sp: TcfSecret, y):
    """Claw of y in the plain view, ordered with the lower branch first."""
    claw = claw_invert(sp, y)
    if claw is None:
        return None
    x0, x1 = claw
    if sp.public.mode == "plain":
        return (x0, x1)
    return ((0,) + x0, (1,) + x1)


def plain_view_delta(sp: TcfSecret) -> Fraction:
    if sp.public.mode == "plain":
        return Fraction(1)
    if sp.public.mode == "disjoint":
        return Fraction(0)
    return sp.delta_param
