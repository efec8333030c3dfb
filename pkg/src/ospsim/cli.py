"""Command-line front end for the simulation toolkit.

Every subcommand accepts --seed (defaulting to the OSPSIM_SEED environment
variable, then 0) and prints a short plain-text report.  The two-party
protocols additionally run over TCP: --listen serves the server role of a
single session, --connect dials a listener and plays the client.  With
--out the session transcript (or the run summary, for local Monte-Carlo
commands) is written as JSON.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import apps, cvqc, delegation, harness, osp, qsim, tcf

_BENCH_HAM = "QUBITS 2\nX 0 1 0.5\nZ 0 1 0.5\n"


def _default_seed() -> int:
    try:
        return int(os.environ.get("OSPSIM_SEED", "0"))
    except ValueError:
        return 0


def _add_common(parser, wire=False):
    parser.add_argument("--seed", type=int, default=None,
                        help="run seed (default: $OSPSIM_SEED or 0)")
    parser.add_argument("--trials", type=int, default=None,
                        help="number of rounds or repetitions")
    parser.add_argument("--lambda", dest="lam", type=int, default=None,
                        help="instance count / security parameter")
    parser.add_argument("--n", type=int, default=None,
                        help="claw-function input width")
    parser.add_argument("--delta", type=str, default=None,
                        help="claw density as a fraction, e.g. 1/2")
    parser.add_argument("--out", metavar="FILE", default=None,
                        help="write the transcript or summary as JSON")
    if wire:
        parser.add_argument("--listen", metavar="HOST:PORT", default=None,
                            help="serve one session on this endpoint")
        parser.add_argument("--connect", metavar="HOST:PORT", default=None,
                            help="dial a listening peer")


def _endpoint(text):
    host, _, port = text.rpartition(":")
    if not port.isdigit():
        raise SystemExit("endpoint %r is not HOST:PORT" % text)
    return host or "127.0.0.1", int(port)


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _wire_session(args, protocol, config):
    seed = _seed_of(args)
    if args.listen:
        host, port = _endpoint(args.listen)
        transcript = harness.serve_once(protocol, seed, host, port, config)
    else:
        host, port = _endpoint(args.connect)
        transcript = harness.connect_and_run(protocol, seed, host, port,
                                             config)
    print("session %s role=%s status=%s messages=%d"
          % (transcript.session, transcript.role,
             transcript.outcome["status"], len(transcript.messages)))
    result = transcript.outcome.get("result")
    if result is not None:
        print("result: %s" % json.dumps(result, sort_keys=True, default=str))
    if args.out:
        transcript.save(args.out)
        print("transcript written to %s" % args.out)
    return 0 if transcript.outcome["status"] == "complete" else 1


# ------------------------------------------------------------- subcommands


def cmd_poq(args):
    trials = args.trials if args.trials is not None else 2000
    n = args.n if args.n is not None else 3
    if args.listen or args.connect:
        return _wire_session(args, "poq", {"rounds": trials, "n": n})
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "poq", "rate")
    rate = apps.poq_rate(trials, rng, None, n)
    expected = math.cos(math.pi / 8) ** 2
    print("trials=%d rate=%.6f expected=%.6f" % (trials, rate, expected))
    if args.out:
        _write_json(args.out, {"command": "poq", "seed": seed,
                               "trials": trials, "rate": rate,
                               "expected": expected})
    return 0


def cmd_puzzle(args):
    lam = args.lam if args.lam is not None else 1024
    n = args.n if args.n is not None else 2
    threshold = args.threshold
    source = args.source
    if source == "auto":
        source = "ideal" if lam > 4096 else "tcf"
    seed = _seed_of(args)
    summary = {"command": "puzzle", "seed": seed, "lam": lam,
               "threshold": threshold, "source": source, "challenges": {}}
    code = 0
    for challenge in (0, 1):
        rng = harness.derive_rng(seed, "puzzle", str(challenge))
        out = apps.puzzle_roundtrip(lam, threshold, challenge, rng, source, n)
        print("challenge=%d verdict=%s fraction=%.4f"
              % (challenge, out["verdict"], out["fraction"]))
        summary["challenges"][str(challenge)] = {
            "verdict": bool(out["verdict"]),
            "fraction": out["fraction"],
        }
        if not out["verdict"]:
            code = 1
    if args.out:
        _write_json(args.out, summary)
    return code


def cmd_delegate(args):
    with open(args.circuit, "r", encoding="utf-8") as fh:
        circuit = delegation.parse_circuit(fh.read())
    if not args.input or any(c not in "01" for c in args.input):
        raise SystemExit("--input must be a bit string like 1011")
    bits = tuple(int(c) for c in args.input)
    if len(bits) != circuit.num_qubits:
        raise SystemExit("input has %d bits but the circuit has %d qubits"
                         % (len(bits), circuit.num_qubits))
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "delegate")
    result = delegation.delegate(circuit, bits, rng)
    actual = delegation.unpad_state(result)
    direct = delegation.apply_circuit(qsim.DenseState.from_bits(bits), circuit)
    fid = qsim.fidelity(actual, direct)
    t_count = sum(1 for name, _ in circuit.gates
                  if name in delegation.NON_CLIFFORD_GATES)
    print("qubits=%d gates=%d t-gates=%d" %
          (circuit.num_qubits, len(circuit.gates), t_count))
    print("fidelity=%.12f" % fid)
    if args.out:
        _write_json(args.out, {"command": "delegate", "seed": seed,
                               "qubits": circuit.num_qubits,
                               "gates": len(circuit.gates),
                               "t_gates": t_count, "fidelity": fid,
                               "transcript": result.transcript})
    return 0 if fid >= 1 - 1e-6 else 1


def cmd_ot(args):
    lam = args.lam if args.lam is not None else 8
    config = {"lam": lam, "b": args.b, "variant": args.variant}
    if args.cheat:
        config["cheat"] = args.cheat
    if args.listen or args.connect:
        return _wire_session(args, "ot", config)
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "ot", "local")
    result = apps.ot_run(args.variant, args.b, lam, rng, args.cheat)
    print("variant=%s b=%d caught=%s" %
          (result.variant, args.b, result.caught))
    print("sender r0=%s r1=%s" % (result.r0, result.r1))
    print("receiver value=%s" % (result.receiver_value,))
    if args.out:
        _write_json(args.out, {"command": "ot", "seed": seed, "lam": lam,
                               "variant": args.variant, "b": args.b,
                               "caught": bool(result.caught),
                               "transcript": result.transcript})
    return 0


def cmd_pke(args):
    trials = args.trials if args.trials is not None else 200
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "pke")
    good = 0
    branches = [0, 0]
    for i in range(trials):
        out = apps.pke_roundtrip(i & 1, rng)
        good += out["decrypted"] == out["message"]
        branches[out["ct"]["branch"]] += 1
    print("trials=%d correct=%d branch-counts=%s" % (trials, good, branches))
    if args.out:
        _write_json(args.out, {"command": "pke", "seed": seed,
                               "trials": trials, "correct": good,
                               "branches": branches})
    return 0 if good == trials else 1


def cmd_commit(args):
    lam = args.lam if args.lam is not None else 8
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "commit")
    code = 0
    summary = {"command": "commit", "seed": seed, "lam": lam, "bits": {}}
    for bit in (0, 1):
        res = apps.commit_run(bit, lam, rng)
        print("bit=%d verdict=%s" % (bit, res.verdict))
        summary["bits"][str(bit)] = bool(res.verdict)
        if not res.verdict:
            code = 1
    amps = rng.normal(size=1 << lam) + 1j * rng.normal(size=1 << lam)
    probe = qsim.DenseState(amps / float((abs(amps) ** 2).sum()) ** 0.5)
    pr0, pr1 = apps.binding_probe(probe)
    bound = 1 + 2.0 ** (-lam)
    print("binding probe: pr0+pr1=%.6f bound=%.6f" % (pr0 + pr1, bound))
    summary["binding"] = {"sum": pr0 + pr1, "bound": bound}
    if pr0 + pr1 > bound + 1e-9:
        code = 1
    if args.out:
        _write_json(args.out, summary)
    return code


def cmd_cvqc(args):
    rounds = args.trials if args.trials is not None else 2000
    if args.ham:
        with open(args.ham, "r", encoding="utf-8") as fh:
            ham = cvqc.parse_hamiltonian(fh.read())
    else:
        ham = cvqc.parse_hamiltonian(_BENCH_HAM)
    params = cvqc.GameParams(args.kappa, args.alpha, args.beta)
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "cvqc", "delegated" if args.delegated
                             else "direct")
    est = cvqc.estimate_value(ham, params, rounds, rng,
                              delegated=args.delegated)
    print("rounds=%d accepted=%d value=%.4f ci=[%.4f, %.4f]"
          % (est["rounds"], est["accepted"], est["value"],
             est["low"], est["high"]))
    print("physical=%.4f benchmark=%.4f"
          % (cvqc.physical_rate(params), cvqc.target_rate(params)))
    if args.out:
        _write_json(args.out, {"command": "cvqc", "seed": seed,
                               "delegated": bool(args.delegated),
                               "kappa": args.kappa, "alpha": args.alpha,
                               **est})
    return 0


def cmd_osp_trace(args):
    seed = _seed_of(args)
    rng = harness.derive_rng(seed, "osp-trace", args.path)
    b = args.b
    if args.path == "two-round":
        n = args.n if args.n is not None else 3
        out = osp.two_round_osp(b, rng, n)
    elif args.path == "multi-round":
        n = args.n if args.n is not None else 4
        pp, sp = tcf.gen("plain", 0, n, 0, 1, int(rng.integers(0, 1 << 63)))

        def source(r):
            return osp.differentiate(osp.csg_from_tcf(pp, sp, r), r)

        out = osp.osp_from_csg(source, b, rng)
    else:
        n = args.n if args.n is not None else 2
        lam = args.lam if args.lam is not None else 2
        delta = Fraction(args.delta) if args.delta else Fraction(1, 2)
        out = osp.amplified_two_round_osp(b, lam, rng, n, 1, delta)
    for msg in out.transcript:
        print("%-8s %-16s %s" % (msg["role"], msg["kind"],
                                 json.dumps(msg["payload"], sort_keys=True,
                                            default=str)[:100]))
    if out.aborted:
        print("aborted (no claw survived)")
        return 1
    norm = qsim.projection_norm(out, "OSP")
    print("b=%d s=%d state=%s" % (out.b, out.s, out.receiver_state))
    print("target-projection norm=%.12f" % norm)
    if args.out:
        _write_json(args.out, {"command": "osp-trace", "seed": seed,
                               "path": args.path, "b": out.b, "s": out.s,
                               "norm": norm, "transcript": out.transcript})
    return 0


def cmd_selftest(args):
    from . import acceptance

    only = args.only
    results = acceptance.run_all(only=only)
    failures = sum(1 for r in results if not r.passed)
    print()
    print("%d criteria run, %d failed" % (len(results), failures))
    if args.out:
        _write_json(args.out, [r.to_json() for r in results])
    return 1 if failures else 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ospsim",
        description="simulation toolkit for obliviously prepared qubits "
                    "and the protocols built on them")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("poq", help="quantumness test acceptance rate")
    _add_common(p, wire=True)
    p.set_defaults(func=cmd_poq)

    p = sub.add_parser("puzzle", help="1-of-2 puzzle roundtrip")
    _add_common(p)
    p.add_argument("--threshold", type=float, default=0.82)
    p.add_argument("--source", choices=("auto", "tcf", "ideal"),
                   default="auto")
    p.set_defaults(func=cmd_puzzle)

    p = sub.add_parser("delegate", help="blind-delegate a circuit file")
    _add_common(p)
    p.add_argument("--circuit", required=True, metavar="FILE")
    p.add_argument("--input", required=True, metavar="BITS")
    p.set_defaults(func=cmd_delegate)

    p = sub.add_parser("ot", help="1-of-2 oblivious transfer session")
    _add_common(p, wire=True)
    p.add_argument("--b", type=int, choices=(0, 1), default=0)
    p.add_argument("--variant", choices=("search", "indistinguishability"),
                   default="search")
    p.add_argument("--cheat", choices=("zero-states",), default=None)
    p.set_defaults(func=cmd_ot)

    p = sub.add_parser("pke", help="bit encryption roundtrips")
    _add_common(p)
    p.set_defaults(func=cmd_pke)

    p = sub.add_parser("commit", help="commitment rounds and binding probe")
    _add_common(p)
    p.set_defaults(func=cmd_commit)

    p = sub.add_parser("cvqc", help="energy-test verification game")
    _add_common(p)
    p.add_argument("--kappa", type=float, default=0.2)
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--ham", metavar="FILE", default=None)
    p.add_argument("--delegated", action="store_true")
    p.set_defaults(func=cmd_cvqc)

    p = sub.add_parser("osp-trace", help="verbose single preparation run")
    _add_common(p)
    p.add_argument("--b", type=int, choices=(0, 1), default=0)
    p.add_argument("--path", choices=("two-round", "multi-round",
                                      "amplified"), default="two-round")
    p.set_defaults(func=cmd_osp_trace)

    p = sub.add_parser("selftest", help="run the acceptance checklist")
    _add_common(p)
    p.add_argument("--only", type=int, default=None, metavar="N",
                   help="run a single numbered check")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
