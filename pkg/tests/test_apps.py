"""Tests for the application-layer protocols."""

import json
import math

import numpy as np
import pytest

from ospsim import apps, gadgets, gf2, osp, qsim, tcf

COS2 = (2.0 + math.sqrt(2.0)) / 4.0


def rng_for(seed):
    return np.random.default_rng(seed)


# ------------------------------------------------------------- quantumness


def test_poq_accept_predicate_via_perfect_prover():
    rng = rng_for(11)
    for _ in range(50):
        round_ = apps.poq_run(rng, apps.ScriptedProver("perfect"))
        assert round_.accept
        assert round_.answer == round_.s ^ (round_.r & round_.challenge)


def test_poq_honest_rate_rough():
    rng = rng_for(12)
    rate = apps.poq_rate(4000, rng)
    assert abs(rate - COS2) < 0.03


def test_poq_zero_prover_rate():
    rng = rng_for(13)
    rate = apps.poq_rate(4000, rng, lambda: apps.ScriptedProver("zero"))
    assert abs(rate - 0.5) < 0.04


def test_poq_branch_prover_rate():
    rng = rng_for(14)
    rate = apps.poq_rate(6000, rng, lambda: apps.ScriptedProver("branch"))
    assert abs(rate - 0.75) < 0.03


def test_poq_unknown_rule_rejected():
    with pytest.raises(ValueError):
        apps.ScriptedProver("psychic")


def test_rewind_perfect_prover_recovers_r():
    rng = rng_for(15)
    for _ in range(100):
        res = apps.rewind_extract(apps.ScriptedProver("perfect"), rng)
        assert res.guess == res.truth


def test_rewind_uniform_prover_is_chance():
    rng = rng_for(16)
    hits = 0
    trials = 2000
    for _ in range(trials):
        res = apps.rewind_extract(apps.ScriptedProver("uniform"), rng)
        hits += res.guess == res.truth
    assert abs(hits / trials - 0.5) < 3 * 0.5 / math.sqrt(trials)


def test_rewind_accuracy_prover_beats_union_bound():
    p0, p1 = 0.9, 0.8
    rng = rng_for(17)
    trials = 10_000
    hits = 0
    for _ in range(trials):
        res = apps.rewind_extract(apps.ScriptedProver("accuracy", p0, p1), rng)
        hits += res.guess == res.truth
    rate = hits / trials
    exact = p0 * p1 + (1 - p0) * (1 - p1)
    assert rate >= p0 + p1 - 1
    assert abs(rate - exact) < 3 * math.sqrt(exact * (1 - exact) / trials)


# -------------------------------------------------- linear-predictor demo


def test_gl_noiseless_exact_recovery():
    rng = rng_for(21)
    for _ in range(100):
        x0 = tuple(int(t) for t in rng.integers(0, 2, 6))
        x1 = tuple(int(t) for t in rng.integers(0, 2, 6))
        oracle = apps.claw_predictor(x0, x1)
        assert apps.gl_extract(oracle, 6, rng) == (x0, x1)


def test_gl_recovers_family_claw():
    rng = rng_for(22)
    pp, sp = tcf.gen("plain", 0, 6, 0, 1, 977)
    x = tuple(int(t) for t in rng.integers(0, 2, 6))
    y = tcf.eval(pp, 0, x)
    x0, x1 = tcf.claw_invert(sp, y)
    oracle = apps.claw_predictor(x0, x1)
    assert apps.gl_extract(oracle, 6, rng) == (x0, x1)


def test_gl_zero_advantage_is_chance():
    rng = rng_for(23)
    hits = 0
    for _ in range(200):
        x0 = tuple(int(t) for t in rng.integers(0, 2, 3))
        x1 = tuple(int(t) for t in rng.integers(0, 2, 3))
        oracle = lambda r0, r1: int(rng.integers(0, 2))
        hits += apps.gl_extract(oracle, 3, rng) == (x0, x1)
    assert hits / 200 <= 0.1


def test_gl_majority_vote_handles_noise():
    rng = rng_for(24)
    good = 0
    for _ in range(100):
        x0 = tuple(int(t) for t in rng.integers(0, 2, 6))
        x1 = tuple(int(t) for t in rng.integers(0, 2, 6))
        oracle = apps.claw_predictor(x0, x1, noise=0.10, rng=rng)
        good += apps.gl_extract(oracle, 6, rng, repetitions=64) == (x0, x1)
    assert good >= 90


# ----------------------------------------------------------------- puzzles


def test_puzzle_roundtrip_passes_both_challenges():
    for challenge in (0, 1):
        result = apps.puzzle_roundtrip(128, 0.78, challenge, rng_for(31),
                                       source="tcf", n=2)
        assert result["verdict"]
        assert result["fraction"] >= 0.78
        assert result["answers"].shape == (128,)


def test_puzzle_solve_consumes_obligation():
    keys = apps.puzzle_keygen(8, rng_for(32), source="ideal")
    obligation = apps.puzzle_obligate(keys, rng_for(33))
    apps.puzzle_solve(obligation, 0, rng_for(34))
    with pytest.raises(ValueError):
        apps.puzzle_solve(obligation, 1, rng_for(35))


def test_puzzle_ideal_fraction_matches_cosine_law():
    result = apps.puzzle_roundtrip(4096, 0.82, 1, rng_for(36), source="ideal")
    assert abs(result["fraction"] - COS2) < 0.02


def test_puzzle_verify_matches_manual_targets():
    rng = rng_for(37)
    keys = apps.puzzle_keygen(32, rng, threshold=0.5, source="tcf", n=2)
    obligation = apps.puzzle_obligate(keys, rng)
    answers = apps.puzzle_solve(obligation, 1, rng)
    _, fraction = apps.puzzle_verify(keys, obligation, answers, 1)
    manual = 0
    for i, (y, d) in enumerate(obligation.reports):
        s = osp.two_round_decode(keys.secrets[i], keys.r, y, d)
        manual += int(answers[i]) == (s ^ keys.r)
    assert fraction == manual / 32


def test_puzzle_replay_attack_needs_r_zero():
    rng = rng_for(38)
    both_count = 0
    for _ in range(60):
        out = apps.puzzle_replay_attack(1024, 0.82, rng, source="ideal")
        if out["r"] == 1:
            assert not out["both"]
            assert out["fractions"][1] == 1.0 - out["fractions"][0]
        both_count += out["both"]
    assert 15 <= both_count <= 45


# -------------------------------------------------------------- commitment


def test_commit_honest_roundtrip_accepts():
    rng = rng_for(41)
    for source in ("ideal", "tcf"):
        for bit in (0, 1):
            res = apps.commit_run(bit, 8, rng, source=source)
            assert res.verdict
            assert len(res.s_bits) == 8


def test_binding_probe_zero_state():
    state = qsim.basis_descriptor((0,) * 8).densify()
    pr0, pr1 = apps.binding_probe(state)
    assert pr0 == 1.0
    assert abs(pr1 - 2.0 ** -8) < 1e-12
    assert pr0 + pr1 <= 1.0 + 2.0 ** -8 + 1e-9


def test_binding_probe_random_states_bounded():
    rng = rng_for(42)
    for _ in range(10):
        raw = rng.normal(size=256) + 1j * rng.normal(size=256)
        state = qsim.DenseState(raw / np.linalg.norm(raw))
        pr0, pr1 = apps.binding_probe(state)
        assert pr0 + pr1 <= 1.0 + 2.0 ** -8 + 1e-9


def test_binding_probe_width_limit():
    with pytest.raises(ValueError):
        apps.binding_probe(qsim.basis_descriptor((0,) * 17))


# ------------------------------------------------------- toy commitment, OT


def test_toy_commitment_roundtrip_and_extract():
    rng = rng_for(51)
    com, opening = apps.toy_commit((1, 0, 1), rng)
    assert apps.toy_verify(com, opening)
    assert apps.toy_extract(com) == (1, 0, 1)
    bad = {"seed": opening["seed"], "bits": [0, 0, 1]}
    assert not apps.toy_verify(com, bad)


def test_ot_honest_delivers_chosen_value():
    for variant in ("search", "indistinguishability"):
        for b in (0, 1):
            res = apps.ot_run(variant, b, 6, rng_for(100 + b))
            assert not res.caught
            expected = res.r0 if b == 0 else res.r1
            assert res.receiver_value == expected
            assert len(res.per_index) == 6


def test_ot_per_index_branch_law():
    rng = rng_for(53)
    receiver = apps.OtReceiverParty(1, 5, "search", rng_for(54))
    sender = apps.OtSenderParty(5, "search", rng_for(55))
    apps._drive(receiver, sender)
    for entry in sender.per_index:
        x0, x1, z = receiver.claws[entry["i"]]
        assert x0 ^ x1 == 1
        assert x0 == entry["y"] ^ ((receiver.b ^ entry["b_i"]) & entry["c"])


def test_ot_worked_example_branch_values():
    # x0=1, x1=0, receiver bit 1: the revealed bit is 0 and on measured
    # branch (c, y) = (1, 0) the second sender value equals x0.
    b, x0, x1 = 1, 1, 0
    b_i = b ^ x0 ^ x1
    c, y = 1, 0
    assert b_i == 0
    r1 = y ^ ((1 ^ b_i) & c)
    assert r1 == 1 == x0


def test_ot_cheater_gets_caught():
    caught = 0
    for k in range(20):
        res = apps.ot_run("search", None, 8, rng_for(200 + k),
                          cheat="zero-states")
        caught += res.caught
    assert caught >= 19


def test_ot_transcript_shape():
    res = apps.ot_run("indistinguishability", 0, 4, rng_for(56))
    kinds = [m["kind"] for m in res.transcript]
    assert kinds == ["obligations", "check-set", "openings", "outcome"]
    roles = [m["role"] for m in res.transcript]
    assert roles == ["client", "server", "client", "server"]


def test_ot_rejects_bad_arguments():
    with pytest.raises(ValueError):
        apps.OtReceiverParty(0, 4, "mystery", rng_for(57))
    with pytest.raises(ValueError):
        apps.OtReceiverParty(2, 4, "search", rng_for(58))


# ------------------------------------------------------------ test parties


def test_poq_session_through_parties():
    result, transcript = apps.poq_session(30, rng_for(61), rng_for(62))
    assert result["rounds"] == 30
    assert result["accepted"] == round(result["rate"] * 30)
    kinds = [m["kind"] for m in transcript]
    assert kinds.count("round-params") == 30
    assert kinds.count("verdict") == 30
    assert len(kinds) == 150


def test_poq_session_deterministic_replay():
    first = apps.poq_session(10, rng_for(63), rng_for(64))
    second = apps.poq_session(10, rng_for(63), rng_for(64))
    assert json.dumps(first[1], sort_keys=True) == json.dumps(second[1],
                                                             sort_keys=True)
    assert first[0] == second[0]


# -------------------------------------------------------------------- PKE


def test_pke_roundtrip_exact():
    rng = rng_for(71)
    for _ in range(300):
        m = int(rng.integers(0, 2))
        out = apps.pke_roundtrip(m, rng)
        assert out["decrypted"] == m


def test_pke_mask_identity():
    rng = rng_for(72)
    for _ in range(50):
        m = int(rng.integers(0, 2))
        out = apps.pke_roundtrip(m, rng)
        ct, cl = out["ct"], out["keys"].secret
        x_keys, _ = gadgets.ecnot_dec(cl.b, cl.t0, cl.t1, *ct["report"])
        x_b = x_keys[1] ^ ct["branch"]
        assert ct["masked"] == m ^ x_b


def test_pke_branch_marginal_balanced():
    rng = rng_for(73)
    ones = 0
    for _ in range(1000):
        keys = apps.pke_keygen(rng)
        ones += apps.pke_encrypt(keys.public, 0, rng)["branch"]
    assert 400 <= ones <= 600


def test_pke_rejects_bad_message():
    keys = apps.pke_keygen(rng_for(74))
    with pytest.raises(ValueError):
        apps.pke_encrypt(keys.public, 2, rng_for(75))
