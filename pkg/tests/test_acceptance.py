"""Acceptance criteria 1 to 11, each checked at its stated tolerance.

Every test records its measured values through the ``criterion`` fixture, so
the terminal summary ends with one PASS/FAIL line per criterion.
"""
import time
from itertools import product
from math import log2

import numpy as np
import pytest

from qpir.harness import run_audits, run_trials
from qpir.harness.audit import FAIL, PASS
from qpir.params import compose_state, decompose
from qpir.protocols import ProtocolConfig, run_session
from qpir.protocols.commutative import postselect_column
from qpir.protocols.costs import qudit_cost, qudit_claimed_figure, qudit_round_cost
from qpir.protocols.messages import random_pure_messages, random_unitary_messages
from qpir.protocols.queries import make_queries
from qpir.protocols.qubit import qubit_answers, qubit_params, reconstruct_pass
from qpir.protocols.qudit import chain_attempt, pair_state, qudit_params
from qpir.qcore import (
    QuantumRegister,
    bell_branches,
    check_entropy_properties,
    enumerate_branches,
    fidelity_up_to_phase,
    generalized_pauli,
    pauli_power,
    random_state,
    random_unitary,
    tensor,
    vectorize,
)

pytestmark = pytest.mark.acceptance

OK = 1 - 1e-9
TRIALS = 10**4


# --- shared Monte Carlo runs -----------------------------------------------


@pytest.fixture(scope="module")
def qubit_run():
    ms = random_pure_messages(3, 2, np.random.default_rng(101))
    t0 = time.perf_counter()
    stats = run_trials(ProtocolConfig("qubit"), ms, 2, TRIALS, 2001)
    return ms, stats, time.perf_counter() - t0


@pytest.fixture(scope="module")
def qudit2_run():
    ms = random_pure_messages(3, 2, np.random.default_rng(102))
    return ms, run_trials(ProtocolConfig("qudit"), ms, 1, TRIALS, 2002)


@pytest.fixture(scope="module")
def qudit3_strict_run():
    ms = random_pure_messages(3, 3, np.random.default_rng(103))
    return ms, run_trials(ProtocolConfig("qudit"), ms, 2, TRIALS, 2003)


# --- 1 ---------------------------------------------------------------------


def test_criterion_01_commutative_exhaustive(criterion):
    t0 = time.perf_counter()
    worst_fid, ledger_ok, sessions = 1.0, True, 0
    for d in (2, 3, 4):
        for F in range(1, 5):
            ms = random_unitary_messages(F, d, np.random.default_rng(10 * d + F))
            for k in range(1, F + 1):
                for bits in product((0, 1), repeat=F):
                    res = run_session(ProtocolConfig("commutative"), ms, k, np.random.default_rng(0), query_bits=bits)
                    sessions += 1
                    worst_fid = min(worst_fid, res.fidelity)
                    led = res.ledger
                    ledger_ok &= (led.classical_bits_up == 2 * F and led.classical_bits_down == 0
                                  and led.qudits_down == {d: 4} and led.pairs == {d: 2}
                                  and abs(led.qubits_down - 4 * log2(d)) == 0 and abs(led.ebits - 2 * log2(d)) == 0)
    dt = time.perf_counter() - t0
    ok = worst_fid >= OK and ledger_ok and dt < 10
    criterion(1, ok, f"{sessions} sessions, min fidelity {worst_fid:.12f}, ledger exact {ledger_ok}, {dt:.1f}s")
    assert ok


# --- 2 ---------------------------------------------------------------------


def test_criterion_02_qubit_protocol(criterion, qubit_run):
    ms, stats, dt = qubit_run
    rate = stats.pass_success_rate
    qubits, _ = stats.mean("quantum_communication")
    ebits, _ = stats.mean("ebits")
    fid = min(r.fidelity for r in stats.records)
    all_ok = stats.successes == TRIALS
    params = qubit_params(ms)
    exact_dev = 0.0
    for k in (1, 2, 3):
        for bits in product((0, 1), repeat=3):
            qp = make_queries(3, k, query_bits=bits)
            answers = qubit_answers(params, qp)
            leaves = enumerate_branches(lambda ch: reconstruct_pass(answers, qp.q[k - 1], ch))
            exact_dev = max(exact_dev, abs(sum(w for _, w, r in leaves if r[0]) - 0.5))
    ok = (abs(rate - 0.5) <= 0.02 and exact_dev <= 1e-12 and abs(qubits - 8) <= 0.3
          and abs(ebits - 4) <= 0.15 and all_ok and fid >= OK and dt < 30)
    criterion(2, ok, f"per-pass {rate:.4f} (exact 1/2 within {exact_dev:.1e}), mean {qubits:.3f} qubits, "
                     f"{ebits:.3f} ebits, min fidelity {fid:.12f}, {dt:.1f}s")
    assert ok


# --- 3 ---------------------------------------------------------------------


def test_criterion_03_per_pass_rate(criterion, qudit2_run):
    ms, stats = qudit2_run
    rate = stats.pass_success_rate
    params = qudit_params(ms)
    exact = []
    for bits in product((0, 1), repeat=3):
        qp = make_queries(3, 1, query_bits=bits)
        for flip in (0, 1):
            req = lambda c, f: pair_state(params, qp, c, f).tensor_view
            leaves = enumerate_branches(lambda ch: chain_attempt(req, 2, flip, True, ch))
            exact.append(sum(w for _, w, r in leaves if r[0]))
    dev = max(abs(p - 0.5) for p in exact)
    ok = abs(rate - 0.5) <= 0.02 and dev <= 1e-12 and stats.successes == TRIALS
    criterion(3, ok, f"chain-attempt per-pass {rate:.4f}, exact 1/2 within {dev:.1e}")
    assert ok


@pytest.mark.xfail(strict=True, reason="the column step succeeds with probability 1/d and repeats the whole "
                                       "round, doubling the expected cost at d=2 to 32 qubits")
def test_criterion_03_full_cost(criterion, qudit2_run):
    _, stats = qudit2_run
    cost, se = stats.mean("quantum_communication")
    claimed = qudit_claimed_figure(2)["qubits"]
    ok = abs(cost - claimed) <= 0.10 * claimed
    criterion(3, ok, f"full average cost {cost:.2f} +/- {se:.2f} qubits vs {claimed:g} +/- 10% "
                     f"(exact expectation {qudit_cost(3, 2).qubits_down:g}; per round {qudit_round_cost(2):g})")
    assert ok


# --- 4 ---------------------------------------------------------------------


def test_criterion_04_literal_mode_discrepancy(criterion):
    ms = random_pure_messages(3, 3, np.random.default_rng(104))
    stats = run_trials(ProtocolConfig("qudit", mode="paper-literal"), ms, 2, 2000, 2004)
    late = [p for r in stats.records for p in r.forward_passes if any(a != 0 for a in p[0][1:])]
    low = sum(1 for p in late if p[2] < 0.99)
    frac = low / len(late) if late else 0.0
    ok = len(late) > 0 and frac >= 0.95
    criterion(4, ok, f"paper-literal: {low}/{len(late)} accepted passes with a later nonzero byproduct "
                     f"have output fidelity < 0.99 ({frac:.3f})")
    assert ok


def test_criterion_04_strict_mode(criterion, qudit3_strict_run):
    ms, stats = qudit3_strict_run
    fid = min(r.fidelity for r in stats.records)
    params = qudit_params(ms)
    exact = []
    for bits in product((0, 1), repeat=3):
        qp = make_queries(3, 2, query_bits=bits)
        for flip in (0, 1):
            req = lambda c, f: pair_state(params, qp, c, f).tensor_view
            leaves = enumerate_branches(lambda ch: chain_attempt(req, 3, flip, True, ch))
            exact.append(sum(w for _, w, r in leaves if r[0]))
    dev = max(abs(p - 1 / 27) for p in exact)
    ok = stats.successes == TRIALS and fid >= OK and dev <= 1e-12
    criterion(4, ok, f"strict: {stats.successes}/{TRIALS} successes, min fidelity {fid:.12f}, "
                     f"per-pass exact 1/27 within {dev:.1e}")
    assert ok


def test_criterion_04_strict_cost_agreement(criterion, qudit3_strict_run):
    _, stats = qudit3_strict_run
    cost, se = stats.mean("quantum_communication")
    analytic = qudit_cost(3, 3).qubits_down
    rel = abs(cost - analytic) / analytic
    ok = rel <= 0.05
    criterion(4, ok, f"strict cost {cost:.1f} +/- {se:.1f} qubits vs analytic {analytic:.1f} ({rel:.2%}); "
                     f"claimed figure {qudit_claimed_figure(3)['qubits']:.1f} not reproduced")
    assert ok


# --- 5 ---------------------------------------------------------------------


def test_criterion_05_teleport_composition(criterion):
    t0 = time.perf_counter()
    ms = random_pure_messages(3, (2, 2, 3), np.random.default_rng(105))
    worst, ebits_ok, uplink_ok, leaves_total = 1.0, True, True, 0
    target_ebits = log2(2) + log2(2) + log2(3)
    for cpir in ("trivial", "xor2"):
        config = ProtocolConfig("teleport", cpir=cpir)
        queries = list(product((0, 1), repeat=3)) if cpir == "xor2" else [None]
        for k in (1, 2, 3):
            for qb in queries:
                leaves = enumerate_branches(lambda ch: run_session(config, ms, k, ch, query_bits=qb))
                leaves_total += len(leaves)
                for _, _, res in leaves:
                    worst = min(worst, res.fidelity)
                    led = res.ledger
                    ebits_ok &= led.pairs == {2: 2, 3: 1} and abs(led.ebits - target_ebits) <= 1e-12
                    if cpir == "xor2":
                        uplink_ok &= led.classical_bits_up == 6
    dt = time.perf_counter() - t0
    ok = worst >= OK and ebits_ok and uplink_ok and dt < 20
    criterion(5, ok, f"{leaves_total} outcome branches, min fidelity {worst:.12f}, ebits exact {ebits_ok}, "
                     f"xor2 uplink 2F {uplink_ok}, {dt:.1f}s")
    assert ok


# --- 6 ---------------------------------------------------------------------


def test_criterion_06_column_postselection(criterion):
    dev = 0.0
    for d in (2, 3, 4):
        _, Z = generalized_pauli(d)
        for U in (Z, random_unitary(d, np.random.default_rng(d))):
            leaves = enumerate_branches(lambda ch: postselect_column(vectorize(U), ch))
            dev = max(dev, abs(sum(w for _, w, r in leaves if r[0]) - 1 / d))
    parts = [f"success probability 1/d within {dev:.1e}"]
    ok = dev <= 1e-12
    for d in (2, 3, 4):
        ms = random_unitary_messages(3, d, np.random.default_rng(60 + d))
        base = run_trials(ProtocolConfig("commutative", postselect=True), ms, 1, TRIALS, 2006 + d)
        up = run_trials(ProtocolConfig("commutative", postselect=True, upload_entanglement=True), ms, 1, TRIALS, 2006 + d)
        c1, _ = base.mean("quantum_communication")
        c2, _ = up.mean("quantum_communication")
        t1, t2 = 4 * d * log2(d), 8 * d * log2(d)
        fid = min(r.fidelity for r in base.records)
        ok &= abs(c1 - t1) <= 0.05 * t1 and abs(c2 - t2) <= 0.05 * t2 and fid >= OK
        parts.append(f"d={d}: {c1:.3f} vs {t1:.3f}, upload {c2:.3f} vs {t2:.3f}")
    criterion(6, ok, ", ".join(parts))
    assert ok


# --- 7 ---------------------------------------------------------------------


def test_criterion_07_user_secrecy(criterion):
    setups = [("teleport", "xor2"), ("teleport", "trivial"), ("commutative", "trivial"),
              ("qubit", "trivial"), ("qudit", "trivial")]
    verdicts = []
    for protocol, cpir in setups:
        msgs = random_pure_messages(10, 2, np.random.default_rng(7))
        for F in range(1, 11):
            ms = type(msgs)(msgs.kind, msgs.payload[:F])
            rep = run_audits(ProtocolConfig(protocol, cpir=cpir), ms, "user", k=1)
            verdicts.append(rep.sections[0].verdict)
    controls = []
    for protocol in ("teleport", "commutative", "qubit", "qudit"):
        ms = random_pure_messages(3, 2, np.random.default_rng(8))
        rep = run_audits(ProtocolConfig(protocol, cpir="xor2", inject="broken-query"), ms, "user")
        controls.append(rep.sections[0].verdict)
    ok = all(v == PASS for v in verdicts) and all(v == FAIL for v in controls)
    criterion(7, ok, f"{verdicts.count(PASS)}/{len(verdicts)} exact audits at TV 0 (F=1..10, all protocols); "
                     f"broken-query control {'FAIL' if all(v == FAIL for v in controls) else 'missed'} "
                     f"on {controls.count(FAIL)}/4 protocols")
    assert ok


# --- 8 ---------------------------------------------------------------------


def test_criterion_08_server_secrecy(criterion):
    parts, ok = [], True
    for protocol in ("commutative", "qubit"):
        rng = np.random.default_rng(80)
        ms = random_unitary_messages(3, 2, rng) if protocol == "commutative" else random_pure_messages(3, 2, rng)
        dist = 0.0
        for k in (1, 2, 3):
            sec = run_audits(ProtocolConfig(protocol), ms, "server", k=k, pairs=20, seed=k).sections[0]
            dist = max(dist, sec.metrics["max_trace_distance"])
            ok &= sec.verdict == PASS
        neg = run_audits(ProtocolConfig(protocol, inject="leak-message"), ms, "server", k=1, pairs=20).sections[0]
        ok &= dist <= 1e-9 and neg.verdict == FAIL
        parts.append(f"{protocol}: max distance {dist:.1e}, leak control {neg.verdict} "
                     f"({neg.metrics['max_trace_distance']:.3f})")
    criterion(8, ok, "; ".join(parts))
    assert ok


# --- 9 ---------------------------------------------------------------------


def test_criterion_09_entropy_suite(criterion):
    rep = check_entropy_properties(np.random.default_rng(9), instances=1000, max_dim=8)
    ok = rep.ok and all(n >= 1000 for n in rep.checked.values())
    criterion(9, ok, f"checked {rep.checked}, violations {len(rep.violations)}")
    assert ok


# --- 10 --------------------------------------------------------------------


def test_criterion_10_bell_rule(criterion):
    rng = np.random.default_rng(10)
    worst_p, worst_f = 0.0, 1.0
    for i in range(500):
        d = 2 + i % 3
        A, B = random_unitary(d, rng), random_unitary(d, rng)
        state = tensor(vectorize(A, labels=("A", "A2")), vectorize(B, labels=("B", "B2")))
        psi = state.reorder(("A2", "B2", "A", "B")).amplitudes
        for (o, p, post) in bell_branches(state, "A2", "B2"):
            phi = pauli_power(d, o.a, o.b).reshape(-1) / np.sqrt(d)
            P = np.kron(np.outer(phi, phi.conj()), np.eye(d * d))
            proj = P @ psi
            p_brute = float(np.vdot(proj, proj).real)
            worst_p = max(worst_p, abs(p - p_brute))
            expect = np.kron(phi, post.amplitudes)
            worst_f = min(worst_f, abs(np.vdot(expect, proj / np.sqrt(p_brute))))
    ok = worst_p <= 1e-9 and worst_f >= OK
    criterion(10, ok, f"500 pairs d<=4: max probability error {worst_p:.1e}, min post-state fidelity {worst_f:.12f}")
    assert ok


# --- 11 --------------------------------------------------------------------


def test_criterion_11_decomposition_round_trip(criterion):
    rng = np.random.default_rng(11)
    worst = 1.0
    for d in range(2, 7):
        for _ in range(500):
            v = random_state(d, rng)
            out = compose_state(decompose(v, qudit=True))
            worst = min(worst, fidelity_up_to_phase(out, QuantumRegister.from_vector(v, ("X",))))
    ok = worst >= OK
    criterion(11, ok, f"2500 states d=2..6, min round-trip fidelity {worst:.12f}")
    assert ok
