from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from qpir.errors import EnumerationBoundError
from qpir.harness import audit_server_secrecy, audit_user_secrecy, child_seed, run_audits, run_trials
from qpir.harness.audit import FAIL, NA, PASS, pure_trace_distance, query_distributions
from qpir.ledger import (
    USER,
    ClassicalSent,
    PairShared,
    PassBoundary,
    QuerySent,
    RequestSent,
    ResourceLedger,
    StateSent,
    Transcript,
)
from qpir.protocols import ProtocolConfig
from qpir.protocols.messages import random_pure_messages, random_unitary_messages
from qpir.qcore import random_state

RNG = np.random.default_rng(2024)
QUBITS = random_pure_messages(3, 2, RNG)
QUTRITS = random_pure_messages(3, 3, RNG)
UNITARIES = random_unitary_messages(3, 2, RNG)


# --- ledger ----------------------------------------------------------------


def test_ledger_fold_rules():
    tr = Transcript([
        QuerySent("server1", (0, 1, 1)),
        ClassicalSent("server1", USER, 5),
        ClassicalSent(USER, "server2", 2),
        StateSent("server1", USER, (2, 3)),
        StateSent(USER, "server2", (4,)),
        PairShared(("server1", "server2"), 4),
        PassBoundary(1),
        RequestSent("server1", "S", 0),
    ])
    led = tr.ledger()
    assert (led.classical_bits_up, led.classical_bits_down) == (5, 5)
    assert led.qubits_down == pytest.approx(1 + np.log2(3))
    assert led.qubits_up == 2 and led.ebits == 2
    assert led.passes == 1 and led.requests == 1


def test_ledger_addition_and_equality():
    a = ResourceLedger.from_events([PairShared(("a", "b"), 3), PassBoundary(1)])
    b = ResourceLedger.from_events([PairShared(("a", "b"), 3), QuerySent("s", (1,))])
    total = a + b
    assert total.pairs[3] == 2 and total.classical_bits_up == 1 and total.passes == 1
    assert total == ResourceLedger.from_events([PairShared(("a", "b"), 3)] * 2 + [PassBoundary(1), QuerySent("s", (1,))])
    assert a != b


def test_server_to_server_detected():
    tr = Transcript([ClassicalSent("server1", "server2", 1), StateSent("server1", USER, (2,))])
    assert tr.server_to_server() == [ClassicalSent("server1", "server2", 1)]


def test_transcript_jsonl_lines():
    tr = Transcript([QuerySent("server1", (1, 0)), PassBoundary(1)])
    lines = tr.to_jsonl().splitlines()
    assert len(lines) == 2 and '"event": "QuerySent"' in lines[0]


# --- trials ----------------------------------------------------------------


def test_child_seed_is_stable_and_distinct():
    assert child_seed(7, 3) == child_seed(7, 3)
    assert len({child_seed(7, i) for i in range(100)}) == 100
    assert child_seed(7, 0) != child_seed(8, 0)


def test_trials_reproducible():
    cfg = ProtocolConfig("qubit")
    a = run_trials(cfg, QUBITS, 2, 30, 5)
    b = run_trials(cfg, QUBITS, 2, 30, 5)
    assert [r.passes for r in a.records] == [r.passes for r in b.records]
    assert a.totals == b.totals and a.summary() == b.summary()


def test_trials_independent_of_workers():
    cfg = ProtocolConfig("qudit")
    a = run_trials(cfg, QUBITS, 1, 12, 3, workers=1)
    b = run_trials(cfg, QUBITS, 1, 12, 3, workers=2)
    assert [(r.seed, r.passes, r.fidelity) for r in a.records] == [(r.seed, r.passes, r.fidelity) for r in b.records]


def test_trial_stats_summary():
    st = run_trials(ProtocolConfig("commutative"), UNITARIES, 1, 5, 0)
    s = st.summary()
    assert s["successes"] == 5 and s["pass_success_rate"] == 1.0
    assert s["mean_qubits_down"]["mean"] == 4 and s["mean_qubits_down"]["stderr"] == 0
    assert s["expected"]["qubits_down"] == 4


def test_trials_reject_zero():
    with pytest.raises(Exception):
        run_trials(ProtocolConfig("qubit"), QUBITS, 1, 0, 0)


# --- user secrecy ----------------------------------------------------------


@pytest.mark.parametrize("protocol,cpir", [("teleport", "xor2"), ("teleport", "trivial"), ("commutative", "trivial"),
                                          ("qubit", "trivial"), ("qudit", "trivial")])
def test_user_secrecy_passes(protocol, cpir):
    sec = audit_user_secrecy(ProtocolConfig(protocol, cpir=cpir), 4)
    assert sec.verdict == PASS
    for entry in sec.metrics["servers"].values():
        assert entry["max_tv_across_targets"] == "0" and entry["max_tv_to_uniform"] == "0"


def test_user_distributions_exact_uniform():
    dists = query_distributions(ProtocolConfig("commutative"), 3, 2)
    for dist in dists.values():
        assert set(dist.values()) == {Fraction(1, 8)} and len(dist) == 8


@pytest.mark.parametrize("protocol", ["commutative", "qubit", "qudit", "teleport"])
def test_broken_query_detected(protocol):
    cfg = ProtocolConfig(protocol, cpir="xor2", inject="broken-query")
    assert audit_user_secrecy(cfg, 3).verdict == FAIL


def test_user_secrecy_bound_refused():
    with pytest.raises(EnumerationBoundError, match="F <= 12"):
        audit_user_secrecy(ProtocolConfig("qubit"), 13)


# --- server secrecy --------------------------------------------------------


def test_pure_trace_distance_stable():
    rng = np.random.default_rng(0)
    a = random_state(4, rng)
    assert pure_trace_distance(a, np.exp(0.3j) * a) <= 1e-15
    b = random_state(4, rng)
    direct = np.sqrt(1 - abs(np.vdot(a, b)) ** 2)
    assert abs(pure_trace_distance(a, b) - direct) <= 1e-12


@pytest.mark.parametrize("protocol,ms", [("commutative", UNITARIES), ("qubit", QUBITS), ("qudit", QUTRITS)])
def test_server_secrecy_passes(protocol, ms):
    rep = run_audits(ProtocolConfig(protocol), ms, "server", k=2, pairs=5, seed=1)
    sec = rep.sections[0]
    assert sec.verdict == PASS and sec.metrics["max_trace_distance"] <= 1e-9


@pytest.mark.parametrize("protocol,ms", [("commutative", UNITARIES), ("qubit", QUBITS), ("qudit", QUTRITS)])
def test_leak_detected(protocol, ms):
    rep = run_audits(ProtocolConfig(protocol, inject="leak-message"), ms, "server", k=1, pairs=5, seed=1)
    assert rep.sections[0].verdict == FAIL


def test_qubit_multi_pass_tail_reported():
    rep = run_audits(ProtocolConfig("qubit"), QUBITS, "server", k=1, pairs=3)
    mp = rep.sections[0].metrics["multi_pass"]
    assert mp["depth"] == 16 and mp["tail_mass"] == pytest.approx(0.5**16)
    assert mp["truncated_distance"] + mp["tail_bound"] <= 1e-9


def test_teleport_server_secrecy_not_applicable():
    rep = run_audits(ProtocolConfig("teleport"), QUBITS, "server")
    assert rep.sections[0].verdict == NA and rep.verdict == PASS


def test_server_audit_bounds_refused():
    big = random_pure_messages(2, 4, np.random.default_rng(0))
    with pytest.raises(EnumerationBoundError, match="d <= 3"):
        run_audits(ProtocolConfig("qudit"), big, "server", pairs=1)
    many = random_pure_messages(5, 2, np.random.default_rng(0))
    with pytest.raises(EnumerationBoundError, match="F <= 4"):
        run_audits(ProtocolConfig("qubit"), many, "server", pairs=1)


def test_server_audit_requires_agreement():
    a = random_pure_messages(2, 2, np.random.default_rng(0))
    b = random_pure_messages(2, 2, np.random.default_rng(1))
    with pytest.raises(Exception, match="agree"):
        audit_server_secrecy(ProtocolConfig("qubit"), [(a, b)], 1)


# --- correctness -----------------------------------------------------------


@pytest.mark.parametrize("protocol,ms", [("commutative", UNITARIES), ("qubit", QUBITS), ("qudit", QUBITS),
                                         ("teleport", random_pure_messages(2, (2, 3), RNG))])
def test_correctness_passes(protocol, ms):
    rep = run_audits(ProtocolConfig(protocol), ms, "correctness")
    sec = rep.sections[0]
    assert sec.verdict == PASS
    assert all(t["method"] == "branch-enumeration" for t in sec.metrics["targets"].values())


def test_qubit_correctness_reports_half():
    sec = run_audits(ProtocolConfig("qubit"), QUBITS, "correctness").sections[0]
    for t in sec.metrics["targets"].values():
        assert abs(t["pass_probability_min"] - 0.5) <= 1e-12 and abs(t["pass_probability_max"] - 0.5) <= 1e-12


@pytest.mark.parametrize("protocol,ms", [("commutative", UNITARIES), ("qubit", QUBITS)])
def test_wrong_complement_caught_by_correctness_only(protocol, ms):
    cfg = ProtocolConfig(protocol, inject="wrong-complement")
    rep = run_audits(cfg, ms, "all", pairs=3)
    verdicts = {s.name: s.verdict for s in rep.sections}
    assert verdicts["user-secrecy"] == PASS and verdicts["correctness"] == FAIL and rep.verdict == FAIL


def test_literal_mode_fails_correctness_at_qutrits():
    ms = random_pure_messages(2, 3, np.random.default_rng(1))
    sec = run_audits(ProtocolConfig("qudit", mode="paper-literal"), ms, "correctness").sections[0]
    assert sec.verdict == FAIL and sec.notes


def test_report_dict_shape():
    rep = run_audits(ProtocolConfig("commutative"), UNITARIES, "all", pairs=2)
    d = rep.as_dict()
    assert d["verdict"] == PASS and [s["name"] for s in d["sections"]] == ["user-secrecy", "server-secrecy", "correctness"]
    assert Counter(s["verdict"] for s in d["sections"]) == Counter({PASS: 3})
