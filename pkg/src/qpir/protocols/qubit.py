"""Two-server symmetric retrieval of one of F qubit states (repeat until success, p = 1/2 per pass)."""
from __future__ import annotations

import numpy as np

from ..cpir import SERVER1, SERVER2, check_index
from ..errors import QPIRError
from ..ledger import USER, Measurement, Output, PassBoundary, QuerySent, Transcript
from ..params import QubitParams, decompose, phase_s, rotation_r
from ..qcore.linalg import pauli_power
from ..qcore.register import (
    QuantumRegister,
    apply_operator,
    as_chooser,
    bell_measure,
    max_entangled,
    measure_computational,
    tensor,
)
from .messages import PURE, MessageSet
from .queries import QueryPair, make_queries
from .session import ProtocolConfig, SessionResult, deliver, servers_pair

Y = rotation_r(2, 1, np.pi / 2)  # = XZ


def qubit_params(messages: MessageSet) -> list[QubitParams]:
    if messages.kind != PURE or messages.d != 2:
        raise QPIRError("the qubit protocol takes pure qubit states")
    return [decompose(m) for m in messages.payload]


def qubit_answers(params: list[QubitParams], qp: QueryPair, k: int | None = None,
                  leak_state: np.ndarray | None = None) -> dict[str, QuantumRegister]:
    """One pass of server answers: rotation pair on ``(A, A')`` and phase pair on ``(B, B')``."""
    th1 = sum(p.theta for p, s in zip(params, qp.q.bits) if s)
    th2 = sum(p.theta for p, s in zip(params, qp.qprime.bits) if s)
    ph1 = sum(p.phi for p, s in zip(params, qp.q.bits) if s)
    ph2 = sum(p.phi for p, s in zip(params, qp.qprime.bits) if s)
    pa = max_entangled(2, ("A", "A'"))
    pa = apply_operator(pa, rotation_r(2, 1, -th1), "A")
    pa = apply_operator(pa, rotation_r(2, 1, -th2), "A'")
    pb = max_entangled(2, ("B", "B'"))
    pb = apply_operator(pb, phase_s(2, ph1, qubit=True), "B")
    pb = apply_operator(pb, phase_s(2, ph2, qubit=True).conj(), "B'")
    out = {"a": pa, "b": pb}
    if leak_state is not None:
        out["leak"] = QuantumRegister((2,), ("L",), leak_state)
    return out


def reconstruct_pass(answers: dict[str, QuantumRegister], q_k: int, chooser):
    """User side of one pass; returns ``(success, output_or_None, (a, b, x))``."""
    (a, b, _), ab = bell_measure(tensor(answers["a"], answers["b"]), "A'", "B'", chooser)
    ab = apply_operator(ab, np.linalg.matrix_power(Y, a).conj().T, "A")
    ab = apply_operator(ab, pauli_power(2, 0, a + b), "B")
    x, rest = measure_computational(ab, "A", chooser)
    if q_k == 1 and x == 0:
        return True, rest, (a, b, x)
    if q_k == 0 and x == 1:
        return True, apply_operator(rest, pauli_power(2, 1, 0), "B"), (a, b, x)
    return False, None, (a, b, x)


def run_protocol3(messages: MessageSet, k: int, rng, config: ProtocolConfig | None = None,
                  query_bits=None) -> SessionResult:
    config = config or ProtocolConfig("qubit")
    params = qubit_params(messages)
    F = messages.F
    k = check_index(k, F)
    chooser = as_chooser(rng)
    tr = Transcript()
    qp = make_queries(F, k, chooser, query_bits=query_bits, inject=config.inject)
    tr.record(QuerySent(SERVER1, qp.q.bits))
    tr.record(QuerySent(SERVER2, qp.qprime.bits))
    leak = messages[k % F + 1] if config.inject == "leak-message" else None
    q_k = qp.q[k - 1]
    target = messages.state(k, "B")
    limit = config.max_passes or 64 * 2
    outcomes = []
    for n in range(1, limit + 1):
        tr.record(PassBoundary(n))
        answers = qubit_answers(params, qp, k, leak)
        for _ in ("a", "b"):
            servers_pair(tr, 2, config.upload_entanglement)
        deliver(tr, SERVER1, (2, 2))
        deliver(tr, SERVER2, (2, 2))
        if leak is not None:
            deliver(tr, SERVER1, (2,))
        ok, out, (a, b, x) = reconstruct_pass(answers, q_k, chooser)
        tr.record(Measurement(USER, "bell", "A',B'", (a, b)))
        tr.record(Measurement(USER, "basis", "A", (x,)))
        outcomes.append((a, b, x))
        if ok:
            tr.record(Output(out.labels, True))
            return SessionResult("qubit", k, True, out, target, n, tr, {"q": qp.q.bits, "outcomes": outcomes})
    tr.record(Output((), False))
    return SessionResult("qubit", k, False, None, target, limit, tr, {"q": qp.q.bits, "outcomes": outcomes})
