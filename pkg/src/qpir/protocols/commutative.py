"""Two-server retrieval of one of F pairwise-commuting unitaries, plus column post-selection."""
from __future__ import annotations

import numpy as np

from ..cpir import SERVER1, SERVER2, check_index
from ..errors import QPIRError
from ..ledger import USER, Measurement, Output, PassBoundary, QuerySent, Transcript
from ..qcore.linalg import vectorize
from ..qcore.register import QuantumRegister, apply_operator, as_chooser, max_entangled, measure_computational
from .messages import UNITARIES, MessageSet
from .queries import QueryPair, make_queries
from .session import ProtocolConfig, SessionResult, deliver, servers_pair


def subset_product(messages: MessageSet, bits, conjugate: bool = False) -> np.ndarray:
    d = messages.d
    M = np.eye(d, dtype=complex)
    for sel, U in zip(bits, messages.payload):
        if sel:
            M = M @ (U.conj() if conjugate else U)
    return M


def commutative_answers(messages: MessageSet, qp: QueryPair, k: int | None = None,
                        leak: bool = False) -> dict[str, QuantumRegister]:
    """Registers the user receives for one query pair.

    Pair ``a`` lives on ``(A, A')`` and pair ``b`` on ``(B, B')``; server 1
    acts on the unprimed halves, server 2 on the primed ones. With ``leak``
    server 1 also appends the vectorized message after ``k``.
    """
    d = messages.d
    pa = max_entangled(d, ("A", "A'"))
    pa = apply_operator(pa, subset_product(messages, qp.q.bits), "A")
    pa = apply_operator(pa, subset_product(messages, qp.qprime.bits, conjugate=True), "A'")
    pb = max_entangled(d, ("B", "B'"))
    pb = apply_operator(pb, subset_product(messages, qp.t.bits), "B")
    pb = apply_operator(pb, subset_product(messages, qp.tprime.bits, conjugate=True), "B'")
    out = {"a": pa, "b": pb}
    if leak:
        out["leak"] = vectorize(messages[k % messages.F + 1], labels=("L", "L'"))
    return out


def postselect_column(state: QuantumRegister, rng):
    """Measure the second qudit of ``|U>>/sqrt(d)``; outcome 0 leaves ``U|0>`` on the first.

    Returns ``(success, register_or_None, outcome)``; success has probability
    exactly ``1/d`` for unitary ``U``.
    """
    x, rest = measure_computational(state, state.labels[1], rng)
    return x == 0, (rest if x == 0 else None), x


def _send(tr: Transcript, messages: MessageSet, answers, upload: bool) -> None:
    d = messages.d
    for _ in ("a", "b"):
        servers_pair(tr, d, upload)
    deliver(tr, SERVER1, (d, d))
    deliver(tr, SERVER2, (d, d))
    if "leak" in answers:
        deliver(tr, SERVER1, (d, d))


def run_protocol2(messages: MessageSet, k: int, rng, config: ProtocolConfig | None = None,
                  query_bits=None) -> SessionResult:
    config = config or ProtocolConfig("commutative")
    if messages.kind != UNITARIES:
        raise QPIRError("the commutative protocol takes unitary messages")
    messages.require_commuting()
    F, d = messages.F, messages.d
    k = check_index(k, F)
    chooser = as_chooser(rng)
    tr = Transcript()
    qp = make_queries(F, k, chooser, query_bits=query_bits, inject=config.inject)
    tr.record(QuerySent(SERVER1, qp.q.bits))
    tr.record(QuerySent(SERVER2, qp.qprime.bits))
    keep, other = ("a", "b") if qp.q[k - 1] == 1 else ("b", "a")
    leak = config.inject == "leak-message"

    if not config.postselect:
        tr.record(PassBoundary(1))
        answers = commutative_answers(messages, qp, k, leak)
        _send(tr, messages, answers, config.upload_entanglement)
        out = answers[keep]
        tr.record(Output(out.labels, True))
        details = {"q": qp.q.bits, "qprime": qp.qprime.bits, "kept": out.labels,
                   "discarded": answers[other], "answers": answers}
        target = vectorize(messages[k], labels=out.labels)
        return SessionResult("commutative", k, True, out, target, 1, tr, details)

    # Repeat-until-success column post-selection; queries are reused.
    limit = config.max_passes or 64 * d
    target = QuantumRegister((d,), ("A",), messages[k][:, 0])
    passes = 0
    while passes < limit:
        passes += 1
        tr.record(PassBoundary(passes))
        answers = commutative_answers(messages, qp, k, leak)
        _send(tr, messages, answers, config.upload_entanglement)
        ok, col, x = postselect_column(answers[keep], chooser)
        tr.record(Measurement(USER, "basis", answers[keep].labels[1], (x,)))
        if ok:
            tr.record(Output(col.labels, True))
            return SessionResult("commutative", k, True, col, target, passes, tr, {"q": qp.q.bits})
    tr.record(Output((), False))
    return SessionResult("commutative", k, False, None, target, passes, tr, {"q": qp.q.bits})
