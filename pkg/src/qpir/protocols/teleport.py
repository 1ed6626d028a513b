"""Teleport every message to the user, then fetch only the target's correction privately."""
from __future__ import annotations

import numpy as np

from ..cpir import SERVER1, check_index, decode_outcome, encode_outcomes, retrieve, xor_exchange
from ..errors import DimensionMismatchError
from ..ledger import USER, Measurement, Output, PassBoundary, Transcript
from ..qcore.register import (
    BellOutcome,
    QuantumRegister,
    apply_operator,
    as_chooser,
    bell_measure,
    max_entangled,
    pauli_correction,
    tensor,
)
from .messages import DENSITY, PURE, MessageSet
from .queries import make_queries
from .session import ProtocolConfig, SessionResult, share_pair


def teleport(state: QuantumRegister, pair: QuantumRegister, rng, target: str | None = None):
    """Bell-measure ``(pair.labels[1], target)``; the receiver ``pair.labels[0]`` is left with
    ``X^a Z^{-b}`` applied to the teleported state.

    Returns ``(BellOutcome, remaining register)``. Other factors of ``state``
    (e.g. a purifying reference) stay in the remaining register.
    """
    target = target or state.labels[0]
    recv, send = pair.labels
    if state.dim_of(target) != pair.dim_of(send) or pair.dim_of(recv) != pair.dim_of(send):
        raise DimensionMismatchError("teleported qudit and entangled pair must share one dimension")
    outcome, rest = bell_measure(tensor(state, pair), send, target, rng)
    return outcome, rest


def purify(rho: np.ndarray, system: str, reference: str) -> QuantumRegister:
    """Pure state on ``(system, reference)`` whose marginal on ``system`` is ``rho``."""
    lam, vecs = np.linalg.eigh(rho)
    lam = np.clip(lam, 0.0, None)
    d = rho.shape[0]
    amps = (vecs * np.sqrt(lam)[None, :]).reshape(-1)  # sum_i sqrt(lam_i) |e_i>|i>
    return QuantumRegister((d, d), (system, reference), amps / np.linalg.norm(amps))


def _message_register(messages: MessageSet, l: int) -> QuantumRegister:
    if messages.kind == PURE:
        return QuantumRegister((messages.dims[l - 1],), (f"X{l}",), messages[l])
    return purify(messages[l], f"X{l}", f"R{l}")


def run_protocol1(messages: MessageSet, k: int, rng, config: ProtocolConfig | None = None,
                  query_bits=None) -> SessionResult:
    config = config or ProtocolConfig("teleport")
    if messages.kind not in (PURE, DENSITY):
        raise DimensionMismatchError("the teleportation protocol takes pure states or density matrices")
    F = messages.F
    k = check_index(k, F)
    chooser = as_chooser(rng)
    tr = Transcript()
    tr.record(PassBoundary(1))

    # the server teleports every message; all its copies are consumed.
    outcomes: list[BellOutcome] = []
    received: dict[int, QuantumRegister] = {}
    for l in range(1, F + 1):
        d = messages.dims[l - 1]
        share_pair(tr, (USER, SERVER1), d, config.upload_entanglement)
        pair = max_entangled(d, (f"Y{l}", f"Y'{l}"))
        m, rest = teleport(_message_register(messages, l), pair, chooser, target=f"X{l}")
        tr.record(Measurement(SERVER1, "bell", f"Y'{l},X{l}", (m.a, m.b)))
        outcomes.append(m)
        received[l] = rest

    # classical PIR for the target's outcome.
    records = encode_outcomes([(m.a, m.b) for m in outcomes], messages.dims)
    if config.cpir == "xor2":
        qp = make_queries(F, k, chooser, query_bits=query_bits, inject=config.inject)
        record, events = xor_exchange(records, qp.q, qp.qprime)
    else:
        record, events = retrieve("trivial", records, k, chooser)
    tr.extend(events)
    a, b = decode_outcome(record)

    # undo the byproduct on the target.
    d = messages.dims[k - 1]
    out = apply_operator(received[k], pauli_correction(d, a, b), f"Y{k}")
    if messages.kind == PURE:
        target = QuantumRegister((d,), (f"Y{k}",), messages[k])
    else:
        target = purify(messages[k], f"Y{k}", f"R{k}")
        out = out.reorder(target.labels)
    tr.record(Output(out.labels, True))
    details = {
        "outcomes": [(m.a, m.b) for m in outcomes],
        "retrieved": (a, b),
        "destroyed": list(range(1, F + 1)),
    }
    return SessionResult("teleport", k, True, out, target, 1, tr, details)
