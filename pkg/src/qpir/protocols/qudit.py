"""Two-server symmetric retrieval of one of F qudit states by entanglement swapping.

The servers can jointly produce vectorized phase and rotation operators of
the target message, with a sign the user selects through a flip bit. The user
chains them by Bell measurements into ``|S(phi) R_{d-1}(theta) ... R_1(theta)>>``
and post-selects its first column.

Merge acceptance, ``strict`` mode: any ``(0, b)`` on the first merge (the
byproduct ``Z^{-b}`` commutes through the diagonal phase) and only ``(0, 0)``
afterwards. ``paper-literal`` mode accepts ``(0, b)`` on every merge and
applies ``Z^{-sum alpha}`` at the end, which is only exact when every later
byproduct is trivial; it exists to measure that discrepancy.
"""
from __future__ import annotations

from math import prod

import numpy as np

from ..cpir import SERVER1, SERVER2, check_index
from ..errors import QPIRError
from ..ledger import USER, Measurement, Output, PassBoundary, QuerySent, RequestSent, Transcript
from ..params import QuditParams, decompose, phase_s, rotation_r
from ..qcore.linalg import bell_basis, pauli_power
from ..qcore.register import QuantumRegister, apply_operator, as_chooser, max_entangled, swap_branches
from .commutative import postselect_column
from .messages import PURE, MessageSet
from .queries import QueryPair, chain_flips, make_queries
from .session import ProtocolConfig, SessionResult, deliver, servers_pair

PHASE = "S"
INVARIANT_TOL = 1e-9


def rotation_label(s: int) -> str:
    return f"R{s}"


def qudit_params(messages: MessageSet) -> list[QuditParams]:
    if messages.kind != PURE:
        raise QPIRError("the qudit protocol takes pure states")
    d = messages.d
    return [decompose(m, d, qudit=True) for m in messages.payload]


def merge_probabilities(d: int, mode: str) -> list[float]:
    """Acceptance probability of each successive merge in one chain attempt."""
    if mode == "strict":
        return [1 / d] + [1 / d**2] * (d - 2)
    return [1 / d] * (d - 1)


def pair_state(params: list[QuditParams], qp: QueryPair, component: str, flip: int) -> QuantumRegister:
    """Joint server answer to one request, on ``(P, P')``.

    With ``sigma = (-1)^flip`` it equals ``|S(sigma (-1)^{q_k+1} phi_k)>>`` for the
    phase component and ``|R_s(sigma (-1)^{q_k} theta_k^s)>>`` for rotation ``s``.
    """
    d = params[0].d
    sigma = -1.0 if flip else 1.0
    reg = max_entangled(d, ("P", "P'"))
    if component == PHASE:
        ph1 = sum((np.asarray(p.phis) for p, b in zip(params, qp.q.bits) if b), np.zeros(d - 1))
        ph2 = sum((np.asarray(p.phis) for p, b in zip(params, qp.qprime.bits) if b), np.zeros(d - 1))
        reg = apply_operator(reg, phase_s(d, sigma * ph1), "P")
        return apply_operator(reg, phase_s(d, sigma * ph2).conj(), "P'")
    s = int(component[1:])
    th1 = sum(p.thetas[s - 1] for p, b in zip(params, qp.q.bits) if b)
    th2 = sum(p.thetas[s - 1] for p, b in zip(params, qp.qprime.bits) if b)
    reg = apply_operator(reg, rotation_r(d, s, -sigma * th1), "P")
    return apply_operator(reg, rotation_r(d, s, -sigma * th2), "P'")


def chain_operator(p: QuditParams, sign: int, upto: int, alpha: int = 0) -> np.ndarray:
    """``Z^alpha S(sign*phi) R_{d-1}(sign*theta) ... R_upto(sign*theta)``."""
    d = p.d
    M = pauli_power(d, 0, alpha) @ phase_s(d, sign * np.asarray(p.phis))
    for s in range(d - 1, upto - 1, -1):
        M = M @ rotation_r(d, s, sign * p.thetas[s - 1])
    return M


def _phase_aligned_error(C: np.ndarray, M: np.ndarray) -> float:
    d = C.shape[0]
    A = C * np.sqrt(d)
    ov = np.vdot(M, A)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(A - phase * M)))


class _Requests:
    """Per-session cache of server answers plus the transcript bookkeeping of each request."""

    def __init__(self, params, qp, tr: Transcript, upload: bool, leak_dim: int | None):
        self.params, self.qp, self.tr, self.upload = params, qp, tr, upload
        self.d = params[0].d
        self.leak_dim = leak_dim
        self.cache: dict[tuple[str, int], np.ndarray] = {}

    def __call__(self, component: str, flip: int) -> np.ndarray:
        key = (component, flip)
        m = self.cache.get(key)
        if m is None:
            m = pair_state(self.params, self.qp, component, flip).tensor_view
            self.cache[key] = m
        tr, d = self.tr, self.d
        tr.record(RequestSent(SERVER1, component, flip))
        tr.record(RequestSent(SERVER2, component, flip))
        servers_pair(tr, d, self.upload)
        deliver(tr, SERVER1, (d,))
        deliver(tr, SERVER2, (d,))
        if self.leak_dim is not None and component == PHASE:
            deliver(tr, SERVER1, (self.leak_dim,))
        return m


def chain_attempt(request, d: int, flip: int, strict: bool, chooser, tr: Transcript | None = None,
                  on_merge=None):
    """One pass of chain building; requests stop at the first rejected merge.

    Returns ``(accepted, chain_matrix, alphas)``; the chain matrix holds the
    amplitudes on ``(X, X')`` after the last accepted merge. ``on_merge(C, s,
    alphas)`` is called after every accepted merge.
    """
    rows = bell_basis(d)
    C = request(PHASE, flip)
    alphas: list[int] = []
    for j, s in enumerate(range(d - 1, 0, -1)):
        P = request(rotation_label(s), flip)
        branches, probs = swap_branches(C, P, rows)
        o = chooser.choose(probs)
        a, b = divmod(o, d)
        if tr is not None:
            tr.record(Measurement(USER, "bell", f"X',{rotation_label(s)}'", (a, b)))
        if a != 0 or (strict and j > 0 and b != 0):
            return False, None, alphas
        C = branches[o] / np.sqrt(probs[o])
        alphas.append((-b) % d)
        if on_merge is not None:
            on_merge(C, s, alphas)
    return True, C, alphas


def finish_chain(C: np.ndarray, alphas: list[int], chooser):
    """Post-select the chain's first column and undo the accumulated phase byproduct."""
    d = C.shape[0]
    ok, col, x = postselect_column(QuantumRegister((d, d), ("X", "X'"), C), chooser)
    if not ok:
        return False, None, x
    return True, apply_operator(col, pauli_power(d, 0, -sum(alphas)), "X"), x


def expected_passes(d: int, mode: str) -> float:
    return 2 * d / prod(merge_probabilities(d, mode))


def run_protocol4(messages: MessageSet, k: int, rng, config: ProtocolConfig | None = None,
                  query_bits=None) -> SessionResult:
    config = config or ProtocolConfig("qudit")
    if config.mode not in ("strict", "paper-literal"):
        raise QPIRError(f"invalid merge mode {config.mode!r}")
    strict = config.mode == "strict"
    params = qudit_params(messages)
    F, d = messages.F, messages.d
    k = check_index(k, F)
    chooser = as_chooser(rng)
    tr = Transcript()
    qp = make_queries(F, k, chooser, query_bits=query_bits, inject=config.inject)
    tr.record(QuerySent(SERVER1, qp.q.bits))
    tr.record(QuerySent(SERVER2, qp.qprime.bits))
    q_k = qp.q[k - 1]
    leak = config.inject == "leak-message"
    request = _Requests(params, qp, tr, config.upload_entanglement, d if leak else None)
    target = messages.state(k, "X")
    pk = params[k - 1]
    forward_flip = q_k ^ 1
    limit = config.max_passes or int(64 * expected_passes(d, config.mode))

    passes = 0
    accepted: list[dict] = []
    rounds: list[dict] = []
    max_invariant_error = 0.0
    while True:
        coin = chooser.choose((0.5, 0.5))
        chains = {}
        for flip in chain_flips(q_k, coin):
            forward = flip == forward_flip
            sign = 1 if forward else -1
            on_merge = None
            if strict:
                def on_merge(C, s, alphas, sign=sign):
                    nonlocal max_invariant_error
                    exact = chain_operator(pk, sign, s, alphas[0])
                    max_invariant_error = max(max_invariant_error, _phase_aligned_error(C, exact))
            while True:
                if passes >= limit:
                    tr.record(Output((), False))
                    details = _details(qp, accepted, rounds, max_invariant_error, strict, passes)
                    return SessionResult("qudit", k, False, None, target, passes, tr, details)
                passes += 1
                tr.record(PassBoundary(passes))
                ok, C, alphas = chain_attempt(request, d, flip, strict, chooser, tr, on_merge)
                if ok:
                    break
            claimed = chain_operator(pk, sign, 1, sum(alphas))
            chain_fid = float(abs(np.vdot(claimed.reshape(-1) / np.sqrt(d), C.reshape(-1))))
            entry = {"pass": passes, "forward": forward, "alphas": alphas, "chain_fidelity": chain_fid}
            if forward:
                col = pauli_power(d, 0, -sum(alphas)) @ C[:, 0]
                entry["output_fidelity"] = float(abs(np.vdot(messages[k], col / np.linalg.norm(col))))
            accepted.append(entry)
            chains[forward] = (C, alphas)
        C, alphas = chains[True]
        ok, out, x = finish_chain(C, alphas, chooser)
        tr.record(Measurement(USER, "basis", "X'", (x,)))
        rounds.append({"coin": coin, "betas": chains[False][1], "alphas": alphas, "column_outcome": x})
        if ok:
            tr.record(Output(out.labels, True))
            details = _details(qp, accepted, rounds, max_invariant_error, strict, passes)
            return SessionResult("qudit", k, True, out, target, passes, tr, details)


def _details(qp, accepted, rounds, inv_err, strict, passes) -> dict:
    out = {"q": qp.q.bits, "accepted_passes": accepted, "rounds": rounds,
           "pass_success_rate": len(accepted) / passes if passes else 0.0}
    if strict:
        out["max_invariant_error"] = inv_err
    return out
