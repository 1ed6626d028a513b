"""Query generation shared by the two-server protocols, and the servers' view of it.

Every protocol draws its queries through :func:`make_queries`, and the user
secrecy audit enumerates :func:`server_views` built on the very same function,
so the audit cannot drift from what the protocols actually send.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from ..cpir import SERVER1, SERVER2, SubsetQuery, check_index, complement_query
from ..errors import QPIRError
from ..qcore.register import Sampler, as_chooser

# Negative controls. ``broken-query``: the user forgets to randomize bit k.
# ``wrong-complement``: the second query flips bits k and k+1. ``leak-message``:
# server 1 appends a non-target message to its answer.
INJECTIONS = ("broken-query", "wrong-complement", "leak-message")


def check_injection(inject: str | None) -> None:
    if inject is not None and inject not in INJECTIONS:
        raise QPIRError(f"unknown injection {inject!r}; expected one of {INJECTIONS}")


@dataclass(frozen=True)
class QueryPair:
    q: SubsetQuery
    qprime: SubsetQuery
    t: SubsetQuery
    tprime: SubsetQuery

    @property
    def F(self) -> int:
        return len(self.q)


def draw_bits(F: int, chooser) -> tuple[int, ...]:
    if isinstance(chooser, Sampler):
        return tuple(int(b) for b in chooser.rng.integers(0, 2, size=F))
    return tuple(chooser.choose((0.5, 0.5)) for _ in range(F))


def make_queries(F: int, k: int, rng=None, query_bits=None, inject: str | None = None) -> QueryPair:
    """User's query pair for target ``k`` (1-based); ``query_bits`` fixes ``q``."""
    k = check_index(k, F)
    check_injection(inject)
    if query_bits is None:
        query_bits = draw_bits(F, as_chooser(rng))
    bits = list(query_bits)
    if len(bits) != F:
        raise QPIRError(f"query of length {len(bits)} for {F} messages")
    if inject == "broken-query":
        bits[k - 1] = 0
    q = SubsetQuery(tuple(bits))
    qp = complement_query(q, k)
    if inject == "wrong-complement" and F > 1:
        qp = complement_query(qp, k % F + 1)
    return QueryPair(q, qp, q.flipped(), qp.flipped())


def chain_flips(q_k: int, coin: int) -> tuple[int, int]:
    """Sign flips requested for the two reconstruction chains of the qudit protocol.

    The forward chain needs flip ``q_k XOR 1`` and the mirror chain flip
    ``q_k``; ``coin`` decides which runs first. Returns ``(first, second)``.
    """
    forward, mirror = q_k ^ 1, q_k
    return (forward, mirror) if coin == 0 else (mirror, forward)


def server_views(protocol: str, F: int, k: int, query_bits, coin: int = 0,
                 inject: str | None = None, cpir: str = "xor2") -> dict[str, tuple]:
    """Classical data each server receives for one setting of the user's randomness."""
    if protocol == "teleport" and cpir == "trivial":
        return {SERVER1: ()}
    qp = make_queries(F, k, query_bits=query_bits, inject=inject)
    views = {SERVER1: qp.q.bits, SERVER2: qp.qprime.bits}
    if protocol == "qudit":
        first, second = chain_flips(qp.q[k - 1], coin)
        views = {s: v + (first,) for s, v in views.items()}
    return views


def randomness_space(protocol: str, F: int):
    """All equally likely settings ``(query_bits, coin)`` of the user's randomness."""
    coins = (0, 1) if protocol == "qudit" else (0,)
    for bits in product((0, 1), repeat=F):
        for c in coins:
            yield bits, c
