"""The retrieval protocols and a single entry point that dispatches on configuration."""
from .commutative import commutative_answers, postselect_column, run_protocol2
from .costs import ExpectedCost, expected_cost
from .messages import MessageSet, pure_messages, unitary_messages, density_messages
from .queries import QueryPair, make_queries
from .qubit import run_protocol3
from .qudit import run_protocol4
from .session import MODES, PROTOCOLS, ProtocolConfig, SessionResult
from .teleport import run_protocol1, teleport

_RUNNERS = {
    "teleport": run_protocol1,
    "commutative": run_protocol2,
    "qubit": run_protocol3,
    "qudit": run_protocol4,
}


def run_session(config: ProtocolConfig, messages: MessageSet, k: int, rng, query_bits=None) -> SessionResult:
    return _RUNNERS[config.protocol](messages, k, rng, config, query_bits=query_bits)


__all__ = [
    "ExpectedCost", "MODES", "MessageSet", "PROTOCOLS", "ProtocolConfig", "QueryPair", "SessionResult",
    "commutative_answers", "density_messages", "expected_cost", "make_queries", "postselect_column",
    "pure_messages", "run_protocol1", "run_protocol2", "run_protocol3", "run_protocol4", "run_session",
    "teleport", "unitary_messages",
]
