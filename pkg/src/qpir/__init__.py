"""Private retrieval of quantum messages from two non-communicating servers."""
from .errors import QPIRError
from .harness import run_audits, run_trials
from .io import load_messages, save_messages
from .ledger import ResourceLedger, Transcript
from .protocols import MessageSet, ProtocolConfig, SessionResult, run_session

__all__ = [
    "MessageSet", "ProtocolConfig", "QPIRError", "ResourceLedger", "SessionResult", "Transcript",
    "load_messages", "run_audits", "run_session", "run_trials", "save_messages",
]
