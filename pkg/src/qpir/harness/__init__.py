"""Trial batches and the exact audit engine."""
from .audit import (
    FAIL,
    INCONCLUSIVE,
    NA,
    PASS,
    AuditReport,
    AuditSection,
    audit_correctness,
    audit_server_secrecy,
    audit_user_secrecy,
    random_agreeing_pair,
    run_audits,
)
from .trials import TrialStats, child_seed, run_trials

__all__ = [
    "AuditReport", "AuditSection", "FAIL", "INCONCLUSIVE", "NA", "PASS", "TrialStats", "audit_correctness",
    "audit_server_secrecy", "audit_user_secrecy", "child_seed", "random_agreeing_pair", "run_audits", "run_trials",
]
