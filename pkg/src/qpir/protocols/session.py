"""Session configuration, results, and the event helpers every protocol shares."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..cpir import SCHEMES, SERVER1, SERVER2
from ..errors import QPIRError
from ..ledger import USER, PairShared, ResourceLedger, StateSent, Transcript
from ..qcore.info import fidelity_up_to_phase
from ..qcore.register import QuantumRegister
from .queries import check_injection

PROTOCOLS = ("teleport", "commutative", "qubit", "qudit")
MODES = ("strict", "paper-literal")
SUCCESS_FIDELITY = 1 - 1e-9


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str
    mode: str = "strict"
    cpir: str = "trivial"
    upload_entanglement: bool = False
    max_passes: int | None = None
    postselect: bool = False
    inject: str | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise QPIRError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.mode not in MODES:
            raise QPIRError(f"invalid merge mode {self.mode!r}; expected one of {MODES}")
        if self.cpir not in SCHEMES:
            raise QPIRError(f"unknown classical PIR scheme {self.cpir!r}; expected one of {SCHEMES}")
        if self.max_passes is not None and self.max_passes < 1:
            raise QPIRError("max_passes must be >= 1")
        if self.postselect and self.protocol != "commutative":
            raise QPIRError("post-selection applies to the commutative protocol only")
        check_injection(self.inject)

    def with_(self, **kw) -> "ProtocolConfig":
        return replace(self, **kw)


@dataclass
class SessionResult:
    protocol: str
    k: int
    success: bool
    output: QuantumRegister | None
    target: QuantumRegister | None
    passes: int
    transcript: Transcript
    details: dict = field(default_factory=dict)

    @property
    def ledger(self) -> ResourceLedger:
        return self.transcript.ledger()

    @property
    def fidelity(self) -> float | None:
        if self.output is None or self.target is None:
            return None
        out = self.output.relabel(dict(zip(self.output.labels, self.target.labels)))
        return fidelity_up_to_phase(out, self.target)

    @property
    def correct(self) -> bool:
        f = self.fidelity
        return self.success and f is not None and f >= SUCCESS_FIDELITY


def share_pair(transcript: Transcript, holders: tuple[str, str], d: int, upload: bool) -> None:
    """Provision one maximally entangled pair between ``holders``.

    With ``upload`` the user prepares the pair locally and ships each half to
    its holder instead of consuming pre-shared entanglement.
    """
    if upload:
        for h in holders:
            if h != USER:
                transcript.record(StateSent(USER, h, (d,)))
    else:
        transcript.record(PairShared(holders, d))


def servers_pair(transcript: Transcript, d: int, upload: bool) -> None:
    share_pair(transcript, (SERVER1, SERVER2), d, upload)


def deliver(transcript: Transcript, sender: str, dims: tuple[int, ...]) -> None:
    transcript.record(StateSent(sender, USER, dims))
