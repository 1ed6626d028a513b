"""Transcript events and the resource ledger folded from them.

The ledger is never updated directly: every counter is a pure fold over the
session transcript, so ``Transcript.ledger()`` is the single source of costs.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from math import log2
from typing import Iterable, NamedTuple, Union

USER = "user"


class QuerySent(NamedTuple):
    server: str
    bits: tuple[int, ...]


class RequestSent(NamedTuple):
    """Classical control message asking a server for one more pair state (unmetered)."""
    server: str
    component: str
    flip: int


class ClassicalSent(NamedTuple):
    sender: str
    receiver: str
    nbits: int


class StateSent(NamedTuple):
    sender: str
    receiver: str
    dims: tuple[int, ...]


class PairShared(NamedTuple):
    holders: tuple[str, str]
    d: int


class Measurement(NamedTuple):
    party: str
    kind: str
    target: str
    outcome: tuple[int, ...]


class PassBoundary(NamedTuple):
    index: int


class Output(NamedTuple):
    labels: tuple[str, ...]
    success: bool


Event = Union[QuerySent, RequestSent, ClassicalSent, StateSent, PairShared, Measurement, PassBoundary, Output]
COMMUNICATION_EVENTS = (QuerySent, RequestSent, ClassicalSent, StateSent)


@dataclass
class ResourceLedger:
    """Costs of one session (or a sum of sessions).

    Quantum counts are kept per qudit dimension so that ``log2 d`` values stay
    exact; ``qubits_down`` etc. convert on demand.
    """

    classical_bits_up: int = 0
    classical_bits_down: int = 0
    qudits_down: Counter = field(default_factory=Counter)
    qudits_up: Counter = field(default_factory=Counter)
    pairs: Counter = field(default_factory=Counter)
    passes: int = 0
    requests: int = 0

    @staticmethod
    def _bits(counts: Counter) -> float:
        return float(sum(n * log2(d) for d, n in counts.items()))

    @property
    def qubits_down(self) -> float:
        return self._bits(self.qudits_down)

    @property
    def qubits_up(self) -> float:
        return self._bits(self.qudits_up)

    @property
    def quantum_communication(self) -> float:
        return self.qubits_down + self.qubits_up

    @property
    def ebits(self) -> float:
        return self._bits(self.pairs)

    @property
    def classical_bits(self) -> int:
        return self.classical_bits_up + self.classical_bits_down

    def __add__(self, other: "ResourceLedger") -> "ResourceLedger":
        return ResourceLedger(
            self.classical_bits_up + other.classical_bits_up,
            self.classical_bits_down + other.classical_bits_down,
            self.qudits_down + other.qudits_down,
            self.qudits_up + other.qudits_up,
            self.pairs + other.pairs,
            self.passes + other.passes,
            self.requests + other.requests,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResourceLedger):
            return NotImplemented
        return self.as_exact() == other.as_exact()

    def as_exact(self) -> dict:
        return {
            "classical_bits_up": self.classical_bits_up,
            "classical_bits_down": self.classical_bits_down,
            "qudits_down": {str(d): n for d, n in sorted(self.qudits_down.items()) if n},
            "qudits_up": {str(d): n for d, n in sorted(self.qudits_up.items()) if n},
            "pairs": {str(d): n for d, n in sorted(self.pairs.items()) if n},
            "passes": self.passes,
            "requests": self.requests,
        }

    def as_dict(self) -> dict:
        out = self.as_exact()
        out.update(
            qubits_down=self.qubits_down,
            qubits_up=self.qubits_up,
            quantum_communication=self.quantum_communication,
            ebits=self.ebits,
        )
        return out

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> "ResourceLedger":
        led = cls()
        for ev in events:
            kind = type(ev)
            if kind is StateSent:
                target = led.qudits_down if ev.receiver == USER else led.qudits_up
                for d in ev.dims:
                    target[d] += 1
            elif kind is PairShared:
                led.pairs[ev.d] += 1
            elif kind is QuerySent:
                led.classical_bits_up += len(ev.bits)
            elif kind is ClassicalSent:
                if ev.receiver == USER:
                    led.classical_bits_down += ev.nbits
                else:
                    led.classical_bits_up += ev.nbits
            elif kind is PassBoundary:
                led.passes += 1
            elif kind is RequestSent:
                led.requests += 1
        return led


class Transcript:
    """Ordered, append-only event log of one session."""

    def __init__(self, events: Iterable[Event] = ()):
        self.events: list[Event] = list(events)

    def record(self, event: Event) -> None:
        self.events.append(event)

    def extend(self, events: Iterable[Event]) -> None:
        self.events.extend(events)

    def ledger(self) -> ResourceLedger:
        return ResourceLedger.from_events(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_type(self, kind) -> list:
        return [e for e in self.events if isinstance(e, kind)]

    def server_to_server(self) -> list[Event]:
        """Communication events between two servers (must be empty for two-server protocols)."""
        out = []
        for e in self.events:
            if isinstance(e, (ClassicalSent, StateSent)) and USER not in (e.sender, e.receiver):
                out.append(e)
        return out

    def to_jsonl(self) -> str:
        lines = [json.dumps({"event": type(e).__name__, **e._asdict()}, sort_keys=True) for e in self.events]
        return "\n".join(lines)
