"""Classical PIR plugins: download-everything and the two-server XOR subset scheme."""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, IndexRangeError, QPIRError
from .ledger import USER, ClassicalSent, Event, QuerySent, ResourceLedger

SERVER1, SERVER2 = "server1", "server2"
SCHEMES = ("trivial", "xor2")


@dataclass(frozen=True)
class ClassicalRecordSet:
    records: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        recs = tuple(tuple(int(b) for b in r) for r in self.records)
        if not recs:
            raise QPIRError("a record set needs at least one record")
        if len({len(r) for r in recs}) != 1:
            raise DimensionMismatchError("all records must have the same length")
        if any(b not in (0, 1) for r in recs for b in r):
            raise QPIRError("records are bit strings")
        object.__setattr__(self, "records", recs)

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def length(self) -> int:
        return len(self.records[0])


@dataclass(frozen=True)
class SubsetQuery:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise QPIRError("query entries must be bits")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __xor__(self, other: "SubsetQuery") -> "SubsetQuery":
        if len(other) != len(self):
            raise DimensionMismatchError("queries of different lengths")
        return SubsetQuery(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def flipped(self) -> "SubsetQuery":
        return SubsetQuery(tuple(1 - b for b in self.bits))

    def as_int(self) -> int:
        """Big-endian integer code (message 1 is the most significant bit)."""
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    @classmethod
    def from_int(cls, value: int, F: int) -> "SubsetQuery":
        return cls(tuple((value >> (F - 1 - i)) & 1 for i in range(F)))


def check_index(k: int, F: int) -> int:
    if int(k) != k or not 1 <= k <= F:
        raise IndexRangeError(f"message index must lie in 1..{F}, got {k!r}")
    return int(k)


def complement_query(q: SubsetQuery, k: int) -> SubsetQuery:
    """``q`` with bit ``k`` (1-based) flipped."""
    k = check_index(k, len(q))
    bits = list(q.bits)
    bits[k - 1] ^= 1
    return SubsetQuery(tuple(bits))


def xor_answer(records: ClassicalRecordSet, q: SubsetQuery) -> tuple[int, ...]:
    if len(q) != records.count:
        raise DimensionMismatchError(f"query of length {len(q)} for {records.count} records")
    acc = [0] * records.length
    for sel, rec in zip(q.bits, records.records):
        if sel:
            acc = [x ^ y for x, y in zip(acc, rec)]
    return tuple(acc)


def coordinate_width(d: int) -> int:
    return max(1, ceil(log2(d)))


def encode_outcomes(outcomes: Sequence[tuple[int, int]], dims: Sequence[int]) -> ClassicalRecordSet:
    """Pack each ``(a, b)`` big-endian into ``2*w`` bits, ``w`` the widest coordinate over all dims."""
    w = max(coordinate_width(d) for d in dims)
    recs = []
    for (a, b), d in zip(outcomes, dims):
        if not (0 <= a < d and 0 <= b < d):
            raise IndexRangeError(f"outcome {(a, b)} outside [0, {d - 1}]^2")
        recs.append(tuple(int(c) for c in format(a, f"0{w}b") + format(b, f"0{w}b")))
    return ClassicalRecordSet(tuple(recs))


def decode_outcome(record: Sequence[int]) -> tuple[int, int]:
    w = len(record) // 2
    a = int("".join(map(str, record[:w])), 2)
    b = int("".join(map(str, record[w:])), 2)
    return a, b


def retrieve(scheme: str, records: ClassicalRecordSet, k: int, rng, query_bits=None):
    """Run one classical retrieval; returns ``(record, events)``.

    ``query_bits`` overrides the random query of the XOR scheme (used by exact audits).
    """
    k = check_index(k, records.count)
    if scheme == "trivial":
        events: list[Event] = [ClassicalSent(SERVER1, USER, records.count * records.length)]
        return records.records[k - 1], events
    if scheme != "xor2":
        raise QPIRError(f"unknown classical PIR scheme {scheme!r}; choose from {SCHEMES}")
    if query_bits is None:
        query_bits = rng.integers(0, 2, size=records.count)
    q = SubsetQuery(tuple(query_bits))
    return xor_exchange(records, q, complement_query(q, k))


def xor_exchange(records: ClassicalRecordSet, q1: SubsetQuery, q2: SubsetQuery):
    """Send ``q1``/``q2`` to the two servers and XOR their answers."""
    a1, a2 = xor_answer(records, q1), xor_answer(records, q2)
    events = [
        QuerySent(SERVER1, q1.bits),
        QuerySent(SERVER2, q2.bits),
        ClassicalSent(SERVER1, USER, len(a1)),
        ClassicalSent(SERVER2, USER, len(a2)),
    ]
    return tuple(x ^ y for x, y in zip(a1, a2)), events


def pir_retrieve(scheme: str, records: ClassicalRecordSet, k: int, rng: np.random.Generator | None = None):
    """Retrieve record ``k`` (1-based); returns ``(record, ResourceLedger)``."""
    rng = rng if rng is not None else np.random.default_rng()
    rec, events = retrieve(scheme, records, k, rng)
    return rec, ResourceLedger.from_events(events)

