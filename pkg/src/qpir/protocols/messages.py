"""Message databases held by the servers (visible setting: full classical descriptions)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatchError, InvalidStateError, NonUnitaryError, PreconditionError, QPIRError
from ..qcore.info import DensityMatrix
from ..qcore.linalg import UNITARY_TOL, commutator_norm, is_unitary, random_commuting_unitaries, random_state, random_unitary
from ..qcore.register import QuantumRegister

PURE, UNITARIES, DENSITY = "pure-states", "unitaries", "density-matrices"
KINDS = (PURE, UNITARIES, DENSITY)
COMMUTE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MessageSet:
    """``F`` messages of one kind; ``dims[l]`` is the dimension of message ``l+1``.

    Pure states are stored as unit vectors, unitaries and density matrices as
    square arrays. Validation happens at construction.
    """

    kind: str
    payload: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise QPIRError(f"unknown message kind {self.kind!r}; expected one of {KINDS}")
        if len(self.payload) == 0:
            raise QPIRError("a message set needs at least one message")
        items = []
        for i, m in enumerate(self.payload, start=1):
            a = np.array(m, dtype=complex)
            if self.kind == PURE:
                a = a.reshape(-1)
                if a.size < 2:
                    raise DimensionMismatchError(f"message {i}: dimension must be >= 2")
                if abs(np.linalg.norm(a) - 1.0) > 1e-9:
                    raise InvalidStateError(f"message {i}: state is not a unit vector")
            elif self.kind == UNITARIES:
                if not is_unitary(a):
                    raise NonUnitaryError(f"message {i}: matrix is not unitary within {UNITARY_TOL}")
                if a.shape[0] < 2:
                    raise DimensionMismatchError(f"message {i}: dimension must be >= 2")
            else:
                try:
                    DensityMatrix(a)
                except QPIRError as exc:
                    raise InvalidStateError(f"message {i}: {exc}") from None
                if a.shape[0] < 2:
                    raise DimensionMismatchError(f"message {i}: dimension must be >= 2")
            a.setflags(write=False)
            items.append(a)
        object.__setattr__(self, "payload", tuple(items))

    @property
    def F(self) -> int:
        return len(self.payload)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self.payload)

    @property
    def d(self) -> int:
        """Common dimension; raises if the messages differ in dimension."""
        ds = set(self.dims)
        if len(ds) != 1:
            raise DimensionMismatchError(f"messages have different dimensions {self.dims}")
        return ds.pop()

    def __getitem__(self, k: int) -> np.ndarray:
        """Message ``k`` (1-based)."""
        return self.payload[k - 1]

    def state(self, k: int, label: str = "X") -> QuantumRegister:
        if self.kind != PURE:
            raise QPIRError("state() is only defined for pure-state messages")
        return QuantumRegister((self.dims[k - 1],), (label,), self.payload[k - 1])

    def noncommuting_pair(self) -> tuple[int, int] | None:
        """First 1-based pair ``(i, j)`` whose commutator exceeds tolerance, if any."""
        for i in range(self.F):
            for j in range(i + 1, self.F):
                if self.payload[i].shape != self.payload[j].shape:
                    return i + 1, j + 1
                if commutator_norm(self.payload[i], self.payload[j]) > COMMUTE_TOL:
                    return i + 1, j + 1
        return None

    def require_commuting(self) -> None:
        pair = self.noncommuting_pair()
        if pair is not None:
            raise PreconditionError(f"messages {pair[0]} and {pair[1]} do not commute")

    def replace(self, k: int, value) -> "MessageSet":
        items = list(self.payload)
        items[k - 1] = value
        return MessageSet(self.kind, tuple(items))


def pure_messages(states: Sequence) -> MessageSet:
    return MessageSet(PURE, tuple(states))


def unitary_messages(unitaries: Sequence) -> MessageSet:
    return MessageSet(UNITARIES, tuple(unitaries))


def density_messages(matrices: Sequence) -> MessageSet:
    return MessageSet(DENSITY, tuple(matrices))


def random_pure_messages(F: int, d: int | Sequence[int], rng: np.random.Generator) -> MessageSet:
    dims = [d] * F if isinstance(d, int) else list(d)
    return pure_messages([random_state(x, rng) for x in dims])


def random_unitary_messages(F: int, d: int, rng: np.random.Generator, commuting: bool = True) -> MessageSet:
    if commuting:
        return unitary_messages(random_commuting_unitaries(F, d, rng))
    return unitary_messages([random_unitary(d, rng) for _ in range(F)])


def random_density_messages(F: int, dims: Sequence[int], rng: np.random.Generator) -> MessageSet:
    out = []
    for d in dims:
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = G @ G.conj().T
        out.append(m / np.trace(m).real)
    return density_messages(out)
