"""Exact state-vector registers over labelled qudits, and measurements on them."""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ..errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidStateError,
    NonUnitaryError,
    QPIRError,
    UnknownLabelError,
)
from .linalg import UNITARY_TOL, bell_basis, pauli_power

NORM_TOL = 1e-9
PROB_SUM_TOL = 1e-10
# Branches lighter than this are never sampled or enumerated.
NEGLIGIBLE = 1e-14


@dataclass(frozen=True, eq=False)
class QuantumRegister:
    """Pure state on an ordered list of labelled qudits.

    ``amplitudes`` is flat, row-major over ``dims`` (first label is the most
    significant index). Instances are never mutated; operations return new ones.
    """

    dims: tuple[int, ...]
    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        labels = tuple(self.labels)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if any(x < 2 for x in dims):
            raise InvalidDimensionError(f"every qudit needs dimension >= 2, got {dims}")
        if len(labels) != len(dims):
            raise DimensionMismatchError("labels and dims must align")
        if len(set(labels)) != len(labels):
            raise QPIRError(f"duplicate register labels {labels}")
        if amps.size != prod(dims):
            raise DimensionMismatchError(f"{amps.size} amplitudes for dims {dims}")
        norm = np.sqrt(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"register norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, dims: Sequence[int], labels: Sequence[str], index: Sequence[int]) -> "QuantumRegister":
        v = np.zeros(prod(dims), dtype=complex)
        v[np.ravel_multi_index(tuple(index), tuple(dims))] = 1.0
        return cls(tuple(dims), tuple(labels), v)

    @classmethod
    def from_vector(cls, vector, labels: Sequence[str], dims: Sequence[int] | None = None) -> "QuantumRegister":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if dims is None:
            dims = (v.size,)
        return cls(tuple(dims), tuple(labels), v)

    @property
    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabelError(f"no qudit labelled {label!r} in {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def reorder(self, labels: Sequence[str]) -> "QuantumRegister":
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise UnknownLabelError(f"{labels} is not a permutation of {self.labels}")
        perm = [self.axis(x) for x in labels]
        t = np.transpose(self.tensor_view, perm)
        return QuantumRegister(tuple(self.dims[p] for p in perm), labels, t.reshape(-1))

    def relabel(self, mapping: dict[str, str]) -> "QuantumRegister":
        return QuantumRegister(self.dims, tuple(mapping.get(x, x) for x in self.labels), self.amplitudes)

    def __repr__(self) -> str:
        return f"QuantumRegister(labels={self.labels}, dims={self.dims})"


def tensor(*regs: QuantumRegister) -> QuantumRegister:
    """Tensor product in argument order."""
    dims: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()
    amps = np.ones(1, dtype=complex)
    for r in regs:
        dims += r.dims
        labels += r.labels
        amps = np.multiply.outer(amps, r.amplitudes).reshape(-1)
    return QuantumRegister(dims, labels, amps)


def max_entangled(d: int, labels: tuple[str, str] = ("A", "B")) -> QuantumRegister:
    """``|I_d>> = (1/sqrt d) sum_s |s,s>``; worth log2(d) ebits."""
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"qudit dimension must be >= 2, got {d!r}")
    v = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return QuantumRegister((d, d), labels, v)


def apply_operator(reg: QuantumRegister, op: np.ndarray, targets: Sequence[str] | str,
                   check_unitary: bool = True) -> QuantumRegister:
    """Apply ``op`` to the tensor factors ``targets`` (in the order given)."""
    if isinstance(targets, str):
        targets = (targets,)
    axes = [reg.axis(t) for t in targets]
    if len(set(axes)) != len(axes):
        raise UnknownLabelError(f"repeated target in {targets}")
    tdims = [reg.dims[a] for a in axes]
    n = prod(tdims)
    op = np.asarray(op, dtype=complex)
    if op.shape != (n, n):
        raise DimensionMismatchError(f"operator of shape {op.shape} on targets of total dimension {n}")
    if check_unitary and float(np.max(np.abs(op.conj().T @ op - np.eye(n)))) > UNITARY_TOL:
        raise NonUnitaryError("apply_operator requires a unitary operator")
    t = np.moveaxis(reg.tensor_view, axes, list(range(len(axes))))
    rest_shape = t.shape[len(axes):]
    t = (op @ t.reshape(n, -1)).reshape(tuple(tdims) + rest_shape)
    t = np.moveaxis(t, list(range(len(axes))), axes)
    return QuantumRegister(reg.dims, reg.labels, t.reshape(-1))


# ---------------------------------------------------------------------------
# Outcome choosers: how a measurement picks its branch.


class Unscripted(Exception):
    """Raised by a :class:`Scripted` chooser that ran past its script."""

    def __init__(self, probs: np.ndarray):
        super().__init__("measurement outcome not scripted")
        self.probs = probs


def _checked_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    total = float(p.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise QPIRError(f"outcome probabilities sum to {total!r}")
    return p / total


class Sampler:
    """Born-rule sampling by cumulative-probability inversion over ``rng``."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def choose(self, probs) -> int:
        p = _checked_probs(probs)
        u = self.rng.random()
        idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
        idx = min(idx, p.size - 1)
        while p[idx] <= NEGLIGIBLE:
            # u landed on a float-rounding sliver; step back to a real outcome
            idx -= 1
        return idx


class Scripted:
    """Replay fixed outcomes; past the script defer to ``fallback`` or raise :class:`Unscripted`.

    ``weight`` accumulates the Born probability of every scripted choice.
    """

    def __init__(self, script: Sequence[int | None], fallback: Sampler | None = None):
        self.script = tuple(script)
        self.fallback = fallback
        self.position = 0
        self.weight = 1.0

    def choose(self, probs) -> int:
        p = _checked_probs(probs)
        i = self.position
        self.position += 1
        if i < len(self.script) and self.script[i] is not None:
            o = self.script[i]
            if p[o] <= NEGLIGIBLE:
                raise QPIRError(f"scripted outcome {o} has probability {p[o]!r}")
            self.weight *= float(p[o])
            return o
        if self.fallback is None:
            raise Unscripted(p)
        return self.fallback.choose(p)


def as_chooser(rng) -> Sampler | Scripted:
    if isinstance(rng, (Sampler, Scripted)):
        return rng
    if isinstance(rng, np.random.Generator):
        return Sampler(rng)
    raise TypeError(f"expected a numpy Generator or a chooser, got {type(rng).__name__}")


def enumerate_branches(run, max_leaves: int = 10**5):
    """Run ``run(chooser)`` along every outcome path with nonzero probability.

    Returns ``[(script, weight, result), ...]``; the weights of all leaves sum to 1.
    """
    leaves = []
    stack: list[tuple[int, ...]] = [()]
    while stack:
        script = stack.pop()
        chooser = Scripted(script)
        try:
            result = run(chooser)
        except Unscripted as branch:
            for o in range(branch.probs.size - 1, -1, -1):
                if branch.probs[o] > NEGLIGIBLE:
                    stack.append(script + (o,))
            continue
        leaves.append((script, chooser.weight, result))
        if len(leaves) > max_leaves:
            raise QPIRError(f"branch enumeration exceeded {max_leaves} leaves")
    leaves.reverse()
    return leaves


# ---------------------------------------------------------------------------
# Measurements


class BellOutcome(NamedTuple):
    a: int
    b: int
    d: int

    @property
    def index(self) -> int:
        return self.a * self.d + self.b


def _split_axes(reg: QuantumRegister, measured: Sequence[str]):
    axes = [reg.axis(x) for x in measured]
    keep = [i for i in range(len(reg.dims)) if i not in axes]
    t = np.transpose(reg.tensor_view, axes + keep)
    m = prod(reg.dims[a] for a in axes)
    rest_dims = tuple(reg.dims[i] for i in keep)
    rest_labels = tuple(reg.labels[i] for i in keep)
    return t.reshape(m, -1), rest_dims, rest_labels


def _branch_table(reg: QuantumRegister, basis_rows: np.ndarray, measured: Sequence[str]):
    block, rest_dims, rest_labels = _split_axes(reg, measured)
    branches = basis_rows.conj() @ block  # row o = unnormalized post-state for outcome o
    probs = np.einsum("ij,ij->i", branches.conj(), branches).real
    return branches, probs, rest_dims, rest_labels


def _collapse(branches, probs, o, rest_dims, rest_labels) -> QuantumRegister | None:
    if not rest_dims:
        return None
    return QuantumRegister(rest_dims, rest_labels, branches[o] / np.sqrt(probs[o]))


def bell_branches(reg: QuantumRegister, pair_a: str, pair_b: str):
    """All outcomes of the generalized Bell measurement on ``(pair_a, pair_b)``.

    The basis vectors are ``|X^a Z^b>>/sqrt(d)`` with the row index of the
    matrix on ``pair_a`` and the column index on ``pair_b``. Returns a list of
    ``(BellOutcome, probability, post_register)`` with the measured qudits
    removed from every post-register.
    """
    d = reg.dim_of(pair_a)
    if reg.dim_of(pair_b) != d:
        raise DimensionMismatchError(f"Bell measurement on qudits of dimensions {d} and {reg.dim_of(pair_b)}")
    branches, probs, rd, rl = _branch_table(reg, bell_basis(d), (pair_a, pair_b))
    out = []
    for o in range(d * d):
        post = _collapse(branches, probs, o, rd, rl) if probs[o] > NEGLIGIBLE else None
        out.append((BellOutcome(o // d, o % d, d), float(probs[o]), post))
    return out


def bell_measure(reg: QuantumRegister, pair_a: str, pair_b: str, rng) -> tuple[BellOutcome, QuantumRegister | None]:
    """Sample a generalized Bell measurement; see :func:`bell_branches` for conventions."""
    d = reg.dim_of(pair_a)
    if reg.dim_of(pair_b) != d:
        raise DimensionMismatchError(f"Bell measurement on qudits of dimensions {d} and {reg.dim_of(pair_b)}")
    branches, probs, rd, rl = _branch_table(reg, bell_basis(d), (pair_a, pair_b))
    o = as_chooser(rng).choose(probs)
    return BellOutcome(o // d, o % d, d), _collapse(branches, probs, o, rd, rl)


def swap_branches(left: np.ndarray, right: np.ndarray, rows: np.ndarray | None = None):
    """Bell-measure the second qudit of ``left`` with the second qudit of ``right``.

    ``left`` and ``right`` are the amplitude matrices ``L[x, x']`` and ``R[y, y']``
    of two independent two-qudit states. This is the same measurement as
    :func:`bell_branches` on ``tensor(left, right)`` with pair ``(x', y')``,
    contracted without building the four-qudit vector. Returns
    ``(branches, probs)`` with ``branches[o]`` the unnormalized amplitude matrix
    on ``(x, y)`` for outcome ``o``.
    """
    d = left.shape[1]
    if right.shape[1] != d:
        raise DimensionMismatchError(f"Bell measurement on qudits of dimensions {d} and {right.shape[1]}")
    if rows is None:
        rows = bell_basis(d)
    conj = rows.conj().reshape(d * d, d, d)
    branches = np.matmul(np.matmul(left, conj), right.T)
    probs = np.einsum("oij,oij->o", branches.conj(), branches).real
    return branches, probs


def computational_branches(reg: QuantumRegister, target: str):
    d = reg.dim_of(target)
    branches, probs, rd, rl = _branch_table(reg, np.eye(d, dtype=complex), (target,))
    return [(x, float(probs[x]), _collapse(branches, probs, x, rd, rl) if probs[x] > NEGLIGIBLE else None)
            for x in range(d)]


def measure_computational(reg: QuantumRegister, target: str, rng) -> tuple[int, QuantumRegister | None]:
    """Measure ``target`` in ``{|0>,...,|d-1>}``; the qudit is removed from the result."""
    d = reg.dim_of(target)
    branches, probs, rd, rl = _branch_table(reg, np.eye(d, dtype=complex), (target,))
    x = as_chooser(rng).choose(probs)
    return x, _collapse(branches, probs, x, rd, rl)


def pauli_correction(d: int, a: int, b: int) -> np.ndarray:
    """``X^{-a} Z^{b}``, which undoes a teleportation byproduct ``X^a Z^{-b}``."""
    return pauli_power(d, -a, b)


def probabilities(reg: QuantumRegister, target: str) -> np.ndarray:
    t = np.moveaxis(reg.tensor_view, reg.axis(target), 0)
    return np.sum(np.abs(t.reshape(t.shape[0], -1)) ** 2, axis=1)


def labels_of(regs: Iterable[QuantumRegister]) -> tuple[str, ...]:
    return tuple(x for r in regs for x in r.labels)
