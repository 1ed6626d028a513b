"""Generalized Pauli operators, vectorization and small matrix helpers."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.stats import unitary_group

from ..errors import DegenerateInputError, InvalidDimensionError, NonUnitaryError

UNITARY_TOL = 1e-9


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"qudit dimension must be an integer >= 2, got {d!r}")
    return int(d)


@lru_cache(maxsize=None)
def _pauli_pair(d: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.zeros((d, d), dtype=complex)
    for s in range(d):
        X[(s + 1) % d, s] = 1.0
    omega = np.exp(2j * np.pi / d)
    Z = np.diag(omega ** np.arange(d))
    X.setflags(write=False)
    Z.setflags(write=False)
    return X, Z


def generalized_pauli(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the shift ``X = sum |s+1><s|`` and clock ``Z = diag(omega^s)``."""
    d = _check_dim(d)
    X, Z = _pauli_pair(d)
    return X.copy(), Z.copy()


@lru_cache(maxsize=None)
def _pauli_power(d: int, a: int, b: int) -> np.ndarray:
    X, Z = _pauli_pair(d)
    M = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)
    M.setflags(write=False)
    return M


def pauli_power(d: int, a: int, b: int) -> np.ndarray:
    """``X^a Z^b`` with exponents taken mod d (negative exponents allowed). Read-only."""
    d = _check_dim(d)
    return _pauli_power(d, a % d, b % d)


@lru_cache(maxsize=None)
def bell_basis(d: int) -> np.ndarray:
    """Rows are the normalized vectors ``|X^a Z^b>>/sqrt(d)``, row index ``a*d + b``."""
    rows = np.empty((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            rows[a * d + b] = _pauli_power(d, a, b).reshape(-1) / np.sqrt(d)
    rows.setflags(write=False)
    return rows


def is_unitary(M: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0])))) <= tol


def require_unitary(M: np.ndarray, what: str = "operator") -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if not is_unitary(M):
        raise NonUnitaryError(f"{what} is not unitary within {UNITARY_TOL}")
    return M


def vec(M: np.ndarray) -> np.ndarray:
    """Unnormalized ``|M>> = sum m_st |s>|t>`` as a flat array (algebra only)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise InvalidDimensionError("vectorization needs a 2-d matrix")
    if not np.any(np.abs(M) > 0):
        raise DegenerateInputError("cannot vectorize the all-zero matrix")
    return M.reshape(-1).copy()


def vectorize(M: np.ndarray, normalized: bool = True, labels: tuple[str, str] = ("A", "B")):
    """Vectorize ``M``.

    With ``normalized`` (the default) the result is a two-qudit
    :class:`~qpir.qcore.register.QuantumRegister` holding ``|M>>/||M||_F``.
    Otherwise the raw amplitude array is returned; it is never wrapped as a
    register because it need not be a unit vector.
    """
    v = vec(M)
    if not normalized:
        return v
    from .register import QuantumRegister

    M = np.asarray(M)
    return QuantumRegister(M.shape, labels, v / np.linalg.norm(v))


def operator_of(amplitudes: np.ndarray, shape: tuple[int, int], scale: float) -> np.ndarray:
    """Invert vectorization: reshape amplitudes to ``shape`` and multiply by ``scale``."""
    return np.asarray(amplitudes).reshape(shape) * scale


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(_check_dim(d), random_state=rng)


def random_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_commuting_unitaries(count: int, d: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Unitaries diagonal in one shared random basis, hence pairwise commuting."""
    V = random_unitary(d, rng)
    out = []
    for _ in range(count):
        phases = np.exp(2j * np.pi * rng.random(d))
        out.append(V @ np.diag(phases) @ V.conj().T)
    return out


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.max(np.abs(A @ B - B @ A)))
