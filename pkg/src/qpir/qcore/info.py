"""Density matrices, partial trace, entropy and state-comparison metrics."""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from ..errors import DimensionMismatchError, InvalidStateError, NoSolutionError, UnknownLabelError
from .register import QuantumRegister

STATE_TOL = 1e-9
EIG_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive matrix; ``dims``/``labels`` describe its factors."""

    matrix: np.ndarray
    dims: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {m.shape}")
        dims = tuple(self.dims) or (m.shape[0],)
        labels = tuple(self.labels) or tuple(f"q{i}" for i in range(len(dims)))
        if prod(dims) != m.shape[0] or len(labels) != len(dims):
            raise DimensionMismatchError(f"factor dims {dims} do not match a {m.shape[0]}-dimensional matrix")
        if np.max(np.abs(m - m.conj().T)) > STATE_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > STATE_TOL:
            raise InvalidStateError(f"density matrix trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m).min() < -STATE_TOL:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_register(cls, reg: QuantumRegister) -> "DensityMatrix":
        v = reg.amplitudes
        return cls(np.outer(v, v.conj()), reg.dims, reg.labels)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d) / d)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def partial_trace(state, keep: Sequence[str]) -> DensityMatrix:
    """Reduced state on the factors ``keep`` (kept in the register's order)."""
    if isinstance(state, QuantumRegister):
        dims, labels = state.dims, state.labels
    else:
        dims, labels = state.dims, state.labels
    keep = list(keep)
    if not keep:
        raise UnknownLabelError("partial_trace needs at least one label to keep")
    for x in keep:
        if x not in labels:
            raise UnknownLabelError(f"no factor labelled {x!r} in {labels}")
    kept = [i for i, x in enumerate(labels) if x in keep]
    traced = [i for i in range(len(dims)) if i not in kept]
    dk = prod(dims[i] for i in kept)
    kdims = tuple(dims[i] for i in kept)
    klabels = tuple(labels[i] for i in kept)
    if isinstance(state, QuantumRegister):
        t = np.transpose(state.tensor_view, kept + traced).reshape(dk, -1)
        return DensityMatrix(t @ t.conj().T, kdims, klabels)
    n = len(dims)
    t = state.matrix.reshape(dims + dims)
    perm = kept + traced
    t = np.transpose(t, perm + [n + p for p in perm])
    dt = prod(dims[i] for i in traced)
    t = t.reshape(dk, dt, dk, dt)
    return DensityMatrix(np.einsum("ajbj->ab", t), kdims, klabels)


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    """``-Tr rho log2 rho`` in bits; eigenvalues below 1e-12 contribute nothing."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    lam = np.linalg.eigvalsh(m)
    if lam.min() < -STATE_TOL:
        raise InvalidStateError("entropy of a non-positive matrix")
    lam = lam[lam > EIG_CUTOFF]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def fidelity_up_to_phase(psi: QuantumRegister, phi: QuantumRegister) -> float:
    """``|<psi|phi>|``; equals 1 exactly when the states agree up to a global phase."""
    if psi.dims != phi.dims:
        raise DimensionMismatchError(f"comparing dims {psi.dims} with {phi.dims}")
    return float(min(1.0, abs(np.vdot(psi.amplitudes, phi.amplitudes))))


def trace_distance(rho: DensityMatrix | np.ndarray, sigma: DensityMatrix | np.ndarray) -> float:
    a = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    b = sigma.matrix if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"trace distance between shapes {a.shape} and {b.shape}")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def match_local_unitary(target: QuantumRegister, source: QuantumRegister,
                        b_labels: Sequence[str] | None = None, tol: float = 1e-8) -> np.ndarray:
    """Unitary ``U_B`` with ``(I_A (x) U_B) source = target`` for pure states with equal A-marginals.

    ``b_labels`` names the B factors (default: the last factor). Both states are
    expanded in one eigenbasis of the common marginal on A, which makes
    degenerate Schmidt coefficients harmless; the map is completed arbitrarily
    on the orthogonal complement of its support.
    """
    if target.labels != source.labels or target.dims != source.dims:
        raise DimensionMismatchError("both states must live on the same labelled factors")
    b_labels = list(b_labels) if b_labels is not None else [target.labels[-1]]
    a_labels = [x for x in target.labels if x not in b_labels]
    if not a_labels:
        raise UnknownLabelError("subsystem A is empty")
    order = a_labels + b_labels
    t = target.reorder(order)
    s = source.reorder(order)
    da = prod(t.dim_of(x) for x in a_labels)
    db = prod(t.dim_of(x) for x in b_labels)
    T = t.amplitudes.reshape(da, db)
    S = s.amplitudes.reshape(da, db)
    rho_t = T @ T.conj().T
    rho_s = S @ S.conj().T
    if np.max(np.abs(rho_t - rho_s)) > tol:
        raise NoSolutionError("the two states have different marginals on A")

    p, basis = np.linalg.eigh(rho_t)
    support = p > EIG_CUTOFF
    # rows of basis^dagger T are sqrt(p_s) <f(s)|-coefficients
    F = (basis.conj().T @ T)[support] / np.sqrt(p[support])[:, None]
    G = (basis.conj().T @ S)[support] / np.sqrt(p[support])[:, None]
    # B kets as columns: f(s) = F[s].T, g(s) = G[s].T
    U = F.T @ G.conj()
    rest_f = null_space(F.conj())
    rest_g = null_space(G.conj())
    if rest_f.shape[1]:
        U = U + rest_f @ rest_g.conj().T
    check = np.max(np.abs(S @ U.T - T))
    if check > tol or np.max(np.abs(U.conj().T @ U - np.eye(db))) > tol:
        raise NoSolutionError(f"local unitary construction failed (residual {check:.2e})")
    return U
