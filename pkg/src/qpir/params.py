"""Rotation/phase parameterization of pure qubit and qudit states.

Two phase conventions coexist and are never mixed within one protocol run:

* qubit: ``S(phi) = diag(exp(-i phi/2), exp(i phi/2))`` (symmetric);
* qudit: ``S(phi^1..phi^{d-1}) = diag(1, exp(i phi^1), ..., exp(i phi^{d-1}))``.

Qudit states are composed as ``S(phi) R_{d-1}(theta^{d-1}) ... R_1(theta^1) |0>``:
``R_1`` acts first. The reverse order cannot reach every state for d >= 3
because ``R_{d-1}`` fixes ``|0>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, IndexRangeError, InvalidDimensionError, InvalidStateError
from .qcore.register import QuantumRegister

TWO_PI = 2 * np.pi
# amplitudes below this are treated as exact zeros when reading phases
_ZERO_AMP = 1e-12
_RANGE_SLACK = 1e-12


def rotation_r(d: int, s: int, theta: float) -> np.ndarray:
    """Givens rotation on ``|s-1>, |s>``; for d=2, s=1 it is the qubit ``R(theta)``."""
    if d < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {d}")
    if not 1 <= s <= d - 1:
        raise IndexRangeError(f"rotation index must lie in [1, {d - 1}], got {s}")
    R = np.eye(d, dtype=complex)
    c, sn = np.cos(theta), np.sin(theta)
    R[s - 1, s - 1] = c
    R[s - 1, s] = -sn
    R[s, s - 1] = sn
    R[s, s] = c
    return R


def phase_s(d: int, phis: Sequence[float] | float, qubit: bool = False) -> np.ndarray:
    """Diagonal phase operator in the qudit (default) or symmetric qubit convention."""
    if qubit:
        if d != 2:
            raise InvalidDimensionError("the symmetric phase convention is for qubits only")
        arr = np.atleast_1d(np.asarray(phis, dtype=float))
        if arr.size != 1:
            raise DimensionMismatchError("qubit phase takes exactly one angle")
        phi = float(arr[0])
        return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    if phis.size != d - 1:
        raise DimensionMismatchError(f"qudit phase for d={d} takes {d - 1} angles, got {phis.size}")
    return np.diag(np.concatenate([[1.0], np.exp(1j * phis)]))


def rotation_chain(d: int, thetas: Sequence[float]) -> np.ndarray:
    """``R_{d-1}(theta^{d-1}) ... R_1(theta^1)`` (R_1 applied first)."""
    if len(thetas) != d - 1:
        raise DimensionMismatchError(f"need {d - 1} rotation angles, got {len(thetas)}")
    M = np.eye(d, dtype=complex)
    for s, th in enumerate(thetas, start=1):
        M = rotation_r(d, s, th) @ M
    return M


def _check_theta(t: float) -> None:
    if not -_RANGE_SLACK <= t <= np.pi / 2 + _RANGE_SLACK:
        raise InvalidStateError(f"theta {t!r} outside [0, pi/2]")


def _check_phi(p: float) -> None:
    if not -_RANGE_SLACK <= p < TWO_PI + _RANGE_SLACK:
        raise InvalidStateError(f"phi {p!r} outside [0, 2pi)")


@dataclass(frozen=True)
class QubitParams:
    theta: float
    phi: float

    def __post_init__(self):
        _check_theta(self.theta)
        _check_phi(self.phi)

    @property
    def d(self) -> int:
        return 2

    def operator(self) -> np.ndarray:
        """``S(phi) R(theta)`` in the symmetric qubit convention."""
        return phase_s(2, self.phi, qubit=True) @ rotation_r(2, 1, self.theta)


@dataclass(frozen=True)
class QuditParams:
    d: int
    thetas: tuple[float, ...]
    phis: tuple[float, ...]

    def __post_init__(self):
        if self.d < 2:
            raise InvalidDimensionError(f"dimension must be >= 2, got {self.d}")
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        if len(self.thetas) != self.d - 1 or len(self.phis) != self.d - 1:
            raise DimensionMismatchError(f"QuditParams for d={self.d} need {self.d - 1} thetas and phis")
        for t in self.thetas:
            _check_theta(t)
        for p in self.phis:
            _check_phi(p)

    def operator(self) -> np.ndarray:
        return phase_s(self.d, self.phis) @ rotation_chain(self.d, self.thetas)


def compose_state(params: QubitParams | QuditParams, label: str = "X") -> QuantumRegister:
    v = params.operator()[:, 0]
    return QuantumRegister((params.d,), (label,), v / np.linalg.norm(v))


def _wrap(phi: float) -> float:
    w = float(np.mod(phi, TWO_PI))
    return 0.0 if w >= TWO_PI - 1e-15 else w


def _amplitudes(psi, d: int | None) -> np.ndarray:
    v = psi.amplitudes if isinstance(psi, QuantumRegister) else np.asarray(psi, dtype=complex).reshape(-1)
    if isinstance(psi, QuantumRegister) and len(psi.dims) != 1:
        raise DimensionMismatchError("decompose expects a single-qudit state")
    if d is not None and v.size != d:
        raise DimensionMismatchError(f"state has dimension {v.size}, expected {d}")
    if v.size < 2:
        raise InvalidDimensionError("state dimension must be >= 2")
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise InvalidStateError("decompose needs a unit vector")
    return v


def decompose(psi, d: int | None = None, qudit: bool = False) -> QubitParams | QuditParams:
    """Angles reproducing ``psi`` up to global phase.

    Qubits give :class:`QubitParams` unless ``qudit`` is set. The global phase
    is fixed so the ``|0>`` amplitude is real and nonnegative; magnitudes are
    peeled off by the Givens chain ``theta^s = atan2(||c_{s:}||, |c_{s-1}|)``,
    i.e. ``theta^1 = arccos|c_0|`` and so on. Zero residuals give zero angles.
    """
    v = _amplitudes(psi, d)
    d = v.size
    mags = np.abs(v)
    anchor = np.angle(v[0]) if mags[0] > _ZERO_AMP else 0.0
    phis = [_wrap(np.angle(v[s]) - anchor) if mags[s] > _ZERO_AMP else 0.0 for s in range(1, d)]
    thetas = []
    for s in range(d - 1):
        rest = float(np.linalg.norm(mags[s + 1:]))
        if rest + mags[s] <= _ZERO_AMP:
            thetas.append(0.0)
            continue
        thetas.append(float(np.arctan2(rest, mags[s])))
    if d == 2 and not qudit:
        return QubitParams(thetas[0], phis[0])
    return QuditParams(d, tuple(thetas), tuple(phis))
