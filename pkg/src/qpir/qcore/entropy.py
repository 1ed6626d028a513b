"""Randomized checks of the basic von Neumann entropy identities.

Properties, labelled as in the rest of the package:

(a) both marginals of a pure bipartite state have equal entropy;
(b) entropy is additive on product states;
(c) entropy is unitarily invariant;
(d) ``H(XY) + H(X) >= H(Y)``;
(e) ``H(sum p_s rho_s) = sum p_s (H(rho_s) - log2 p_s)`` for mutually orthogonal ``rho_s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .info import partial_trace, von_neumann_entropy
from .linalg import random_state, random_unitary
from .register import QuantumRegister

PROPERTY_TOL = 1e-8
ORTHOGONALITY_TOL = 1e-10


@dataclass
class Violation:
    prop: str
    detail: str
    witness: dict


@dataclass
class EntropyReport:
    checked: dict[str, int] = field(default_factory=lambda: {p: 0 for p in "abcde"})
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: "EntropyReport") -> "EntropyReport":
        for p, n in other.checked.items():
            self.checked[p] = self.checked.get(p, 0) + n
        self.violations.extend(other.violations)
        return self


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or int(rng.integers(1, d + 1))
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = G @ G.conj().T
    return m / np.trace(m).real


def check_pure_marginals(reg: QuantumRegister, split: int, report: EntropyReport) -> None:
    """(a) on a pure state cut after factor ``split``."""
    xs, ys = reg.labels[:split], reg.labels[split:]
    hx = von_neumann_entropy(partial_trace(reg, xs))
    hy = von_neumann_entropy(partial_trace(reg, ys))
    report.checked["a"] += 1
    if abs(hx - hy) > PROPERTY_TOL:
        report.violations.append(Violation("a", "pure-state marginals differ", {"H(X)": hx, "H(Y)": hy}))


def check_subadditivity_bound(reg: QuantumRegister, x: str, y: str, report: EntropyReport) -> None:
    """(d) for the pair of factors ``x``, ``y`` of a (generally mixed-on-XY) pure tripartite state."""
    hxy = von_neumann_entropy(partial_trace(reg, [x, y]))
    hx = von_neumann_entropy(partial_trace(reg, [x]))
    hy = von_neumann_entropy(partial_trace(reg, [y]))
    report.checked["d"] += 1
    if hxy + hx < hy - PROPERTY_TOL:
        report.violations.append(Violation("d", "H(XY)+H(X) < H(Y)", {"H(XY)": hxy, "H(X)": hx, "H(Y)": hy}))


def check_product(rho: np.ndarray, sigma: np.ndarray, report: EntropyReport) -> None:
    h = von_neumann_entropy(np.kron(rho, sigma))
    h1, h2 = von_neumann_entropy(rho), von_neumann_entropy(sigma)
    report.checked["b"] += 1
    if abs(h - h1 - h2) > PROPERTY_TOL:
        report.violations.append(Violation("b", "not additive", {"H(XY)": h, "H(X)": h1, "H(Y)": h2}))


def check_unitary_invariance(rho: np.ndarray, U: np.ndarray, report: EntropyReport) -> None:
    h0 = von_neumann_entropy(rho)
    h1 = von_neumann_entropy(U @ rho @ U.conj().T)
    report.checked["c"] += 1
    if abs(h0 - h1) > PROPERTY_TOL:
        report.violations.append(Violation("c", "entropy changed under a unitary", {"before": h0, "after": h1}))


def check_orthogonal_mixture(weights: np.ndarray, states: list[np.ndarray], report: EntropyReport) -> None:
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            if abs(np.trace(states[i] @ states[j])) > ORTHOGONALITY_TOL:
                raise ValueError("property (e) needs mutually orthogonal states")
    mix = sum(w * s for w, s in zip(weights, states))
    lhs = von_neumann_entropy(mix)
    rhs = float(sum(w * (von_neumann_entropy(s) - np.log2(w)) for w, s in zip(weights, states)))
    report.checked["e"] += 1
    if abs(lhs - rhs) > PROPERTY_TOL:
        report.violations.append(Violation("e", "orthogonal mixing rule fails", {"lhs": lhs, "rhs": rhs}))


def _orthogonal_family(d: int, parts: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Density matrices supported on disjoint blocks of a random basis."""
    V = random_unitary(d, rng)
    cuts = np.sort(rng.choice(np.arange(1, d), size=parts - 1, replace=False)) if parts > 1 else []
    blocks = np.split(np.arange(d), cuts)
    out = []
    for blk in blocks:
        W = V[:, blk]
        out.append(W @ random_density(len(blk), rng) @ W.conj().T)
    return out


def check_entropy_properties(rng: np.random.Generator, instances: int = 1000, max_dim: int = 8) -> EntropyReport:
    """Sample ``instances`` random cases per property with dimensions up to ``max_dim``."""
    report = EntropyReport()
    for _ in range(instances):
        # (a): random pure bipartite state
        da, db = (int(x) for x in rng.integers(2, max_dim + 1, size=2))
        reg = QuantumRegister((da, db), ("X", "Y"), random_state(da * db, rng))
        check_pure_marginals(reg, 1, report)

        # (b): product of random mixed states
        d1, d2 = (int(x) for x in rng.integers(2, max_dim + 1, size=2))
        check_product(random_density(d1, rng), random_density(d2, rng), report)

        # (c)
        d = int(rng.integers(2, max_dim + 1))
        check_unitary_invariance(random_density(d, rng), random_unitary(d, rng), report)

        # (d): XY mixed through a purifying Z; keep total dimension modest
        dx, dy = (int(x) for x in rng.integers(2, max_dim + 1, size=2))
        dz = int(rng.integers(2, max_dim + 1))
        tri = QuantumRegister((dx, dy, dz), ("X", "Y", "Z"), random_state(dx * dy * dz, rng))
        check_subadditivity_bound(tri, "X", "Y", report)

        # (e)
        d = int(rng.integers(2, max_dim + 1))
        parts = int(rng.integers(2, d + 1))
        fam = _orthogonal_family(d, parts, rng)
        w = rng.random(parts) + 0.05
        check_orthogonal_mixture(w / w.sum(), fam, report)
    return report
