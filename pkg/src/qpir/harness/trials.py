"""Seeded, reproducible batches of protocol sessions."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import sqrt
from typing import NamedTuple

import numpy as np

from ..errors import QPIRError
from ..ledger import ResourceLedger
from ..protocols import ProtocolConfig, run_session
from ..protocols.costs import ExpectedCost, expected_cost
from ..protocols.messages import MessageSet


def child_seed(master: int, index: int) -> int:
    """64-bit seed of trial ``index``: numpy ``SeedSequence(master, spawn_key=(index,))``, first word."""
    return int(np.random.SeedSequence(int(master), spawn_key=(int(index),)).generate_state(1, np.uint64)[0])


def trial_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, index))


class TrialRecord(NamedTuple):
    index: int
    seed: int
    success: bool
    fidelity: float | None
    passes: int
    accepted_passes: int
    ledger: ResourceLedger
    forward_passes: tuple  # qudit protocol only: (alphas, chain_fidelity, output_fidelity) per accepted forward chain


def run_one(config: ProtocolConfig, messages: MessageSet, k: int, master: int, index: int) -> TrialRecord:
    seed = child_seed(master, index)
    res = run_session(config, messages, k, np.random.default_rng(seed))
    accepted = 1 if res.success else 0
    forward = ()
    if config.protocol == "qudit":
        acc = res.details["accepted_passes"]
        accepted = len(acc)
        forward = tuple((tuple(e["alphas"]), e["chain_fidelity"], e["output_fidelity"]) for e in acc if e["forward"])
    return TrialRecord(index, seed, res.success, res.fidelity, res.passes, accepted, res.ledger, forward)


def _run_chunk(args):
    config, messages, k, master, indices = args
    return [run_one(config, messages, k, master, i) for i in indices]


@dataclass
class TrialStats:
    config: ProtocolConfig
    k: int
    master_seed: int
    records: list[TrialRecord]
    expected: ExpectedCost
    totals: ResourceLedger = field(init=False)

    def __post_init__(self):
        tot = ResourceLedger()
        for r in self.records:
            tot = tot + r.ledger
        self.totals = tot

    @property
    def trials(self) -> int:
        return len(self.records)

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def min_fidelity(self) -> float | None:
        f = [r.fidelity for r in self.records if r.success and r.fidelity is not None]
        return min(f) if f else None

    def _mean_sd(self, values) -> tuple[float, float]:
        a = np.asarray(values, dtype=float)
        sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
        return float(a.mean()), sd / sqrt(a.size)

    @property
    def mean_passes(self) -> tuple[float, float]:
        return self._mean_sd([r.passes for r in self.records])

    @property
    def pass_success_rate(self) -> float:
        """Accepted passes over all passes (for the qudit protocol: accepted chain attempts)."""
        return sum(r.accepted_passes for r in self.records) / sum(r.passes for r in self.records)

    def mean(self, attr: str) -> tuple[float, float]:
        """Mean and standard error of a per-session ledger quantity."""
        return self._mean_sd([getattr(r.ledger, attr) for r in self.records])

    def summary(self) -> dict:
        out = {
            "trials": self.trials,
            "successes": self.successes,
            "min_fidelity": self.min_fidelity,
            "pass_success_rate": self.pass_success_rate,
            "mean_passes": dict(zip(("mean", "stderr"), self.mean_passes)),
        }
        for attr in ("classical_bits_up", "classical_bits_down", "qubits_down", "qubits_up", "ebits"):
            m, se = self.mean(attr)
            out[f"mean_{attr}"] = {"mean": m, "stderr": se}
        out["totals"] = self.totals.as_exact()
        out["expected"] = self.expected.as_dict()
        return out


def run_trials(config: ProtocolConfig, messages: MessageSet, k: int, trials: int, master_seed: int,
               workers: int = 1) -> TrialStats:
    """Run ``trials`` independent sessions; identical inputs give identical results for any ``workers``."""
    if trials < 1:
        raise QPIRError("trials must be >= 1")
    indices = list(range(trials))
    if workers <= 1:
        records = [run_one(config, messages, k, master_seed, i) for i in indices]
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, [(config, messages, k, master_seed, c) for c in chunks]))
        records = sorted((r for p in parts for r in p), key=lambda r: r.index)
    return TrialStats(config, k, master_seed, records, expected_cost(config, messages))
