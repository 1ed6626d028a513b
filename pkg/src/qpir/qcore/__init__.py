"""Exact qudit linear algebra: registers, Pauli/Bell machinery, measurement, entropy."""
from .entropy import EntropyReport, check_entropy_properties
from .info import (
    DensityMatrix,
    fidelity_up_to_phase,
    match_local_unitary,
    partial_trace,
    trace_distance,
    von_neumann_entropy,
)
from .linalg import (
    bell_basis,
    commutator_norm,
    generalized_pauli,
    is_unitary,
    pauli_power,
    random_commuting_unitaries,
    random_state,
    random_unitary,
    vec,
    vectorize,
)
from .register import (
    BellOutcome,
    QuantumRegister,
    Sampler,
    Scripted,
    apply_operator,
    as_chooser,
    bell_branches,
    bell_measure,
    computational_branches,
    enumerate_branches,
    max_entangled,
    measure_computational,
    pauli_correction,
    swap_branches,
    tensor,
)

__all__ = [
    "BellOutcome", "DensityMatrix", "EntropyReport", "QuantumRegister", "Sampler", "Scripted",
    "apply_operator", "as_chooser", "bell_basis", "bell_branches", "bell_measure",
    "check_entropy_properties", "commutator_norm", "computational_branches", "enumerate_branches",
    "fidelity_up_to_phase", "generalized_pauli", "is_unitary", "match_local_unitary", "max_entangled",
    "measure_computational", "partial_trace", "pauli_correction", "pauli_power", "random_commuting_unitaries",
    "random_state", "random_unitary", "swap_branches", "tensor", "trace_distance", "vec", "vectorize", "von_neumann_entropy",
]
