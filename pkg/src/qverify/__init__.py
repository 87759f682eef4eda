"""Reconstruct and verify layered interruptible quantum circuits.

The package simulates a black-box layered device, reconstructs its hidden
circuit from shot-based pseudo-measurement tomography, and reproduces the
desk-scale verification experiments: per-layer gate matching against the
pair-window configuration classes, purity-based entangler detection, and the
sampling / noise sweeps.
"""

from .core import (
    DensityMatrix,
    Outcome,
    PauliBasis,
    StateVec,
    apply_unitary,
    exact_pauli_distribution,
    partial_trace,
    purity,
    relative_fidelity,
    sample_pauli,
    trace_distance,
)
from .gates import Gate, GateSet, builtin_gate, qft_gate_set, standard_gate_set
from .circuits import (
    Layer,
    LayeredCircuit,
    choi_state,
    compose_unitary,
    emit_circuit,
    identity_circuit,
    layer_unitary,
    parse_circuit,
    random_circuit,
    same_circuit,
)
from .resolution import (
    ConfigElement,
    enumerate_config_classes,
    gate_set_resolution,
)
from .device import (
    Device,
    DeviceProfile,
    NoiseConfig,
    ShotRecord,
    ShotRequest,
    TimeLedger,
    device_time_for_learning,
)
from .tomography import (
    RdmEstimate,
    RecordSet,
    estimate_pauli_coefficient,
    pauli_tomo,
    project_to_physical,
    required_samples,
)
from .reconstruction import (
    PrepResult,
    ReconstructionReport,
    detect_cnot_by_purity,
    learn_multi,
    learn_single,
    match_single_qubit,
    match_two_qubit,
    minimize_residual,
    prep_init,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "Outcome",
    "PauliBasis",
    "StateVec",
    "apply_unitary",
    "exact_pauli_distribution",
    "partial_trace",
    "purity",
    "relative_fidelity",
    "sample_pauli",
    "trace_distance",
    "Gate",
    "GateSet",
    "builtin_gate",
    "qft_gate_set",
    "standard_gate_set",
    "Layer",
    "LayeredCircuit",
    "choi_state",
    "compose_unitary",
    "emit_circuit",
    "identity_circuit",
    "layer_unitary",
    "parse_circuit",
    "random_circuit",
    "same_circuit",
    "ConfigElement",
    "enumerate_config_classes",
    "gate_set_resolution",
    "Device",
    "DeviceProfile",
    "NoiseConfig",
    "ShotRecord",
    "ShotRequest",
    "TimeLedger",
    "device_time_for_learning",
    "RdmEstimate",
    "RecordSet",
    "estimate_pauli_coefficient",
    "pauli_tomo",
    "project_to_physical",
    "required_samples",
    "PrepResult",
    "ReconstructionReport",
    "detect_cnot_by_purity",
    "learn_multi",
    "learn_single",
    "match_single_qubit",
    "match_two_qubit",
    "minimize_residual",
    "prep_init",
]
