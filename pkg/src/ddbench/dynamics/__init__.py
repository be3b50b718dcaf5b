"""Numerical evolution engine: noise models, pulses, propagation and averaging."""
from .averaging import (
    control_unitary, first_order_average_hamiltonian, rotating_frame_term_scan, system_part,
    toggling_hamiltonian,
)
from .models import Lindblad, NoiseModel, RotatingFrame, random_model, zero_model
from .operators import (
    PAULIS, SX, SY, SZ, I2, dagger, expm_hermitian, kron, op_norm, pauli_string,
    phase_aligned_distance, random_unitary, unitarity_error,
)
from .propagation import (
    IDEAL, DynamicsError, PulseErrorModel, control_hamiltonian, evolve_states,
    finite_pulse_unitary, free_propagator, ideal_pulse_unitary, lindbladian, propagate,
    sequence_unitary, sliced_propagator,
)

__all__ = [
    "control_unitary", "first_order_average_hamiltonian", "rotating_frame_term_scan",
    "system_part", "toggling_hamiltonian", "Lindblad", "NoiseModel", "RotatingFrame",
    "random_model", "zero_model", "PAULIS", "SX", "SY", "SZ", "I2", "dagger",
    "expm_hermitian", "kron", "op_norm", "pauli_string", "phase_aligned_distance",
    "random_unitary", "unitarity_error", "IDEAL", "DynamicsError", "PulseErrorModel",
    "control_hamiltonian", "evolve_states", "finite_pulse_unitary", "free_propagator",
    "ideal_pulse_unitary", "lindbladian", "propagate", "sequence_unitary", "sliced_propagator",
]
