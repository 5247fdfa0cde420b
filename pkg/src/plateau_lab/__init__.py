"""Desk-scale simulator and statistical laboratory for dissipative
perceptron-based quantum neural networks: density-matrix forward evaluation,
gradient estimation for two training schemes, Haar-moment identities, and
Monte-Carlo variance experiments with closed-form references."""

__version__ = "0.1.0"

from .linalg import QuantumState, apply_unitary, expectation, herm_expm, kron, partial_trace
from .ensembles import (
    PauliString,
    RngStream,
    sample_haar_unitary,
    sample_pauli_hermitian,
    sample_product_training_pair,
)
from .dqnn import (
    CostSpec,
    NetworkSpec,
    Perceptron,
    TrainingPair,
    build_brick_network,
    build_global_deep_circuit,
    build_global_deep_haar,
    build_swap_network,
    build_toy_network,
    cost,
    forward,
    global_observable,
    local_observable,
    map_to_hardware_efficient,
)
from .gradients import (
    MatrixFlowState,
    RpqcParameterRef,
    grad_s,
    grad_theta_fd,
    grad_theta_shift,
    update_step,
)
from .moments import (
    MomentEstimate,
    first_moment_exact,
    mc_haar_integral,
    second_moment_exact_chain,
    second_moment_exact_product,
    subsystem_twirl_exact,
    verify_bitstring_decomposition,
    verify_commutator_trace_zero,
    verify_projected_twirl_formulas,
)
from .experiments import (
    CellSpec,
    ReportRow,
    bound_matrix_flow,
    bound_rpqc,
    estimate_grad_stats,
    run_sweep,
    toy_model_exact,
)

__all__ = [name for name in dir() if not name.startswith("_")]
