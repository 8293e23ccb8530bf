"""Variational quantification of Bures-distance quantum resources."""

from .simulator import (
    CircuitOp,
    DensityMatrix,
    SimulationError,
    StateVector,
    apply_op,
    apply_ops,
    inner_product,
    partial_trace,
    register_probabilities,
)
from .ansatz import (
    AnsatzConfig,
    GateSpec,
    ParamCircuit,
    bind,
    build_arbitrary_unitary,
    build_uc,
    build_vc,
)
from .states import (
    KrausChannel,
    apply_channel,
    dephased_cluster,
    load_density_matrix,
    noisy_smolin,
    werner,
)
from .oracle import (
    Bipartition,
    closest_separable_bures,
    concurrence,
    fidelity_exact,
    negativity,
    werner_bures_reference,
)
from .purify import (
    PurificationPlan,
    ResourceSpec,
    build_plan,
    build_purification,
    classical_free_state,
    fixed_purification,
    fixed_purification_for_plan,
    traced_free_state,
)
from .objective import (
    FidelityEstimate,
    bures_cost,
    overlap_fidelity,
    swap_circuit_fidelity,
    swap_test_sample,
)
from .train import TrainConfig, TrainReport, adam_step, gradient, train_resource
from .reconstruct import SeparableEnsemble, reconstruct_free_state

__all__ = [name for name in dir() if not name.startswith("_")]
