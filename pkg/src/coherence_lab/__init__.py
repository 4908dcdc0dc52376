"""Desk-scale simulator and verifier for energy-coherence manipulation
under covariant (time-translation symmetric) operations.

Exact energy bookkeeping over declared irrational symbols, density matrices
bound to labeled Hamiltonians, definite-shift Kraus channels with syntactic
covariance, mode-set span algebra, and the constructive protocols built on
top of them: weak-qubit extraction, coherence pumping, correlated-catalyst
construction, recombination scheduling, and quantitative consistency checks.
"""

from .energy import ZERO_ENERGY, EnergyValue, energy, symbol_union
from .states import (
    DensityMatrix,
    LabeledHamiltonian,
    build_hamiltonian,
    coherence_magnitude,
    dephase,
    half_trace_distance,
    is_incoherent,
    partial_trace,
    same_levels,
    tensor,
    tensor_all,
    tensor_hamiltonians,
    tensor_power,
    tensor_power_hamiltonian,
    time_evolve,
    trace_distance,
)
from .lattice import (
    LadderEmbedding,
    LadderSpec,
    degenerate_ladder,
    embed_into_ladders,
    embedding_basis,
    ladder_hamiltonian,
    ladder_product,
    q_span_member,
    rationally_independent,
    solve_integer_combination,
    solve_rational_combination,
    z_span_member,
)
from .modes import (
    ModeSet,
    Verdict,
    check_subset_q,
    check_subset_z,
    modes_of,
    rational_member,
    resonant_member,
    transform_verdict,
)
from .channels import (
    CovariantChannel,
    apply,
    compose,
    covariance_defect,
    dephasing_channel,
    from_dilation,
    haar_unitary,
    identity_channel,
    random_covariant,
    retune,
    unitary_channel,
    verify_covariance,
)
from .protocols import (
    CatalystBundle,
    ContractReport,
    CounterexampleRow,
    MarginalCatalystProtocol,
    RateCertificate,
    ScheduleRound,
    average_single_copy_marginal,
    build_correlated_catalyst,
    build_counterexample,
    counterexample_distance_formula,
    counterexample_row,
    extract_weak_qubit,
    marginal_catalytic_contract,
    min_k_for_rate,
    plus_state,
    pump_qubits,
    rate_certificate,
    recombination_schedule,
    schedule_conversions,
    schedule_is_fresh,
    weak_qubit_channel,
)
from .measures import (
    MeasureName,
    MeasureReport,
    all_measures,
    copy_bound_gap,
    monotonicity_suite,
    qfi,
    rel_ent_asym,
    superadditivity_probe,
    worker_count,
    wy_skew,
)

__version__ = "0.1.0"
