"""Quantum reservoir computing benchmarks across particle statistics."""

from .operators import (
    BOSON,
    FERMION,
    QUBIT,
    CouplingMatrix,
    OperatorSet,
    Statistics,
    build_chain_hamiltonian,
    build_hamiltonian,
    build_ladder_ops,
    sample_couplings,
)
from .dynamics import (
    DensityMatrix,
    InputSpec,
    ObservableSet,
    Propagator,
    ReservoirEngine,
    inject_and_evolve,
    input_state,
    level_occupation_histogram,
    measure,
    partial_trace_first,
    run_reservoir,
)

__version__ = "0.1.0"
