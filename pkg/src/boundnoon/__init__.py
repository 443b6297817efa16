"""Bound bosonic particles on Bose-Hubbard chains: effective theory, transfer, NOON states."""
from .errors import BoundNoonError, BracketError, BudgetError, ConfigError, NumericalError, RegimeError
from .fock_space import FockBasis, enumerate_basis, hop_operator, number_operator, sector_dimension
from .lattice_model import (
    LatticeParams,
    SchemeDescriptor,
    apply_scheme,
    build_hamiltonian,
    edge_unlock_field,
    minimal_engineering_fields,
    splitting_field_asymptotic,
    even_chain_scheme,
    uniform_params,
)
from .effective_theory import (
    EffectiveChain,
    closed_form_effective,
    degenerate_pt_oracle,
    effective_hamiltonian,
    solve_sylvester_dyson,
    split_blocks,
)
from .unitary_dynamics import Spectrum, evolve, joint_probability, transfer_time
from .open_system import build_liouvillian, dephasing_sweep, evolve_density
from .protocols import (
    ExperimentConfig,
    fisher_information,
    mach_zehnder_fringes,
    optimize_edge_field,
    optimize_split_field,
    quench_detection,
    run_noon,
    run_transfer,
)

__all__ = [
    "BoundNoonError",
    "BracketError",
    "BudgetError",
    "ConfigError",
    "NumericalError",
    "RegimeError",
    "FockBasis",
    "enumerate_basis",
    "hop_operator",
    "number_operator",
    "sector_dimension",
    "LatticeParams",
    "SchemeDescriptor",
    "apply_scheme",
    "build_hamiltonian",
    "edge_unlock_field",
    "minimal_engineering_fields",
    "splitting_field_asymptotic",
    "even_chain_scheme",
    "uniform_params",
    "EffectiveChain",
    "closed_form_effective",
    "degenerate_pt_oracle",
    "effective_hamiltonian",
    "solve_sylvester_dyson",
    "split_blocks",
    "Spectrum",
    "evolve",
    "joint_probability",
    "transfer_time",
    "build_liouvillian",
    "dephasing_sweep",
    "evolve_density",
    "ExperimentConfig",
    "fisher_information",
    "mach_zehnder_fringes",
    "optimize_edge_field",
    "optimize_split_field",
    "quench_detection",
    "run_noon",
    "run_transfer",
]

__version__ = "0.1.0"
