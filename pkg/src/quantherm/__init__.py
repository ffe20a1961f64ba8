"""Quantum thermodynamics of undecomposed and bipartite systems under a
modified von Neumann equation."""

from .operators import (
    HilbertDims,
    commutator,
    embed_left,
    embed_right,
    hermitian,
    mat_exp_hermitian,
    mat_log_regularized,
    partial_trace,
)
from .state import (
    DensityOperator,
    Propagator,
    canonical,
    from_weights,
    microcanonical,
    partial_entropies,
    propagator_from_weight_rates,
    shannon_entropy,
)
from .thermo import (
    ExchangeLedger,
    HamiltonianModel,
    HamiltonianTriple,
    Temperatures,
    compute_ledger,
    contact_temperature,
    inequality_suite,
)
from .propagators import (
    ConstitutiveOmega,
    ReservoirSpec,
    constrained_propagator,
    omega_eval,
    reservoir_propagator,
    reservoir_rate,
    separation_propagator,
)
from .dynamics import Trajectory, evolve, rhs_full, rhs_traced
from .equilibrium import EquilibriumReport, check_equilibrium_bipartite, check_equilibrium_undecomposed

__version__ = "0.1.0"
