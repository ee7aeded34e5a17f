"""Hamiltonian dynamics of semiclassical Hagedorn-type wave packets.

Parameter ODEs, symplectic forms and corrected Hamiltonians for the packets
``chi_n``, structure-preserving integrators, and an Egorov phase-space
reference method.
"""

from .core import MultiIndex, NumericalError, PacketParams, SiegelPoint, TangentVector, eval_packet_grid
from .dynamics import ModelConfig, ReducedState, full_field, reduced_field, reduced_hamiltonian
from .egorov import egorov_expectations, sample_ensemble, wigner_weight
from .integrators import IntegratorSpec, Method, Trajectory, propagate
from .potentials import PolynomialPotential, cubic_well_potential, quadratic_potential

__version__ = "0.1.0"

__all__ = [
    "MultiIndex",
    "NumericalError",
    "PacketParams",
    "SiegelPoint",
    "TangentVector",
    "eval_packet_grid",
    "ModelConfig",
    "ReducedState",
    "full_field",
    "reduced_field",
    "reduced_hamiltonian",
    "egorov_expectations",
    "sample_ensemble",
    "wigner_weight",
    "IntegratorSpec",
    "Method",
    "Trajectory",
    "propagate",
    "PolynomialPotential",
    "cubic_well_potential",
    "quadratic_potential",
]
