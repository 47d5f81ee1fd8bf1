"""Perturbation-gadget compiler from sparse Pauli Hamiltonians to 2D lattices."""
from .pauli import (
    Hamiltonian,
    OperatorMatrix,
    PauliTerm,
    graph_stats,
    parse_ham,
    pauli_mul,
    realize,
    serialize_ham,
    triangle_norm_bound,
)

__version__ = "0.1.0"
