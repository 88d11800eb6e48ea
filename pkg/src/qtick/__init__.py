"""Quantum automaton toolkit: events, tests and q-tick processes on small Hilbert spaces."""

from .automaton import (
    Complex,
    Edge,
    EdgeKind,
    Event,
    ProcessGraph,
    QTickRecord,
    Stage,
    Test,
    advance_stage,
    enumerate_outcomes,
    null_test,
    perform_test,
    validate_graph,
)
from .errors import GraphStructureError, NumericError, QtickError, StateError, ValidationError
from .qla import (
    AxisVector,
    HermitianOperator,
    StateVector,
    UnitaryOperator,
    eig_hermitian,
    pauli_dot,
    schmidt_rank,
    su2_from,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "AxisVector",
    "Complex",
    "Edge",
    "EdgeKind",
    "Event",
    "GraphStructureError",
    "HermitianOperator",
    "NumericError",
    "ProcessGraph",
    "QTickRecord",
    "QtickError",
    "Stage",
    "StateError",
    "StateVector",
    "Test",
    "UnitaryOperator",
    "ValidationError",
    "advance_stage",
    "eig_hermitian",
    "enumerate_outcomes",
    "null_test",
    "pauli_dot",
    "perform_test",
    "schmidt_rank",
    "su2_from",
    "tensor",
    "validate_graph",
]
