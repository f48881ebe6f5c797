"""Multisetting multipartite Bell inequalities for qubits.

Construction of the inequalities, exact local-realistic bounds and tightness
certificates, and quantum violation criteria evaluated on correlation tensors.
"""

__version__ = "0.1.0"

from .construct import (  # noqa: E402
    InequalityCoefficients,
    SignFunction,
    SignTree,
    family_442,
    generating_inequality,
    identify_settings,
)
from .criterion import (  # noqa: E402
    multisetting_criterion,
    quantum_max,
    standard_sufficient_value,
    wwzb_max,
)
from .lroracle import certify, classical_bound  # noqa: E402
from .quantum import CorrelationTensor, QuantumState, correlation_tensor  # noqa: E402

__all__ = [
    "CorrelationTensor",
    "InequalityCoefficients",
    "QuantumState",
    "SignFunction",
    "SignTree",
    "certify",
    "classical_bound",
    "correlation_tensor",
    "family_442",
    "generating_inequality",
    "identify_settings",
    "multisetting_criterion",
    "quantum_max",
    "standard_sufficient_value",
    "wwzb_max",
]
