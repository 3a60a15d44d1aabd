"""steerkit: steering witnesses under bounded measurement imprecision.

Subpackages follow the pipeline: linalg/sdp (numerics), quantum (operators
and assemblages), witness (exact LHS analysis), plateau (imprecision-bound
routes), relax (moment-matrix SDP relaxations), robustness (loss and noise),
cli (command-line front end).
"""

__version__ = "0.1.0"

from .linalg import NumericalFailure, eig_max, kron, partial_trace
from .quantum import (
    ImprecisionSpec,
    anticommuting_set,
    assemblage_from,
    check_imprecision,
    isotropic_state,
    max_entangled,
    observable_from_bloch,
)
from .sdp import SdpProblem, SdpSolution, sdp_solve
from .witness import (
    Witness,
    dodecahedron_witness,
    enumerate_strategies,
    esi_witness,
    evaluate,
    family_witness,
    has_plateau,
    lhs_bound,
    make_witness,
    pauli_witness,
    quantum_value,
)

__all__ = [
    "__version__",
    "NumericalFailure",
    "eig_max",
    "kron",
    "partial_trace",
    "ImprecisionSpec",
    "anticommuting_set",
    "assemblage_from",
    "check_imprecision",
    "isotropic_state",
    "max_entangled",
    "observable_from_bloch",
    "SdpProblem",
    "SdpSolution",
    "sdp_solve",
    "Witness",
    "dodecahedron_witness",
    "enumerate_strategies",
    "esi_witness",
    "evaluate",
    "family_witness",
    "has_plateau",
    "lhs_bound",
    "make_witness",
    "pauli_witness",
    "quantum_value",
]
