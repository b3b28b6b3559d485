"""Random bipartite pure states, metric-induced density-matrix ensembles and their exact laws."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigurationError,
    DomainError,
    EfficiencyError,
    QMeasureError,
    ShapeError,
    ValidationError,
)
from .linalg import (  # noqa: E402
    CompositeShape,
    bloch_from_density,
    density_from_bloch,
    eig_hermitian,
    entanglement_entropy,
    partial_trace_A,
    schmidt_spectrum,
)
from .samplers import (  # noqa: E402
    EnsembleSpec,
    RngStream,
    haar_pure_state,
    haar_unitary,
    lift_to_density,
    sample_bures_qubit,
    sample_hs_qubit,
    sample_induced,
    sample_simplex_density,
)
