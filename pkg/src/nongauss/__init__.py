"""Loss-aware non-Gaussianity thresholds for click statistics.

The package derives click-probability thresholds that no Gaussian state
(or ensemble of Gaussian modes) can beat at a given loss, analyzes
measured coincidence counts against those thresholds, and ships a
seeded Monte Carlo photon-source simulator for end-to-end validation.
"""

__version__ = "0.1.0"

from . import (
    counts_analyzer,
    io_formats,
    photon_statistics,
    source_simulator,
    threshold_solver,
)
from .errors import (
    DomainError,
    FitError,
    FormatError,
    NongaussError,
    PrecisionError,
    SolverError,
)

__all__ = [
    "DomainError",
    "FitError",
    "FormatError",
    "NongaussError",
    "PrecisionError",
    "SolverError",
    "counts_analyzer",
    "io_formats",
    "photon_statistics",
    "source_simulator",
    "threshold_solver",
    "__version__",
]
