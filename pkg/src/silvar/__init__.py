"""Single index latent variable models: learned monotone link, sparse and low-rank parts."""

from .core import (
    ConvergenceWarning,
    Dataset,
    DimensionError,
    FitReport,
    LinkEstimate,
    ModelFormatError,
    NonFiniteError,
    RegularizerSpec,
    SilvarError,
    SilvarModel,
    SolverConfig,
    SolverError,
    deserialize_model,
    serialize_model,
    validate_dataset,
)

__version__ = "0.1.0"
