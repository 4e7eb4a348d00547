"""memlab: photo-editing operators, image statistics, and a batch
experiment harness for memorability studies."""

from .errors import (
    ContractError,
    EmptyDomainError,
    FormatError,
    MemlabError,
    ParameterError,
    PredictorError,
    ProtocolError,
    RecipeError,
    ScoreLookupError,
    ScoreValidationError,
)
from .imagecore import Encoding, Image, Mask, ScalarField

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "EmptyDomainError",
    "Encoding",
    "FormatError",
    "Image",
    "Mask",
    "MemlabError",
    "ParameterError",
    "PredictorError",
    "ProtocolError",
    "RecipeError",
    "ScalarField",
    "ScoreLookupError",
    "ScoreValidationError",
    "__version__",
]
