"""Exception hierarchy shared across the toolkit.

Everything raised on purpose derives from MemlabError so the CLI can map
library failures to a single exit code.
"""


class MemlabError(Exception):
    """Base class for all toolkit errors."""


class ContractError(MemlabError):
    """API misuse: wrong encoding, mismatched dimensions, empty inputs."""


class ParameterError(MemlabError, ValueError):
    """An operator parameter is outside its documented range."""


class FormatError(MemlabError):
    """File content cannot be decoded as a supported image format."""


class EmptyDomainError(ContractError):
    """A statistic was requested over zero included pixels."""


class RecipeError(MemlabError):
    """An edit recipe cannot be parsed or refers to an unknown operator."""


class PredictorError(MemlabError):
    """Base class for predictor failures."""


class ScoreLookupError(PredictorError):
    """A score store is missing one or more requested image ids."""


class ProtocolError(PredictorError):
    """An external predictor broke the line protocol."""


class ScoreValidationError(PredictorError):
    """A score left the valid [0, 1] range."""
