"""Exception types shared across the engine."""


class PromptAxesError(Exception):
    """Base class for every error raised by this package."""


class AxisValidationError(PromptAxesError):
    """An axis set violates the axis-file schema or its invariants."""


class InvalidSpecError(PromptAxesError):
    """A prompt spec does not fit the axis set it is used with."""


class EmptyRenderError(PromptAxesError):
    """Every slot rendered empty, leaving no prompt text."""


class MissingScoreError(PromptAxesError):
    """A required prior score is absent from the score table."""


class ParseError(PromptAxesError):
    """A data file could not be parsed into the documented subset."""


class DanglingAnnotationError(ParseError):
    """An annotation references an image id that does not exist."""


class ZeroAreaBoxError(ParseError):
    """A ground-truth box has non-positive width or height."""


class ScoreOutOfRangeError(ParseError):
    """A detection score is outside [0, 1] or not finite."""


class MissingPredictionError(PromptAxesError):
    """A cached backend has no stored detections for an (image, prompt) pair."""


class RemoteUnavailableError(PromptAxesError):
    """A remote detector could not be reached after retries."""


class RemoteSchemaError(PromptAxesError):
    """A remote detector replied with a payload that violates the wire schema."""


class BackgroundUnsupportedError(PromptAxesError):
    """Background-class regularization was required of a backend lacking it."""


class UnknownPromptError(PromptAxesError):
    """Strict evaluation was asked for a prompt absent from the detection set."""


class SchemaViolationError(PromptAxesError):
    """A translated axis document stayed invalid after all retry attempts."""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class EndpointUnavailableError(PromptAxesError):
    """The language-model endpoint could not be reached or replied garbage."""


class EmptyLedgerError(PromptAxesError):
    """A report was requested over a ledger with no trial records."""


class ConfigError(PromptAxesError):
    """A run configuration is self-contradictory or references missing files."""


class PipelineError(PromptAxesError):
    """A run could not proceed, e.g. the baseline trial failed."""
