"""Exception hierarchy shared across the pipeline and the login service."""


class EgopassError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EgopassError):
    """A config value or mode combination is unusable (bad parameters,
    fixation mode without a fixation log, pyramid deeper than the image)."""


class CorpusEmptyError(EgopassError):
    """No frames to work with: empty directory, or a filter removed everything."""


class FrameReadError(EgopassError):
    """A specific frame file could not be read or decoded."""

    def __init__(self, path, reason=""):
        self.path = path
        super().__init__(f"cannot read frame {path}" + (f": {reason}" if reason else ""))


class DegenerateInputError(EgopassError):
    """Input raster too small for the operation (filter support, 3x3 census)."""


class InsufficientDataError(EgopassError):
    """Not enough samples for a statistic or a model fit."""


class ShapeError(EgopassError):
    """Vector length does not match the fitted model."""


class InsufficientVariationError(EgopassError):
    """Too few distinct scenes to build a challenge; caller should extend the
    history window or fall back to another authentication scheme."""


class InvalidAnswerError(EgopassError):
    """Malformed answer payload (not a permutation, unknown slot index).
    Does not count as an attempt."""


class PairingConflictError(EgopassError):
    """Device already paired."""


class AuthenticationError(EgopassError):
    """Missing or wrong credential / shared secret."""


class SessionNotFoundError(EgopassError):
    """Unknown session id."""


class SessionStateError(EgopassError):
    """Operation not legal in the session's current state."""
