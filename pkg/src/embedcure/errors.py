"""Exception hierarchy shared across the toolkit.

Errors are grouped by the CLI exit code they map to: input/format problems
(exit 2), numeric failures (exit 3), and I/O problems (exit 4).
"""


class EmbedcureError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class FormatError(EmbedcureError):
    """A file does not conform to its documented binary/JSON layout."""

    exit_code = 2


class ValidationError(EmbedcureError):
    """Data violates an invariant (non-finite value, duplicate id, ...)."""

    exit_code = 2


class AlignmentError(EmbedcureError):
    """A feature matrix and manifest disagree on ids or ordering."""

    exit_code = 2


class MergeError(EmbedcureError):
    """Two datasets cannot be merged (e.g. feature dimension mismatch)."""

    exit_code = 2


class ParameterError(EmbedcureError):
    """An operation received an out-of-range or inconsistent parameter."""

    exit_code = 2


class NumericError(EmbedcureError):
    """A numeric routine failed to converge or produced non-finite output."""

    exit_code = 3


class IOFailure(EmbedcureError):
    """Reading or writing an artifact failed at the filesystem level."""

    exit_code = 4


class StageError(EmbedcureError):
    """A pipeline stage failed; carries the stage name and the cause."""

    exit_code = 1

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        if isinstance(cause, EmbedcureError):
            self.exit_code = cause.exit_code
