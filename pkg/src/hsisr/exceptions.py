"""Exception hierarchy for the hsisr package.

Two families map onto the CLI exit codes: :class:`ValidationError` (bad
files, shapes, or configuration; exit code 2) and :class:`NumericalError`
(the computation itself failed; exit code 3).
"""


class HsisrError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HsisrError):
    """Input, configuration, or file-contract violation."""


class NumericalError(HsisrError):
    """Numerical failure while computing a result."""


class FormatError(ValidationError):
    """Tensor container file is malformed or has an unsupported dtype."""


class ShapeError(ValidationError):
    """Tensor rank or dimensions violate an operation's contract."""


class DataError(ValidationError):
    """Tensor values violate an invariant (non-finite, out of range)."""


class IoError(ValidationError):
    """File system failure while reading or writing an artifact."""


class ConfigError(ValidationError):
    """A configuration value is outside its allowed domain."""


class KernelTooLargeError(ValidationError):
    """Blur kernel does not fit strictly inside twice the image extent."""


class WorkdirLockedError(ValidationError):
    """Another pipeline invocation holds the work directory lock."""


class DegenerateInputError(NumericalError):
    """Input is degenerate for the requested operation (e.g. all-zero)."""


class RankDeficientError(NumericalError):
    """Residual collapsed before the requested number of endmembers."""


class SingularSystemError(NumericalError):
    """Endmember matrix is rank deficient or too ill-conditioned to solve."""


class CoverageError(NumericalError):
    """Dead-leaves generation hit the leaf cap with pixels still uncovered."""

    def __init__(self, message: str, uncovered: int = 0):
        super().__init__(message)
        self.uncovered = uncovered
