"""Exception hierarchy shared across the package.

Two broad families matter for the CLI exit-code contract: usage errors
(malformed inputs, mismatched cutoffs, out-of-range arguments of the API
itself) and math errors (singular series, non-divisible diagonals,
overlapping configurations) that signal the computation cannot proceed on
the given data.
"""


class CE2Error(Exception):
    """Base class for all package errors."""


class UsageError(CE2Error):
    """API misuse: mismatched cutoffs, out-of-range bounds, bad arguments."""


class DomainError(CE2Error):
    """A numeric argument lies outside its required domain (e.g. |z| >= 1)."""


class SingularSeriesError(CE2Error):
    """Reciprocal or composition hit a vanishing leading coefficient."""


class NotDivisibleError(CE2Error):
    """Bivariate series does not vanish on the diagonal within tolerance."""


class ConfigurationError(CE2Error):
    """Disk images overlap, touch where forbidden, or are degenerate."""


class OracleScaleError(UsageError):
    """A brute-force oracle was invoked beyond its intended small sizes."""


class CutoffError(UsageError):
    """Data does not fit inside the requested truncation cutoffs."""
