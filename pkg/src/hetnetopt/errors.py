"""Exception types shared across the package."""


class HetNetError(Exception):
    """Base class for all package errors."""


class ConfigError(HetNetError):
    """Inconsistent or invalid generator configuration."""


class ParseError(HetNetError):
    """Malformed scenario file; message names the offending field."""


class NonPositiveRate(HetNetError):
    """A served user ended up with zero rate, so the log utility is -inf."""


class NoCandidate(HetNetError):
    """A user has no base station with a finite association coefficient."""


class NonConvergence(HetNetError):
    """Raised only when a solver is asked to treat a flagged result as fatal."""


class EmptyActiveSet(HetNetError):
    """Load/power solve invoked with no fully loaded base station."""


class TooLarge(HetNetError):
    """Exhaustive oracle invoked beyond its instance-size guard."""


class BracketFailure(HetNetError):
    """Monotone bisection could not establish a sign change (NaN input)."""


class NoRoot(HetNetError):
    """Cell fraction equation has one sign over the bracket; caller damps the dual step."""


class DomainError(HetNetError):
    """Argument outside the mathematical domain of the function."""


class UnknownAlgorithm(HetNetError):
    """Algorithm identifier not in the supported pipeline list."""


class EmptySamples(HetNetError):
    """Empirical CDF requested over an empty sample set."""


class DegenerateQuantile(HetNetError):
    """Rate-gain baseline quantile is zero; the ratio is undefined."""


class InvariantViolation(HetNetError):
    """An internal consistency assertion failed (reported via exit code 4)."""
