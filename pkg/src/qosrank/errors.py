"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config/usage problems -> 1,
data-file problems -> 2, total allocation failure -> 3.
"""


class QosRankError(Exception):
    """Base class for all qosrank errors."""


class ConfigError(QosRankError):
    """Invalid experiment or scenario configuration."""


class DataError(QosRankError):
    """Problem with an input data file."""


class ParseError(DataError):
    """Malformed CSV content; the message names the offending line."""


class DuplicateKeyError(DataError):
    """Two observations for the same (user, service) cell."""


class BadValueError(DataError):
    """Non-finite QoS value encountered at ingestion."""


class DomainError(QosRankError):
    """Operation invoked outside its domain (unknown ids, i == j, ...)."""


class AllocationError(QosRankError):
    """No virtual machine could be placed at all."""

    def __init__(self, offenders):
        self.offenders = list(offenders)
        super().__init__(
            "no VM could be placed; offending VM ids: %s" % self.offenders
        )
