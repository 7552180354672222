"""Exception hierarchy shared across the package.

Each class carries the CLI exit code it maps to.
"""


class SLMCError(Exception):
    exit_code = 4


class ConfigError(SLMCError, ValueError):
    exit_code = 1


class DomainError(SLMCError, ValueError):
    exit_code = 1


class InvalidModelError(ConfigError):
    pass


class InconclusiveError(SLMCError):
    exit_code = 2


class TruncationError(SLMCError):
    exit_code = 3


class NumericalError(SLMCError, ArithmeticError):
    exit_code = 4


class SingularSystemError(NumericalError):
    pass


class OscillationError(NumericalError):
    pass


class PreconditionError(SLMCError):
    exit_code = 1
