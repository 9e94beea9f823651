"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DecodeFailure(RuntimeError):
    """Phase-4 decoding is impossible (e.g. a zero channel estimate)."""


class CalibrationError(RuntimeError):
    """No guard band on the search grid meets the requested error target."""


class UndefinedLLR(ArithmeticError):
    """Both bit hypotheses carry zero probability mass."""


class InsufficientData(ValueError):
    """Too few samples for a stable plug-in estimate."""


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition on protocol state."""


class AlistParseError(ValueError):
    """Malformed alist file.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int
        1-indexed line number where the problem was detected.
    """

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(ValueError):
    """Invalid experiment configuration."""
