"""Exception types shared across the toolkit.

Everything raised here is an input/usage problem; the CLI maps any
SimlangError to exit code 2 and reserves 1 for genuine internal failures.
"""


class SimlangError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SimlangError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None, source=None):
        prefix = ""
        if source is not None:
            prefix += f"{source}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.line = line
        self.source = source


class LabelSpaceError(SimlangError):
    """Unknown or inconsistent labels / group assignments."""


class InsufficientDataError(SimlangError):
    """Not enough instances to satisfy a sampling or training request."""


class AlignmentError(SimlangError):
    """Parallel files or sequences disagree in length."""


class ConfigError(SimlangError):
    """Invalid feature, model, or report configuration."""
