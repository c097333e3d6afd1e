"""Exception hierarchy for MAGPIE."""

from typing import Optional


class MagpieError(Exception):
    """Base class for every domain error raised by MAGPIE."""


class ParseError(MagpieError, ValueError):
    """Malformed patch text."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownLocation(MagpieError, KeyError):
    """An edit addresses a node or parameter absent from the original model."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown location"


class XmlError(MagpieError, ValueError):
    """A target file is not well-formed XML."""


class SpaceError(MagpieError, ValueError):
    """A parameter space violates one of its invariants."""


class MissingFile(MagpieError, FileNotFoundError):
    """A file referenced by the scenario does not exist."""


class EmptySpace(MagpieError, ValueError):
    """Sampling was requested from an edit family with no possible edits."""


class UnknownParameter(MagpieError, KeyError):
    """An assignment names a parameter that the space does not declare."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown parameter"


class OutOfDomainValue(MagpieError, ValueError):
    """An assignment gives a parameter a value outside its domain."""


class ScenarioError(MagpieError, ValueError):
    """The scenario cannot drive an evaluation (e.g. no run command)."""


class WorkspaceError(MagpieError):
    """A variant work directory could not be created or cleaned."""


class ArityMismatch(MagpieError, ValueError):
    """Two fitness values with different numbers of objectives were compared."""


class ZeroMean(MagpieError, ValueError):
    """Coefficient of variation is undefined for a zero mean."""


class BaselineFailure(MagpieError):
    """The unmodified software does not evaluate cleanly."""


class FoldError(MagpieError, ValueError):
    """The fold count does not fit the training set."""


class ZeroBaseline(MagpieError, ValueError):
    """Relative improvement is undefined against a zero baseline."""


class ConfigError(MagpieError, ValueError):
    """Invalid scenario configuration."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class SpaceTooLarge(MagpieError, ValueError):
    """Exhaustive enumeration would exceed the configured cap."""


class CombineError(MagpieError, ValueError):
    """Patch combination needs at least two patches."""
