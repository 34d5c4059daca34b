"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DelayPdeError(Exception):
    """Base class for all errors raised by delaypde."""


class InvalidArgument(DelayPdeError, ValueError):
    pass


class IncommensurateDelay(DelayPdeError, ValueError):
    """The delay cannot be placed on a grid node for the requested resolution."""

    def __init__(self, message: str, axis: str = "x", candidates=()):
        super().__init__(message)
        self.axis = axis
        # (cell_width, num_cells) pairs that would satisfy the snap tolerance
        self.candidates = tuple(candidates)


class IndexOutOfRange(DelayPdeError, IndexError):
    pass


class ParseError(DelayPdeError, ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.text = text


class UnknownVariable(ParseError):
    def __init__(self, name: str, offset: int, allowed, text: str = ""):
        allowed_s = ", ".join(sorted(allowed)) or "none"
        super().__init__(f"unknown variable {name!r}; allowed: {allowed_s}", offset, text)
        self.name = name


class EvalDomainError(DelayPdeError, ArithmeticError):
    """Division by zero, sqrt of a negative number, or similar."""

    def __init__(self, message: str, point: dict | None = None):
        if point:
            where = ", ".join(f"{k}={v!r}" for k, v in sorted(point.items()))
            message = f"{message} at ({where})"
        super().__init__(message)
        self.point = point


class IllPosedProblem(DelayPdeError):
    pass


class StrictCflViolation(DelayPdeError):
    pass


class NumericalAbort(DelayPdeError):
    """A time loop stopped early.

    ``history`` holds the snapshots captured before the abort and ``step`` the
    index of the offending time level.
    """

    def __init__(self, message: str, step: int, history=None):
        super().__init__(message)
        self.step = step
        self.history = history


class BlowUp(NumericalAbort):
    pass


class Unstable(NumericalAbort):
    pass


class MeshMismatch(DelayPdeError, ValueError):
    pass


class ConfigError(DelayPdeError):
    def __init__(self, message: str, section: str | None = None, key: str | None = None,
                 line: int | None = None):
        loc = []
        if section is not None:
            loc.append(f"[{section}]")
        if key is not None:
            loc.append(key)
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{' '.join(loc)}: {message}" if loc else message)
        self.section = section
        self.key = key
        self.line = line
