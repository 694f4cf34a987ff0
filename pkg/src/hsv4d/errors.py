"""Exception types shared across the toolkit."""


class Hsv4dError(Exception):
    """Base class for all toolkit errors."""


class DomainError(Hsv4dError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class GeometryError(Hsv4dError, ValueError):
    """A phantom or acquisition geometry is infeasible (e.g. object leaves the grid)."""


class FormatError(Hsv4dError, ValueError):
    """A binary file does not conform to its declared format.

    ``offset`` is the byte offset at which the problem was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class DegenerateInputError(Hsv4dError, ValueError):
    """A metric received input on which it is undefined (e.g. constant volume)."""


class SamplingError(Hsv4dError, ValueError):
    """A bootstrap subset request cannot be satisfied."""


class SolverError(Hsv4dError, ValueError):
    """Reconstruction inputs are inconsistent (detector dims, empty angle list, ...)."""


class ConfigError(Hsv4dError, ValueError):
    """A study configuration file or key is invalid.

    ``line`` is the 1-based line number in the config file when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PipelineError(Hsv4dError, RuntimeError):
    """A study stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
