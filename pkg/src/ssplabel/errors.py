"""Exception hierarchy. Each error carries the category the CLI reports."""


class SSPError(Exception):
    category = "error"


class ConfigError(SSPError, ValueError):
    category = "config"


class FormatError(SSPError, ValueError):
    category = "format"


class MalformedFileError(FormatError):
    pass


class DimensionMismatchError(FormatError):
    pass


class ClassIdOutOfRangeError(FormatError):
    pass


class NonFiniteScoreError(FormatError):
    pass


class EmptyPointSetError(SSPError, ValueError):
    category = "degenerate"


class DegenerateMaskError(SSPError, ValueError):
    category = "degenerate"


class InfeasibleSceneError(SSPError, RuntimeError):
    category = "infeasible"


class SeedOutOfBoundsError(SSPError, ValueError):
    category = "config"
