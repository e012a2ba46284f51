"""Exception hierarchy; the CLI maps each class to its own exit code."""


class BevPsmError(Exception):
    pass


class ConfigurationError(BevPsmError, ValueError):
    """A configuration file or table is malformed or violates its schema."""


class InputError(BevPsmError, ValueError):
    """Arguments are inconsistent (lengths, ranges, unknown identifiers)."""


class GenerationError(BevPsmError):
    """A synthetic profile cannot be made energy-feasible."""


class SolverError(BevPsmError):
    """The LP solver did not return an optimal solution."""
