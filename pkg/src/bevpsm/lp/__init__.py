"""Linear programming engine: problem container, standard form, simplex, MPS I/O, validation."""

from .problem import Block, LpInputError, LpProblem
from .simplex import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED, RawSolution,
                      dual_bound, solve_simplex)
from .standard import StandardLp, from_standard_form, to_standard_form

__all__ = [
    "Block", "LpInputError", "LpProblem", "RawSolution", "StandardLp",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "ITERATION_LIMIT", "TIME_LIMIT",
    "dual_bound", "from_standard_form", "solve_simplex", "to_standard_form",
]

from .mps import (MpsFormatError, SolutionFileError, read_external_solution, read_mps,  # noqa: E402
                  write_mps, write_solution)
from .validate import FeasibilityReport, validate_solution  # noqa: E402

__all__ += [
    "MpsFormatError", "SolutionFileError", "read_external_solution", "read_mps", "write_mps",
    "write_solution", "FeasibilityReport", "validate_solution",
]
