"""Exception hierarchy shared by all modules.

Every exception carries a stable ``code`` that the command-line front end
reports in its machine-readable error output.
"""


class BellCostError(Exception):
    code = "error"


class StructureError(BellCostError, ValueError):
    """Tensor shapes or cardinalities are inconsistent."""

    code = "structure"


class NormalizationError(BellCostError, ValueError):
    """A probability table does not sum to one or has negative entries."""

    code = "validation"


class IndependenceViolation(BellCostError, ValueError):
    """The statistics break ``a _|_ y | x`` or ``x _|_ y``."""

    code = "independence"


class DegenerateSetting(BellCostError, ValueError):
    """A setting value has zero marginal probability where one is required."""

    code = "degenerate-setting"

    def __init__(self, message, setting=None):
        super().__init__(message)
        self.setting = setting


class CapacityError(BellCostError):
    """The hidden-variable or strategy space is too large to enumerate."""

    code = "capacity"


class SolverError(BellCostError):
    code = "solver"


class Infeasible(SolverError):
    code = "infeasible"


class Unbounded(SolverError):
    code = "unbounded"


class NonConvergence(SolverError):
    code = "nonconvergence"


class ParseError(BellCostError, ValueError):
    """Input document is not valid JSON or does not follow the schema."""

    code = "parse"
