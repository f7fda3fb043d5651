"""Causal costs of violating locality, free choice or the arrow of time in Bell experiments."""

__version__ = "0.1.0"

from .estimators import CausalFraction, CausalModelEstimator, FrugalSimulator
from .exceptions import (
    BellCostError,
    CapacityError,
    DegenerateSetting,
    IndependenceViolation,
    NonConvergence,
    NormalizationError,
    ParseError,
    StructureError,
)
from .fraction import FractionResult, FrugalDecomposition, causal_fraction, frugal_decomposition
from .models import (
    CausalModel,
    HiddenKind,
    HiddenSpace,
    Structure,
    construct_nf,
    construct_nl,
    construct_r,
    decompose_deterministic,
    eval_statistics,
    sample_trial,
    sample_trials,
)
from .quantum import QuantumScenario, born_behaviour, chsh_value, named_behaviour, named_statistics, pr_box
from .simplex import lp_solve
from .simulator import estimate_statistics, run_frugal
from .statistics import (
    Behaviour,
    Cardinalities,
    SettingsDistribution,
    Statistics,
    alice_marginal,
    check_assumption1,
    validate,
)
